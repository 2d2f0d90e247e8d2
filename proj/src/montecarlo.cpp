#include "spinspec/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "spinspec/parser.hpp"
#include "spinspec/validate.hpp"

namespace spinspec {

namespace {

// splitmix64: seeds the working generator
uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna), fixed across platforms
struct Xoshiro {
    uint64_t s[4];

    explicit Xoshiro(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s) w = splitmix64(x);
    }
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    uint64_t next() {
        uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
    /// uniform integer in [0, n) without modulo bias (rejection)
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }
};

// sampling weights of a distribution as integers over a u64 denominator
struct SampleTable {
    uint64_t den = 0;
    std::vector<uint64_t> cumulative;  // inclusive prefix sums
};

SampleTable make_sample_table(const Distribution& dist) {
    SampleTable t;
    const Int& den = dist.weight_den();
    if (!den.fits_long())
        throw Error(ErrorKind::Internal,
                    "distribution denominator does not fit 64 bits for sampling");
    t.den = static_cast<uint64_t>(den.to_long());
    uint64_t acc = 0;
    for (const Int& w : dist.weight_nums()) {
        if (!w.fits_long())
            throw Error(ErrorKind::Internal, "distribution weight does not fit 64 bits");
        acc += static_cast<uint64_t>(w.to_long());
        t.cumulative.push_back(acc);
    }
    return t;
}

StateId sample(const Distribution& dist, const SampleTable& table, Xoshiro& rng) {
    uint64_t u = rng.below(table.den);
    size_t lo = 0, hi = table.cumulative.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (u < table.cumulative[mid]) hi = mid;
        else lo = mid + 1;
    }
    return dist.support[lo].first;
}

}  // namespace

const RewardRule* RewardSpec::match(const ActionLabel& label) const {
    for (const auto& r : rules)
        if (r.action == label.name) return &r;
    return nullptr;
}

RewardSpec RewardSpec::parse(const std::string& text, const ModelSpec& model) {
    RewardSpec spec;
    bool any_marker = false;
    size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    while (true) {
        skip_ws();
        if (pos >= text.size()) break;
        RewardRule rule;
        if (text[pos] == '@') {
            rule.round_marker = true;
            any_marker = true;
            ++pos;
        }
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        std::string name = text.substr(start, pos - start);
        if (name.empty())
            throw Error(ErrorKind::Syntax, "reward rule needs an action name");
        rule.action = intern(name);
        const ActionDecl* decl = model.find_action(rule.action);
        if (!decl)
            throw Error(ErrorKind::UnknownName,
                        "reward rule action `" + name + "` is not declared by the model");
        skip_ws();
        if (pos < text.size() && text[pos] == '(') {
            ++pos;
            for (;;) {
                skip_ws();
                size_t vstart = pos;
                while (pos < text.size() &&
                       (isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                    ++pos;
                std::string var = text.substr(vstart, pos - vstart);
                if (var.empty()) throw Error(ErrorKind::Syntax, "bad reward rule binder");
                rule.vars.push_back(intern(var));
                skip_ws();
                if (pos < text.size() && text[pos] == ',') {
                    ++pos;
                    continue;
                }
                break;
            }
            if (pos >= text.size() || text[pos] != ')')
                throw Error(ErrorKind::Syntax, "expected `)` in reward rule");
            ++pos;
        }
        if (rule.vars.size() != decl->param_sorts.size())
            throw Error(ErrorKind::ArityMismatch,
                        "reward rule for `" + name + "` must bind " +
                            std::to_string(decl->param_sorts.size()) + " argument(s)");
        skip_ws();
        if (pos >= text.size() || text[pos] != ':')
            throw Error(ErrorKind::Syntax, "expected `:` after the reward pattern");
        ++pos;
        size_t estart = pos;
        int depth = 0;
        while (pos < text.size() && (depth > 0 || (text[pos] != ',' && text[pos] != ';'))) {
            if (text[pos] == '(' || text[pos] == '{') ++depth;
            if (text[pos] == ')' || text[pos] == '}') --depth;
            ++pos;
        }
        rule.gain = parse_expr_text(text.substr(estart, pos - estart));
        TypeContext tctx{&model.sorts, &model.functions, {}};
        for (size_t i = 0; i < rule.vars.size(); ++i)
            tctx.vars.emplace_back(rule.vars[i], decl->param_sorts[i]);
        Sort g = typecheck_expr(*rule.gain, tctx);
        if (!g.is_numeric())
            throw Error(ErrorKind::TypeMismatch, "reward gain must be numeric");
        spec.rules.push_back(std::move(rule));
        if (pos < text.size()) ++pos;  // separator
    }
    if (!any_marker)
        for (auto& r : spec.rules) r.round_marker = true;
    if (spec.rules.empty()) throw Error(ErrorKind::Syntax, "empty reward specification");
    return spec;
}

Estimate simulate(const Plts& plts, const Policy& policy, const RewardSpec& rewards,
                  long rounds, long episodes, uint64_t seed,
                  std::vector<double>* per_episode, int threads) {
    if (rounds <= 0 || episodes <= 0)
        throw Error(ErrorKind::Validation, "rounds and episodes must be positive");
    if ((policy.kind == Policy::FromTable || policy.kind == Policy::Minimize)) {
        if (!policy.table) throw Error(ErrorKind::IncompletePolicy, "policy table missing");
        if (rounds > policy.table->horizon)
            throw Error(ErrorKind::IncompletePolicy,
                        "episode length " + std::to_string(rounds) +
                            " exceeds the table's horizon " +
                            std::to_string(policy.table->horizon) +
                            "; re-extract the strategy for this length");
    }

    // per-distribution sampling tables, built once
    std::vector<SampleTable> tables(plts.dist_count());
    std::vector<char> built(plts.dist_count(), 0);
    auto table_for = [&](DistId d) -> const SampleTable& {
        if (!built[static_cast<size_t>(d)]) {
            tables[static_cast<size_t>(d)] = make_sample_table(plts.dist(d));
            built[static_cast<size_t>(d)] = 1;
        }
        return tables[static_cast<size_t>(d)];
    };
    // eager build keeps the lambda race-free under threads
    for (DistId d = 0; d < static_cast<DistId>(plts.dist_count()); ++d) table_for(d);

    EvalCache cache;
    Env base{nullptr, &plts.model->functions, &cache};

    // per-round gains are tiny rationals; doubles at episode granularity
    std::vector<double> unit_samples;
    bool per_round_units = episodes == 1;

    auto run_episode = [&](long episode_index, std::vector<double>* round_gains) -> double {
        // substream per episode: splitmix64 of (seed, index) seeds xoshiro
        uint64_t mix = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(episode_index + 1));
        Xoshiro rng(splitmix64(mix));
        long done = 0;
        Rat total(0);
        Rat round_gain(0);
        StateId current = sample(plts.dist(plts.initial()), table_for(plts.initial()), rng);
        while (done < rounds) {
            const auto& ts = plts.transitions(current);
            if (ts.empty()) break;  // deadlock: episode over
            const Transition* chosen = &ts[0];
            if (ts.size() > 1) {
                switch (policy.kind) {
                    case Policy::UniformRandom:
                        chosen = &ts[rng.below(ts.size())];
                        break;
                    case Policy::FromTable:
                    case Policy::Minimize: {
                        const ActionLabel* want = policy.table->choice_at(current, done);
                        if (!want)
                            throw Error(ErrorKind::IncompletePolicy,
                                        "no table entry for state " +
                                            std::to_string(current) + " at round " +
                                            std::to_string(done));
                        chosen = nullptr;
                        for (const auto& t : ts)
                            if (t.label == *want) chosen = &t;
                        if (!chosen)
                            throw Error(ErrorKind::IncompletePolicy,
                                        "table entry " + want->str() +
                                            " is not enabled in state " +
                                            std::to_string(current));
                        break;
                    }
                }
            }
            if (const RewardRule* rule = rewards.match(chosen->label)) {
                Bindings binds;
                for (size_t i = 0; i < rule->vars.size(); ++i)
                    binds.emplace_back(rule->vars[i], chosen->label.args[i]);
                Env env{&binds, base.funcs, base.cache};
                Value g = eval_expr(env, *rule->gain);
                Rat delta = g.to_rat();
                total += delta;
                round_gain += delta;
                if (rule->round_marker) {
                    ++done;
                    if (round_gains) round_gains->push_back(round_gain.to_double());
                    round_gain = Rat(0);
                }
            } else if (rewards.rules.empty()) {
                // unreachable; parse refuses empty specs
            }
            current = sample(plts.dist(chosen->dist), table_for(chosen->dist), rng);
        }
        if (done == 0)
            throw Error(ErrorKind::Validation, "episode finished before any round completed");
        return (total / Rat(done)).to_double();
    };

    std::vector<double> episode_means(static_cast<size_t>(episodes));
    if (per_round_units) {
        std::vector<double> round_gains;
        run_episode(0, &round_gains);
        unit_samples = std::move(round_gains);
        episode_means[0] =
            std::accumulate(unit_samples.begin(), unit_samples.end(), 0.0) /
            static_cast<double>(unit_samples.size());
    } else {
        int workers = std::max(1, threads);
        if (workers == 1) {
            for (long e = 0; e < episodes; ++e)
                episode_means[static_cast<size_t>(e)] = run_episode(e, nullptr);
        } else {
            std::vector<std::thread> pool;
            std::atomic<long> next{0};
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (;;) {
                        long e = next.fetch_add(1);
                        if (e >= episodes) return;
                        episode_means[static_cast<size_t>(e)] = run_episode(e, nullptr);
                    }
                });
            for (auto& t : pool) t.join();
        }
        unit_samples = episode_means;
    }

    if (per_episode) *per_episode = episode_means;

    Estimate est;
    est.seed = seed;
    est.n = static_cast<long>(unit_samples.size());
    double sum = 0;
    for (double v : unit_samples) sum += v;
    est.mean = sum / static_cast<double>(est.n);
    if (est.n > 1) {
        double ss = 0;
        for (double v : unit_samples) ss += (v - est.mean) * (v - est.mean);
        est.se = std::sqrt(ss / static_cast<double>(est.n - 1)) /
                 std::sqrt(static_cast<double>(est.n));
    }
    return est;
}

namespace {

Rat expected_reward(const Plts& plts, const RewardSpec& rewards, StateId s, int rounds_left,
                    std::vector<char>& on_path, Env& env) {
    const auto& ts = plts.transitions(s);
    if (ts.empty()) return Rat(0);
    if (ts.size() > 1)
        throw Error(ErrorKind::Validation,
                    "enumeration oracle hit a nondeterministic choice at state " +
                        std::to_string(s));
    if (on_path[static_cast<size_t>(s)])
        throw Error(ErrorKind::CyclicModel,
                    "cycle through state " + std::to_string(s) + " within the horizon");
    on_path[static_cast<size_t>(s)] = 1;
    const Transition& t = ts[0];
    Rat gain(0);
    int next_left = rounds_left;
    if (const RewardRule* rule = rewards.match(t.label)) {
        Bindings binds;
        for (size_t i = 0; i < rule->vars.size(); ++i)
            binds.emplace_back(rule->vars[i], t.label.args[i]);
        Env inner{&binds, env.funcs, env.cache};
        gain = eval_expr(inner, *rule->gain).to_rat();
        if (rule->round_marker) --next_left;
    }
    Rat acc = gain;
    if (next_left > 0) {
        for (const auto& [target, p] : plts.dist(t.dist).support)
            acc += p * expected_reward(plts, rewards, target, next_left, on_path, env);
    }
    on_path[static_cast<size_t>(s)] = 0;
    return acc;
}

}  // namespace

Rat enumerate_exact(const Plts& plts, const RewardSpec& rewards, int horizon) {
    EvalCache cache;
    Env env{nullptr, &plts.model->functions, &cache};
    std::vector<char> on_path(plts.state_count(), 0);
    Rat acc(0);
    for (const auto& [s, p] : plts.dist(plts.initial()).support)
        acc += p * expected_reward(plts, rewards, s, horizon, on_path, env);
    return acc;
}

}  // namespace spinspec
