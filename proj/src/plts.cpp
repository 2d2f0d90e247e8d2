#include "spinspec/plts.hpp"

#include <algorithm>

#include "spinspec/printer.hpp"
#include "spinspec/validate.hpp"

namespace spinspec {

int ActionLabel::compare(const ActionLabel& a, const ActionLabel& b) {
    if (a.name != b.name) {
        const std::string& an = name_of(a.name);
        const std::string& bn = name_of(b.name);
        if (an != bn) return an < bn ? -1 : 1;
    }
    size_t n = std::min(a.args.size(), b.args.size());
    for (size_t i = 0; i < n; ++i)
        if (int c = Value::compare(a.args[i], b.args[i])) return c;
    if (a.args.size() != b.args.size()) return a.args.size() < b.args.size() ? -1 : 1;
    return 0;
}

size_t ActionLabel::hash() const {
    size_t h = static_cast<size_t>(name) * 0x9e3779b97f4a7c15ULL;
    for (const auto& v : args) h = hash_combine(h, v.hash());
    return h;
}

std::string ActionLabel::str() const {
    std::string s = name_of(name);
    if (!args.empty()) {
        s += "(";
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) s += ", ";
            s += args[i].str();
        }
        s += ")";
    }
    return s;
}

const std::vector<Int>& Distribution::weight_nums() const {
    if (!weights_done_) weight_den();
    return wnum_;
}

const Int& Distribution::weight_den() const {
    if (!weights_done_) {
        mpz_set_ui(wden_.raw(), 1);
        for (const auto& [s, p] : support) {
            (void)s;
            mpz_lcm(wden_.raw(), wden_.raw(), mpq_denref(p.raw()));
        }
        wnum_.resize(support.size());
        for (size_t i = 0; i < support.size(); ++i) {
            mpz_divexact(wnum_[i].raw(), wden_.raw(), mpq_denref(support[i].second.raw()));
            mpz_mul(wnum_[i].raw(), wnum_[i].raw(), mpq_numref(support[i].second.raw()));
        }
        weights_done_ = true;
    }
    return wden_;
}

size_t Distribution::hash() const {
    size_t h = 0x6a09e667f3bcc909ULL;
    for (const auto& [s, p] : support) {
        h = hash_combine(h, static_cast<size_t>(s));
        h = hash_combine(h, p.hash());
    }
    return h;
}

StateId Plts::add_state(std::string config) {
    State st;
    st.config = std::move(config);
    st.config_rendered = true;
    states_.push_back(std::move(st));
    return static_cast<StateId>(states_.size() - 1);
}

StateId Plts::add_state(const ProcessTerm* term, std::vector<std::pair<NameId, Value>> env) {
    State st;
    st.term = term;
    st.env = std::move(env);
    states_.push_back(std::move(st));
    return static_cast<StateId>(states_.size() - 1);
}

DistId Plts::add_distribution(Distribution d) {
    size_t h = d.hash();
    auto it = dist_intern_.find(h);
    if (it != dist_intern_.end()) {
        for (DistId id : it->second)
            if (dists_[static_cast<size_t>(id)] == d) return id;
    }
    dists_.push_back(std::move(d));
    DistId id = static_cast<DistId>(dists_.size() - 1);
    dist_intern_[h].push_back(id);
    return id;
}

void Plts::add_transition(StateId s, ActionLabel label, DistId dist) {
    states_.at(static_cast<size_t>(s)).transitions.push_back({std::move(label), dist});
}

void Plts::sort_transitions(StateId s) {
    auto& ts = states_.at(static_cast<size_t>(s)).transitions;
    std::sort(ts.begin(), ts.end(), [](const Transition& a, const Transition& b) {
        if (int c = ActionLabel::compare(a.label, b.label)) return c < 0;
        return a.dist < b.dist;
    });
    // identical (label, dist) alternatives collapse: choice is a set
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](const Transition& a, const Transition& b) {
                             return a.label == b.label && a.dist == b.dist;
                         }),
             ts.end());
}

const std::string& Plts::state_config(StateId s) const {
    const State& st = states_.at(static_cast<size_t>(s));
    if (!st.config_rendered) {
        if (st.term) {
            // substitute the closure environment into the term for display
            std::vector<std::pair<NameId, Value>> bindings = st.env;
            struct Sub {
                static ProcPtr proc(const ProcessTerm& t,
                                    const std::vector<std::pair<NameId, Value>>& b) {
                    auto n = std::make_shared<ProcessTerm>(t);
                    std::vector<std::pair<NameId, Value>> inner = b;
                    for (NameId bd : t.binders)
                        inner.erase(std::remove_if(inner.begin(), inner.end(),
                                                   [&](const auto& kv) {
                                                       return kv.first == bd;
                                                   }),
                                    inner.end());
                    for (auto& a : n->args) a = subst_expr(a, inner);
                    if (n->cond) n->cond = subst_expr(n->cond, inner);
                    if (n->weight) n->weight = subst_expr(n->weight, inner);
                    for (auto& k : n->kids) k = proc(*k, inner);
                    return n;
                }
            };
            st.config = print_process(*Sub::proc(*st.term, bindings));
        } else {
            st.config = "<state>";
        }
        st.config_rendered = true;
    }
    return st.config;
}

std::vector<char> Plts::referenced_dists() const {
    std::vector<char> used(dists_.size(), 0);
    if (initial_ >= 0) used[static_cast<size_t>(initial_)] = 1;
    for (const auto& st : states_)
        for (const auto& t : st.transitions) used[static_cast<size_t>(t.dist)] = 1;
    return used;
}

size_t Plts::probabilistic_node_count() const {
    std::vector<char> used = referenced_dists();
    size_t n = 0;
    for (size_t i = 0; i < dists_.size(); ++i)
        if (used[i] && !dists_[i].is_point()) ++n;
    return n;
}

const std::vector<Transition>& successors(const Plts& plts, StateId s) {
    return plts.transitions(s);
}

std::string PltsStats::str() const {
    return "states=" + std::to_string(states) + " transitions=" + std::to_string(transitions) +
           " distributions=" + std::to_string(distributions) +
           " max_support=" + std::to_string(max_support) +
           " deadlocks=" + std::to_string(deadlocks);
}

PltsStats stats(const Plts& plts) {
    PltsStats out;
    out.action_states = static_cast<long>(plts.state_count());
    out.states = out.action_states + static_cast<long>(plts.probabilistic_node_count());
    std::vector<char> used = plts.referenced_dists();
    for (char u : used) out.distributions += u ? 1 : 0;
    for (StateId s = 0; s < static_cast<StateId>(plts.state_count()); ++s) {
        const auto& ts = plts.transitions(s);
        out.transitions += static_cast<long>(ts.size());
        if (ts.empty()) ++out.deadlocks;
    }
    for (DistId d = 0; d < static_cast<DistId>(plts.dist_count()); ++d)
        if (used[static_cast<size_t>(d)])
            out.max_support =
                std::max(out.max_support, static_cast<long>(plts.dist(d).support.size()));
    return out;
}

DistReport check_distributions(const Plts& plts) {
    DistReport report;
    std::vector<std::string> owner(plts.dist_count());
    if (plts.initial() >= 0) owner[static_cast<size_t>(plts.initial())] = "initial";
    for (StateId s = 0; s < static_cast<StateId>(plts.state_count()); ++s)
        for (const auto& t : plts.transitions(s))
            if (owner[static_cast<size_t>(t.dist)].empty())
                owner[static_cast<size_t>(t.dist)] = "state " + std::to_string(s);
    std::vector<char> used = plts.referenced_dists();
    for (DistId d = 0; d < static_cast<DistId>(plts.dist_count()); ++d) {
        if (!used[static_cast<size_t>(d)]) continue;
        Rat sum(0);
        bool positive = true;
        for (const auto& [sid, p] : plts.dist(d).support) {
            (void)sid;
            sum += p;
            positive = positive && p.sign() > 0;
        }
        if (sum != Rat(1) || !positive)
            report.violations.push_back(DistViolation{d, owner[static_cast<size_t>(d)], sum});
    }
    return report;
}

std::string dump_plts(const Plts& plts) {
    std::string out;
    auto dist_str = [&](DistId d) {
        std::string s = "{";
        const auto& supp = plts.dist(d).support;
        for (size_t i = 0; i < supp.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(supp[i].first) + ":" + supp[i].second.str();
        }
        return s + "}";
    };
    if (plts.initial() >= 0) out += "init -> " + dist_str(plts.initial()) + "\n";
    for (StateId s = 0; s < static_cast<StateId>(plts.state_count()); ++s)
        out += "state " + std::to_string(s) + " " + plts.state_config(s) + "\n";
    for (StateId s = 0; s < static_cast<StateId>(plts.state_count()); ++s)
        for (const auto& t : plts.transitions(s))
            out += "trans " + std::to_string(s) + " " + t.label.str() + " -> " +
                   dist_str(t.dist) + "\n";
    return out;
}

}  // namespace spinspec
