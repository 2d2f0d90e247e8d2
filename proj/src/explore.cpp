#include "spinspec/explore.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

namespace spinspec {

namespace {

constexpr int kMaxResolveDepth = 5000;

size_t hash_values(size_t seed, const std::vector<Value>& vals) {
    size_t h = seed;
    for (const auto& v : vals) h = hash_combine(h, v.hash());
    return h;
}

struct PtrValsKey {
    const void* ptr;
    std::vector<Value> vals;
    bool operator==(const PtrValsKey& o) const { return ptr == o.ptr && vals == o.vals; }
};
struct PtrValsHash {
    size_t operator()(const PtrValsKey& k) const {
        return hash_values(std::hash<const void*>()(k.ptr), k.vals);
    }
};

// Per-term signature plan: which argument expressions to evaluate and which
// raw variables to record so that configurations intern by observable data
// (e.g. display(reward(i1,i2,i3)) interns by the reward value).
struct SigPlan {
    std::vector<ExprPtr> eval_entries;
    std::vector<NameId> var_entries;
};

class Explorer {
  public:
    Explorer(ModelPtr model, const ExploreOptions& opts)
        : model_(std::move(model)), opts_(opts) {
        if (!model_->validated)
            throw Error(ErrorKind::Validation, "model must validate before exploration");
        plts_ = std::make_shared<Plts>();
        plts_->model = model_.get();
        plts_->model_ref = model_;
    }

    std::shared_ptr<Plts> run() {
        Bindings globs = glob_bindings();
        plts_->glob_values = globs;
        plts_->set_initial(resolve(model_->init.get(), globs, 0));
        while (!queue_.empty()) {
            StateId sid = queue_.front();
            queue_.pop_front();
            const ProcessTerm* term = plts_->state_term(sid);
            Bindings env = plts_->state_env(sid);  // copy: states_ may reallocate
            for (auto& [label, dist] : initials(term, env, 0))
                plts_->add_transition(sid, std::move(label), dist);
            plts_->sort_transitions(sid);
        }
        return plts_;
    }

  private:
    Bindings glob_bindings() {
        Bindings out;
        for (const auto& g : model_->globs) {
            auto it = opts_.globs.find(name_of(g.name));
            if (it != opts_.globs.end()) {
                out.emplace_back(g.name, coerce_value(it->second, g.sort, g.loc));
                continue;
            }
            out.emplace_back(g.name, default_value(g.sort));
        }
        return out;
    }

    Value default_value(const Sort& s) {
        switch (s.kind) {
            case SortKind::Bool: return Value(false);
            case SortKind::Enum: return enumerate_sort(model_->sorts, s)[0];
            case SortKind::Nat:
            case SortKind::Int: return Value(Int(0));
            case SortKind::Real: return Value(Rat(0));
            case SortKind::List:
                return Value(Value::List(std::make_shared<std::vector<Value>>()));
        }
        return Value(false);
    }

    Value eval(const Bindings& env, const Expr& e) {
        return eval_expr(Env{&env, &model_->functions, &cache_}, e);
    }

    // ---- free variables of terms ----
    const std::vector<NameId>& term_free(const ProcessTerm& t) {
        if (t.term_free_done) return t.term_free;
        std::set<NameId> acc;
        auto add_expr = [&](const ExprPtr& e) {
            if (e)
                for (NameId v : free_vars(*e)) acc.insert(v);
        };
        for (const auto& a : t.args) add_expr(a);
        add_expr(t.cond);
        std::set<NameId> inner;
        if (t.weight)
            for (NameId v : free_vars(*t.weight)) inner.insert(v);
        for (const auto& k : t.kids)
            for (NameId v : term_free(*k)) inner.insert(v);
        for (NameId b : t.binders) inner.erase(b);
        acc.insert(inner.begin(), inner.end());
        t.term_free.assign(acc.begin(), acc.end());
        t.term_free_done = true;
        return t.term_free;
    }

    // ---- signature plans ----
    const SigPlan& sig_plan(const ProcessTerm* t) {
        auto it = plans_.find(t);
        if (it != plans_.end()) return it->second;
        SigPlan plan;
        std::set<NameId> bound, raw;
        build_plan(*t, bound, plan, raw);
        for (NameId v : raw) plan.var_entries.push_back(v);
        return plans_.emplace(t, std::move(plan)).first->second;
    }

    void build_plan(const ProcessTerm& t, std::set<NameId>& bound, SigPlan& plan,
                    std::set<NameId>& raw) {
        auto arg_expr = [&](const ExprPtr& e) {
            const auto& fv = free_vars(*e);
            bool any_free = false, any_bound = false;
            for (NameId v : fv) {
                if (bound.count(v)) any_bound = true;
                else any_free = true;
            }
            if (!any_free) return;
            if (any_bound) {
                for (NameId v : fv)
                    if (!bound.count(v)) raw.insert(v);
            } else {
                plan.eval_entries.push_back(e);
            }
        };
        auto raw_expr = [&](const ExprPtr& e) {
            if (!e) return;
            for (NameId v : free_vars(*e))
                if (!bound.count(v)) raw.insert(v);
        };
        switch (t.kind) {
            case ProcKind::Deadlock: return;
            case ProcKind::Prefix:
            case ProcKind::CallProc:
                for (const auto& a : t.args) arg_expr(a);
                break;
            case ProcKind::Cond: raw_expr(t.cond); break;
            case ProcKind::Dist: raw_expr(t.weight); break;
            case ProcKind::Choice:
            case ProcKind::Sum: break;
        }
        std::vector<NameId> newly;
        for (NameId b : t.binders)
            if (bound.insert(b).second) newly.push_back(b);
        for (const auto& k : t.kids) build_plan(*k, bound, plan, raw);
        for (NameId b : newly) bound.erase(b);
    }

    Bindings restrict_env(const std::vector<NameId>& vars, const Bindings& env) {
        Bindings out;
        out.reserve(vars.size());
        for (NameId v : vars) {
            const Value* val = nullptr;
            for (auto it = env.rbegin(); it != env.rend(); ++it)
                if (it->first == v) {
                    val = &it->second;
                    break;
                }
            if (!val)
                throw Error(ErrorKind::UnknownName,
                            "unbound variable `" + name_of(v) + "` in configuration");
            out.emplace_back(v, *val);
        }
        return out;
    }

    StateId intern_state(const ProcessTerm* t, const Bindings& env) {
        const SigPlan& plan = sig_plan(t);
        PtrValsKey key{t, {}};
        key.vals.reserve(plan.eval_entries.size() + plan.var_entries.size());
        for (const auto& e : plan.eval_entries) key.vals.push_back(eval(env, *e));
        Bindings restricted = restrict_env(term_free(*t), env);
        for (NameId v : plan.var_entries) {
            for (const auto& [n, val] : restricted)
                if (n == v) {
                    key.vals.push_back(val);
                    break;
                }
        }
        auto it = states_.find(key);
        if (it != states_.end()) return it->second;
        if (static_cast<long>(plts_->state_count()) >= opts_.limits.max_states)
            throw Error(ErrorKind::StateLimitExceeded,
                        "state limit of " + std::to_string(opts_.limits.max_states) +
                            " exceeded");
        StateId sid = plts_->add_state(t, std::move(restricted));
        states_.emplace(std::move(key), sid);
        queue_.push_back(sid);
        return sid;
    }

    DistId point_dist(StateId s) {
        Distribution d;
        d.support.emplace_back(s, Rat(1));
        return plts_->add_distribution(std::move(d));
    }

    // ---- resolution of a term to a distribution over action states ----
    DistId resolve(const ProcessTerm* t, const Bindings& env, int depth) {
        if (depth > kMaxResolveDepth)
            throw Error(ErrorKind::UnguardedRecursion,
                        "process unfolds without reaching an action", t->loc);
        PtrValsKey key{t, {}};
        {
            const auto& fv = term_free(*t);
            key.vals.reserve(fv.size());
            Bindings restricted = restrict_env(fv, env);
            for (auto& [n, v] : restricted) {
                (void)n;
                key.vals.push_back(std::move(v));
            }
        }
        auto it = resolve_memo_.find(key);
        if (it != resolve_memo_.end()) return it->second;
        DistId result = -1;
        switch (t->kind) {
            case ProcKind::Deadlock:
            case ProcKind::Prefix:
            case ProcKind::Choice:
            case ProcKind::Sum: result = point_dist(intern_state(t, env)); break;
            case ProcKind::Cond: {
                bool taken = eval(env, *t->cond).as_bool();
                result = resolve(t->kids[taken ? 0 : 1].get(), env, depth + 1);
                break;
            }
            case ProcKind::CallProc: {
                result = resolve_call(*t, env, depth);
                break;
            }
            case ProcKind::Dist: {
                result = build_dist(t, env, depth);
                break;
            }
        }
        resolve_memo_.emplace(std::move(key), result);
        return result;
    }

    Bindings call_env(const ProcessTerm& call, const Bindings& env) {
        const ProcessDecl& decl = model_->processes[static_cast<size_t>(call.proc_index)];
        Bindings inner = plts_->glob_values;
        inner.reserve(inner.size() + call.args.size());
        for (size_t i = 0; i < call.args.size(); ++i)
            inner.emplace_back(decl.params[i].first,
                               coerce_value(eval(env, *call.args[i]), decl.param_sorts[i],
                                            call.args[i]->loc));
        return inner;
    }

    DistId resolve_call(const ProcessTerm& call, const Bindings& env, int depth) {
        const ProcessDecl& decl = model_->processes[static_cast<size_t>(call.proc_index)];
        return resolve(decl.body.get(), call_env(call, env), depth + 1);
    }

    // ---- distribution construction ----
    struct BinderVec {
        int vec = -1;  // index into vec_pool_
    };

    int intern_vec(std::vector<std::pair<Value, Rat>> v) {
        size_t h = 0x9ddfea08eb382d69ULL;
        for (const auto& [val, w] : v) h = hash_combine(hash_combine(h, val.hash()), w.hash());
        auto& bucket = vec_intern_[h];
        for (int idx : bucket)
            if (vec_pool_[static_cast<size_t>(idx)] == v) return idx;
        vec_pool_.push_back(std::move(v));
        int idx = static_cast<int>(vec_pool_.size() - 1);
        bucket.push_back(idx);
        return idx;
    }

    std::vector<Value> binder_domain(const ProcessTerm& t, size_t binder_index) {
        if (sort_is_enumerable(t.binder_sort)) return enumerate_sort(model_->sorts, t.binder_sort);
        long bound = t.binder_bounds.empty() ? -1 : t.binder_bounds[binder_index];
        if (bound < 0)
            throw Error(ErrorKind::UnboundedDistribution,
                        "dist binder has no proven bounded support", t.loc);
        std::vector<Value> out;
        out.reserve(static_cast<size_t>(bound));
        for (long i = 0; i < bound; ++i) out.push_back(Value(Int(i)));
        return out;
    }

    DistId build_dist(const ProcessTerm* head, const Bindings& env, int depth) {
        // Flatten directly nested dist binders into one product.
        struct Group {
            const ProcessTerm* node;
            std::vector<ExprPtr> factors;
        };
        std::vector<Group> groups;
        const ProcessTerm* tail = head;
        std::set<NameId> all_binders;
        while (tail->kind == ProcKind::Dist) {
            Group g;
            g.node = tail;
            collect_factors(tail->weight, g.factors);
            for (NameId b : tail->binders) all_binders.insert(b);
            groups.push_back(std::move(g));
            tail = tail->kids[0].get();
        }

        // Try per-binder factorization; joint enumeration is the fallback.
        struct BinderInfo {
            const ProcessTerm* node;
            size_t index;  // binder position within its dist node
            NameId name;
            std::vector<ExprPtr> factors;
        };
        std::vector<BinderInfo> binders;
        std::vector<ExprPtr> const_factors;
        bool factorable = true;
        for (const auto& g : groups) {
            for (size_t i = 0; i < g.node->binders.size(); ++i)
                binders.push_back(BinderInfo{g.node, i, g.node->binders[i], {}});
        }
        for (const auto& g : groups) {
            for (const auto& f : g.factors) {
                int touching = 0;
                NameId who = -1;
                for (NameId b : all_binders)
                    if (mentions_var(f, b)) {
                        ++touching;
                        who = b;
                    }
                if (touching == 0) {
                    const_factors.push_back(f);
                } else if (touching == 1) {
                    for (auto& bi : binders)
                        if (bi.name == who) bi.factors.push_back(f);
                } else {
                    factorable = false;
                }
            }
            if (!factorable) break;
        }

        Rat scalar(1);
        if (factorable) {
            for (const auto& f : const_factors) {
                Value v = eval(env, *f);
                Rat w = v.to_rat();
                if (w.sign() < 0)
                    throw Error(ErrorKind::NegativeWeight, "negative distribution weight",
                                f->loc);
                scalar *= w;
            }
            std::vector<int> vec_ids;
            vec_ids.reserve(binders.size());
            for (const auto& bi : binders)
                vec_ids.push_back(binder_vector(bi.node, bi.index, bi.name, bi.factors, env));

            // Distribution cache: content-interned per-binder vectors plus the
            // tail's residual environment fully determine the result.
            PtrValsKey dkey{head, {}};
            for (int vid : vec_ids) dkey.vals.push_back(Value(Int(vid)));
            dkey.vals.push_back(Value(scalar));
            for (NameId v : term_free(*tail))
                if (!all_binders.count(v))
                    for (const auto& [n, val] : env)
                        if (n == v) {
                            dkey.vals.push_back(val);
                            break;
                        }
            auto hit = dist_memo_.find(dkey);
            if (hit != dist_memo_.end()) return hit->second;

            std::map<StateId, Rat> acc;
            Bindings work = env;
            size_t base = work.size();
            for (const auto& bi : binders) work.emplace_back(bi.name, Value(false));
            std::function<void(size_t, const Rat&)> rec = [&](size_t i, const Rat& w) {
                if (i == binders.size()) {
                    accumulate_outcome(acc, tail, work, scalar * w, depth);
                    return;
                }
                const auto& vec = vec_pool_[static_cast<size_t>(vec_ids[i])];
                for (const auto& [val, vw] : vec) {
                    work[base + i].second = val;
                    rec(i + 1, w * vw);
                }
            };
            rec(0, Rat(1));
            DistId d = finish_dist(acc, head->loc);
            dist_memo_.emplace(std::move(dkey), d);
            return d;
        }

        // Joint fallback: enumerate the full product space, evaluating the
        // complete weight per tuple.
        std::map<StateId, Rat> acc;
        Bindings work = env;
        size_t base = work.size();
        std::vector<std::vector<Value>> domains;
        for (const auto& bi : binders) {
            domains.push_back(binder_domain(*bi.node, bi.index));
            work.emplace_back(bi.name, Value(false));
        }
        std::function<void(size_t)> rec = [&](size_t i) {
            if (i == binders.size()) {
                Rat w(1);
                for (const auto& g : groups) {
                    Value v = eval(work, *g.node->weight);
                    Rat gw = v.to_rat();
                    if (gw.sign() < 0)
                        throw Error(ErrorKind::NegativeWeight,
                                    "negative distribution weight", g.node->weight->loc);
                    w *= gw;
                }
                if (w.sign() > 0) accumulate_outcome(acc, tail, work, w, depth);
                return;
            }
            for (const auto& val : domains[i]) {
                work[base + i].second = val;
                rec(i + 1);
            }
        };
        rec(0);
        return finish_dist(acc, head->loc);
    }

    int binder_vector(const ProcessTerm* node, size_t index, NameId binder,
                      const std::vector<ExprPtr>& factors, const Bindings& env) {
        PtrValsKey key{node, {}};
        key.vals.push_back(Value(Int(static_cast<long>(index))));
        std::set<NameId> outer;
        for (const auto& f : factors)
            for (NameId v : free_vars(*f))
                if (v != binder) outer.insert(v);
        for (NameId v : outer)
            for (const auto& [n, val] : env)
                if (n == v) {
                    key.vals.push_back(val);
                    break;
                }
        auto it = vec_memo_.find(key);
        if (it != vec_memo_.end()) return it->second;

        std::vector<std::pair<Value, Rat>> vec;
        Bindings work = env;
        work.emplace_back(binder, Value(false));
        for (const auto& val : binder_domain(*node, index)) {
            work.back().second = val;
            Rat w(1);
            for (const auto& f : factors) {
                Value fv = eval(work, *f);
                Rat fw = fv.to_rat();
                if (fw.sign() < 0)
                    throw Error(ErrorKind::NegativeWeight, "negative distribution weight",
                                f->loc);
                w *= fw;
            }
            if (factors.empty()) w = Rat(1);
            if (w.sign() > 0) vec.emplace_back(val, std::move(w));
        }
        int vid = intern_vec(std::move(vec));
        vec_memo_.emplace(std::move(key), vid);
        return vid;
    }

    void accumulate_outcome(std::map<StateId, Rat>& acc, const ProcessTerm* tail,
                            const Bindings& env, const Rat& weight, int depth) {
        if (weight.is_zero()) return;
        DistId sub = resolve(tail, env, depth + 1);
        for (const auto& [sid, p] : plts_->dist(sub).support) {
            auto [it, fresh] = acc.emplace(sid, Rat(0));
            it->second += weight * p;
            (void)fresh;
        }
        if (static_cast<long>(acc.size()) > opts_.limits.max_support)
            throw Error(ErrorKind::StateLimitExceeded, "distribution support limit exceeded");
    }

    DistId finish_dist(std::map<StateId, Rat>& acc, SourceLoc loc) {
        Distribution d;
        Rat sum(0);
        d.support.reserve(acc.size());
        for (auto& [sid, p] : acc) {
            sum += p;
            d.support.emplace_back(sid, std::move(p));
        }
        if (sum != Rat(1))
            throw Error(ErrorKind::DistributionNotNormalized,
                        "distribution weights sum to " + sum.str() + ", not 1", loc);
        return plts_->add_distribution(std::move(d));
    }

    static void collect_factors(const ExprPtr& e, std::vector<ExprPtr>& out) {
        if (e->kind == ExprKind::Mul) {
            collect_factors(e->args[0], out);
            collect_factors(e->args[1], out);
            return;
        }
        out.push_back(e);
    }

    static bool mentions_var(const ExprPtr& e, NameId n) {
        if (e->kind == ExprKind::Var && e->name == n) return true;
        for (const auto& a : e->args)
            if (mentions_var(a, n)) return true;
        return false;
    }

    // ---- initial transitions of an action state ----
    std::vector<std::pair<ActionLabel, DistId>> initials(const ProcessTerm* t,
                                                         const Bindings& env, int depth) {
        if (depth > kMaxResolveDepth)
            throw Error(ErrorKind::UnguardedRecursion,
                        "process unfolds without reaching an action", t->loc);
        std::vector<std::pair<ActionLabel, DistId>> out;
        switch (t->kind) {
            case ProcKind::Deadlock: break;
            case ProcKind::Prefix: {
                const ActionDecl& a = model_->actions[static_cast<size_t>(t->action_index)];
                ActionLabel label;
                label.name = t->name;
                label.args.reserve(t->args.size());
                for (size_t i = 0; i < t->args.size(); ++i)
                    label.args.push_back(coerce_value(eval(env, *t->args[i]),
                                                      a.param_sorts[i], t->args[i]->loc));
                out.emplace_back(std::move(label), resolve(t->kids[0].get(), env, depth + 1));
                break;
            }
            case ProcKind::Choice: {
                auto left = initials(t->kids[0].get(), env, depth + 1);
                auto right = initials(t->kids[1].get(), env, depth + 1);
                out = std::move(left);
                out.insert(out.end(), std::make_move_iterator(right.begin()),
                           std::make_move_iterator(right.end()));
                break;
            }
            case ProcKind::Cond: {
                bool taken = eval(env, *t->cond).as_bool();
                out = initials(t->kids[taken ? 0 : 1].get(), env, depth + 1);
                break;
            }
            case ProcKind::Sum: {
                std::vector<Value> domain = enumerate_sort(model_->sorts, t->binder_sort);
                Bindings work = env;
                size_t base = work.size();
                for (NameId b : t->binders) work.emplace_back(b, Value(false));
                std::function<void(size_t)> rec = [&](size_t i) {
                    if (i == t->binders.size()) {
                        auto sub = initials(t->kids[0].get(), work, depth + 1);
                        out.insert(out.end(), std::make_move_iterator(sub.begin()),
                                   std::make_move_iterator(sub.end()));
                        return;
                    }
                    for (const auto& v : domain) {
                        work[base + i].second = v;
                        rec(i + 1);
                    }
                };
                rec(0);
                break;
            }
            case ProcKind::CallProc: {
                out = initials(model_->processes[static_cast<size_t>(t->proc_index)].body.get(),
                               call_env(*t, env), depth + 1);
                break;
            }
            case ProcKind::Dist:
                throw Error(ErrorKind::Validation,
                            "probabilistic choice reached in a nondeterministic context",
                            t->loc);
        }
        return out;
    }

    ModelPtr model_;
    ExploreOptions opts_;
    std::shared_ptr<Plts> plts_;
    EvalCache cache_;
    std::deque<StateId> queue_;
    std::unordered_map<PtrValsKey, StateId, PtrValsHash> states_;
    std::unordered_map<PtrValsKey, DistId, PtrValsHash> resolve_memo_;
    std::unordered_map<PtrValsKey, DistId, PtrValsHash> dist_memo_;
    std::unordered_map<PtrValsKey, int, PtrValsHash> vec_memo_;
    std::unordered_map<const ProcessTerm*, SigPlan> plans_;
    std::vector<std::vector<std::pair<Value, Rat>>> vec_pool_;
    std::unordered_map<size_t, std::vector<int>> vec_intern_;
};

}  // namespace

std::shared_ptr<Plts> explore(ModelPtr model, const ExploreOptions& options) {
    Explorer ex(std::move(model), options);
    return ex.run();
}

}  // namespace spinspec
