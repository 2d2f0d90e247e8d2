#include "spinspec/quantcheck.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <set>
#include <unordered_set>

namespace spinspec {

namespace {

NameId fresh_reach_var() {
    static int counter = 0;
    return intern("_Z" + std::to_string(counter++));
}

}  // namespace

FormulaPtr lower_regular(const FormulaPtr& f) {
    // bottom-up
    auto n = std::make_shared<Formula>(*f);
    bool changed = false;
    for (auto& k : n->kids) {
        FormulaPtr low = lower_regular(k);
        changed |= low != k;
        k = low;
    }
    if ((f->kind == FormKind::Diamond || f->kind == FormKind::Box) &&
        f->pattern.kind == ActionPattern::AnyStar) {
        bool diamond = f->kind == FormKind::Diamond;
        NameId var = fresh_reach_var();
        auto call = std::make_shared<Formula>();
        call->kind = FormKind::FixCall;
        call->fixvar = var;
        call->loc = f->loc;

        auto step = std::make_shared<Formula>();
        step->kind = diamond ? FormKind::Diamond : FormKind::Box;
        step->loc = f->loc;
        step->pattern.kind = ActionPattern::AnyAction;
        step->kids = {call};

        auto join = std::make_shared<Formula>();
        join->kind = diamond ? FormKind::Max : FormKind::Min;
        join->loc = f->loc;
        join->kids = {n->kids[0], step};

        auto fix = std::make_shared<Formula>();
        fix->kind = diamond ? FormKind::Mu : FormKind::Nu;
        fix->fixvar = var;
        fix->loc = f->loc;
        fix->kids = {join};
        call->fix_decl = fix.get();
        return fix;
    }
    return changed ? FormulaPtr(n) : f;
}

namespace {

struct NodeInfo {
    std::vector<NameId> free_vars;          // formula-bound data variables
    std::vector<const Formula*> free_fix;   // free fixpoint references
};

struct SupPlan {
    bool maximize = true;
    const Formula* modal = nullptr;  // binder-eliminating modality, if any
    const Formula* body = nullptr;   // formula evaluated under the chain
    std::vector<std::pair<NameId, Sort>> pending_binders;  // the whole chain
    std::vector<std::pair<NameId, Sort>> enumerated;
    std::vector<NameId> captures;    // binder per capture slot
};

struct TupleKey {
    std::vector<Value> v;
    bool operator==(const TupleKey& o) const { return v == o.v; }
};
struct TupleKeyHash {
    size_t operator()(const TupleKey& k) const {
        size_t h = 0x51ed2701afc91234ULL;
        for (const auto& x : k.v) h = hash_combine(h, x.hash());
        return h;
    }
};

struct MemoKey {
    const Formula* node;
    int32_t id;  // state or dist id
    std::vector<Value> digest;
    bool operator==(const MemoKey& o) const {
        return node == o.node && id == o.id && digest == o.digest;
    }
};
struct MemoKeyHash {
    size_t operator()(const MemoKey& k) const {
        size_t h = hash_combine(std::hash<const void*>()(k.node),
                                static_cast<size_t>(k.id));
        for (const auto& x : k.digest) h = hash_combine(h, x.hash());
        return h;
    }
};

Sort value_sort(const Value& v) {
    if (v.is_bool()) return Sort::boolean();
    if (v.is_int()) return v.as_int().sign() >= 0 ? Sort::nat() : Sort::integer();
    if (v.is_rat()) return Sort::real();
    if (v.is_enum()) return Sort{SortKind::Enum, v.as_enum().sort_index};
    throw Error(ErrorKind::TypeMismatch, "parameter values must be scalar");
}

class Checker {
  public:
    Checker(const Plts& plts, FormulaPtr root, const EvalOptions& opts, ChoiceHook* hook)
        : plts_(plts), model_(*plts.model), opts_(opts), hook_(hook), root_(std::move(root)) {}

    EvalStats stats;

    void prep(const std::vector<NameId>& required_params) {
        for (NameId p : required_params) {
            auto it = opts_.params.find(name_of(p));
            if (it == opts_.params.end())
                throw Error(ErrorKind::UnboundParameter,
                            "formula parameter `" + name_of(p) + "` is not bound; "
                            "pass it via --param");
            stack_.emplace_back(p, it->second);
        }
        base_depth_ = stack_.size();
        stack_.reserve(64);
        TypeContext tctx{&model_.sorts, &model_.functions, {}};
        for (const auto& [n, v] : stack_) tctx.vars.emplace_back(n, value_sort(v));
        std::set<NameId> fbound;
        analyze(root_.get(), tctx, fbound);
    }

    ExtReal eval_initial() {
        demand_seed_.clear();
        for (const auto& [sid, p] : plts_.dist(plts_.initial()).support) {
            (void)p;
            demand_seed_.push_back(sid);
        }
        return eval_dist(root_.get(), plts_.initial());
    }

    std::unordered_map<StateId, ExtReal> per_state() {
        demand_seed_.clear();
        for (StateId s = 0; s < static_cast<StateId>(plts_.state_count()); ++s)
            demand_seed_.push_back(s);
        std::unordered_map<StateId, ExtReal> out;
        for (StateId s = 0; s < static_cast<StateId>(plts_.state_count()); ++s)
            out.emplace(s, eval_state(root_.get(), s).reduced());
        return out;
    }

  private:
    // ---------- preparation ----------
    const NodeInfo& info(const Formula* f) const { return info_.at(f); }

    void analyze(const Formula* f, TypeContext& tctx, std::set<NameId>& fbound) {
        NodeInfo ni;
        auto add_expr = [&](const ExprPtr& e) {
            if (!e) return;
            typecheck_expr(*e, tctx);
            for (NameId v : free_vars(*e))
                if (fbound.count(v)) ni.free_vars.push_back(v);
        };
        auto merge_kid = [&](const Formula* k) {
            const NodeInfo& ki = info(k);
            ni.free_vars.insert(ni.free_vars.end(), ki.free_vars.begin(), ki.free_vars.end());
            ni.free_fix.insert(ni.free_fix.end(), ki.free_fix.begin(), ki.free_fix.end());
        };
        switch (f->kind) {
            case FormKind::Const:
            case FormKind::Top:
            case FormKind::Bottom: break;
            case FormKind::Data: {
                add_expr(f->data);
                Sort s = f->data->type;
                if (s.kind != SortKind::Bool && !s.is_numeric())
                    throw Error(ErrorKind::TypeMismatch,
                                "formula data expressions must be Bool or numeric", f->loc);
                break;
            }
            case FormKind::Add:
            case FormKind::Sub:
            case FormKind::Min:
            case FormKind::Max:
                analyze(f->kids[0].get(), tctx, fbound);
                analyze(f->kids[1].get(), tctx, fbound);
                merge_kid(f->kids[0].get());
                merge_kid(f->kids[1].get());
                break;
            case FormKind::Scale: {
                add_expr(f->data);
                if (!f->data->type.is_numeric())
                    throw Error(ErrorKind::TypeMismatch, "scale factor must be numeric",
                                f->loc);
                analyze(f->kids[0].get(), tctx, fbound);
                merge_kid(f->kids[0].get());
                break;
            }
            case FormKind::Diamond:
            case FormKind::Box: {
                analyze_pattern(f, nullptr, tctx, fbound, ni);
                analyze(f->kids[0].get(), tctx, fbound);
                merge_kid(f->kids[0].get());
                break;
            }
            case FormKind::Sup:
            case FormKind::Inf: {
                analyze_sup_chain(f, tctx, fbound, ni);
                break;
            }
            case FormKind::SumQ:
                throw Error(ErrorKind::Internal, "sum quantifier must be expanded", f->loc);
            case FormKind::Mu:
            case FormKind::Nu: {
                size_t tdepth = tctx.vars.size();
                std::vector<NameId> added;
                for (const auto& p : f->params) {
                    add_expr(p.init);
                    tctx.vars.emplace_back(p.name, p.sort);
                    if (fbound.insert(p.name).second) added.push_back(p.name);
                }
                analyze(f->kids[0].get(), tctx, fbound);
                const NodeInfo& ki = info(f->kids[0].get());
                for (NameId v : ki.free_vars) {
                    bool own = false;
                    for (const auto& p : f->params) own |= p.name == v;
                    if (!own) ni.free_vars.push_back(v);
                }
                for (const Formula* fx : ki.free_fix)
                    if (fx != f) ni.free_fix.push_back(fx);
                tctx.vars.resize(tdepth);
                for (NameId v : added) fbound.erase(v);
                break;
            }
            case FormKind::FixCall: {
                const Formula* decl = f->fix_decl;
                if (!decl) throw Error(ErrorKind::Internal, "unresolved fix call", f->loc);
                for (size_t i = 0; i < f->call_args.size(); ++i) {
                    add_expr(f->call_args[i]);
                    if (!is_subsort(f->call_args[i]->type, decl->params[i].sort))
                        throw Error(ErrorKind::TypeMismatch,
                                    "argument " + std::to_string(i + 1) + " of `" +
                                        name_of(f->fixvar) + "` has the wrong sort",
                                    f->loc);
                }
                ni.free_fix.push_back(decl);
                break;
            }
        }
        dedupe(ni.free_vars);
        dedupe_ptr(ni.free_fix);
        info_[f] = std::move(ni);
    }

    template <typename T>
    static void dedupe(std::vector<T>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    static void dedupe_ptr(std::vector<const Formula*>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    void analyze_pattern(const Formula* modal, SupPlan* plan, TypeContext& tctx,
                         std::set<NameId>& fbound, NodeInfo& ni) {
        const ActionPattern& pat = modal->pattern;
        pat.capture.assign(pat.args.size(), -1);
        if (pat.kind != ActionPattern::Action) return;
        const ActionDecl& decl = model_.actions[static_cast<size_t>(pat.action_index)];
        for (size_t i = 0; i < pat.args.size(); ++i) {
            const ExprPtr& arg = pat.args[i];
            if (plan && arg->kind == ExprKind::Var) {
                // a bare chain binder is a capture position
                auto found = std::find(plan->captures.begin(), plan->captures.end(),
                                       arg->name);
                bool is_chain_binder = false;
                for (const auto& [b, s] : plan->pending_binders)
                    if (b == arg->name) is_chain_binder = true;
                if (found != plan->captures.end()) {
                    pat.capture[i] = static_cast<int>(found - plan->captures.begin());
                    continue;
                }
                if (is_chain_binder) {
                    pat.capture[i] = static_cast<int>(plan->captures.size());
                    plan->captures.push_back(arg->name);
                    continue;
                }
            }
            typecheck_expr(*arg, tctx);
            if (!is_subsort(arg->type, decl.param_sorts[i]) &&
                !is_subsort(decl.param_sorts[i], arg->type))
                throw Error(ErrorKind::TypeMismatch,
                            "pattern argument " + std::to_string(i + 1) + " of `" +
                                name_of(pat.action) + "` has the wrong sort",
                            modal->loc);
            for (NameId v : free_vars(*arg))
                if (fbound.count(v)) ni.free_vars.push_back(v);
        }
    }

    void analyze_sup_chain(const Formula* outer, TypeContext& tctx, std::set<NameId>& fbound,
                           NodeInfo& ni) {
        bool maximize = outer->kind == FormKind::Sup;
        SupPlan plan;
        plan.maximize = maximize;
        const Formula* cur = outer;
        while (cur->kind == outer->kind) {
            for (NameId b : cur->binders)
                plan.pending_binders.emplace_back(b, cur->binder_sort);
            cur = cur->kids[0].get();
        }
        // binder-eliminating modality: sup with diamond, inf with box
        const Formula* modal = nullptr;
        if ((maximize && cur->kind == FormKind::Diamond) ||
            (!maximize && cur->kind == FormKind::Box)) {
            if (cur->pattern.kind == ActionPattern::Action) modal = cur;
        }
        size_t tdepth = tctx.vars.size();
        std::vector<NameId> added;
        for (const auto& [b, s] : plan.pending_binders) {
            tctx.vars.emplace_back(b, s);
            if (fbound.insert(b).second) added.push_back(b);
        }
        if (modal) {
            plan.modal = modal;
            analyze_pattern(modal, &plan, tctx, fbound, ni);
            plan.body = modal->kids[0].get();
            analyze(plan.body, tctx, fbound);
            const NodeInfo& ki = info(plan.body);
            ni.free_vars.insert(ni.free_vars.end(), ki.free_vars.begin(), ki.free_vars.end());
            ni.free_fix.insert(ni.free_fix.end(), ki.free_fix.begin(), ki.free_fix.end());
        } else {
            plan.body = cur;
            analyze(cur, tctx, fbound);
            const NodeInfo& ki = info(cur);
            ni.free_vars.insert(ni.free_vars.end(), ki.free_vars.begin(), ki.free_vars.end());
            ni.free_fix.insert(ni.free_fix.end(), ki.free_fix.begin(), ki.free_fix.end());
        }
        if (plan.captures.size() > kMaxCaptures)
            throw Error(ErrorKind::Validation, "too many captured quantifier binders",
                        outer->loc);
        // non-captured binders are enumerated; they need finite sorts
        for (const auto& [b, s] : plan.pending_binders) {
            bool captured = std::find(plan.captures.begin(), plan.captures.end(), b) !=
                            plan.captures.end();
            if (!captured) {
                if (!sort_is_enumerable(s))
                    throw Error(ErrorKind::UnboundedQuantifier,
                                "quantifier binder `" + name_of(b) +
                                    "` ranges over an infinite sort and is not bound "
                                    "by an action pattern",
                                outer->loc);
                plan.enumerated.emplace_back(b, s);
            }
        }
        // chain binders are bound inside; remove from the node's free set
        std::vector<NameId> chain_names;
        for (const auto& [b, s] : plan.pending_binders) chain_names.push_back(b);
        ni.free_vars.erase(std::remove_if(ni.free_vars.begin(), ni.free_vars.end(),
                                          [&](NameId v) {
                                              return std::find(chain_names.begin(),
                                                               chain_names.end(),
                                                               v) != chain_names.end();
                                          }),
                           ni.free_vars.end());
        tctx.vars.resize(tdepth);
        for (NameId v : added) fbound.erase(v);
        sup_plans_[outer] = std::move(plan);
    }

    // ---------- evaluation ----------
    Value eval_data(const Expr& e) {
        return eval_expr(Env{&stack_, &model_.functions, &cache_}, e);
    }

    static ExtReal data_to_ext(const Value& v) {
        if (v.is_bool()) return v.as_bool() ? ExtReal::pos_inf() : ExtReal::neg_inf();
        if (v.is_int()) return ExtReal::finite(Rat(v.as_int()));
        if (v.is_rat()) return ExtReal::finite(v.as_rat());
        throw Error(ErrorKind::TypeMismatch,
                    "data value " + v.str() + " has no quantitative meaning");
    }

    const Value& stack_value(NameId n) const {
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
            if (it->first == n) return it->second;
        throw Error(ErrorKind::Internal, "unbound formula variable `" + name_of(n) + "`");
    }

    // Parameters of the fixpoint currently solved by layering are constant
    // for the lifetime of the per-tuple memo; skipping them keeps most
    // digests empty on the hot path.
    bool digest_empty(const Formula* f) const {
        const NodeInfo& ni = info_.at(f);
        for (NameId v : ni.free_vars)
            if (!digest_skip_ || !digest_skip_->count(v)) return false;
        return true;
    }

    std::vector<Value> digest_of(const Formula* f) const {
        const NodeInfo& ni = info_.at(f);
        std::vector<Value> d;
        for (NameId v : ni.free_vars) {
            if (digest_skip_ && digest_skip_->count(v)) continue;
            d.push_back(stack_value(v));
        }
        return d;
    }

    // Memoization applies only where the digest is empty: every free
    // variable value would otherwise have to live in the key, and subtrees
    // with bound data are cheap relative to their own modal parts (which
    // carry digest-free memos of their own).
    ExtReal eval_state(const Formula* f, StateId s) {
        if (!digest_empty(f)) return eval_state_raw(f, s);
        return eval_state_ref(f, s);
    }

    // Reference into the memo; only valid for digest-free nodes.
    const ExtReal& eval_state_ref(const Formula* f, StateId s) {
        MemoKey key{f, s, {}};
        auto hit = memo_state_.find(key);
        if (hit != memo_state_.end()) return hit->second;
        ExtReal v = eval_state_raw(f, s);
        return memo_state_.emplace(std::move(key), std::move(v)).first->second;
    }

    ExtReal eval_state_raw(const Formula* f, StateId s) {
        switch (f->kind) {
            case FormKind::Const: return ExtReal::finite(f->constant);
            case FormKind::Top: return ExtReal::pos_inf();
            case FormKind::Bottom: return ExtReal::neg_inf();
            case FormKind::Data: return data_to_ext(eval_data(*f->data));
            case FormKind::Add: return eval_state(f->kids[0].get(), s) + eval_state(f->kids[1].get(), s);
            case FormKind::Sub: return eval_state(f->kids[0].get(), s) - eval_state(f->kids[1].get(), s);
            case FormKind::Min: {
                ExtReal a = eval_state(f->kids[0].get(), s);
                if (a.is_neg_inf()) return a;  // false-guard conjunction
                return min(a, eval_state(f->kids[1].get(), s));
            }
            case FormKind::Max: {
                ExtReal a = eval_state(f->kids[0].get(), s);
                if (a.is_pos_inf()) return a;
                return max(a, eval_state(f->kids[1].get(), s));
            }
            case FormKind::Scale: {
                Rat c = eval_data(*f->data).to_rat();
                if (c.sign() < 0)
                    throw Error(ErrorKind::Validation,
                                "scale factor must be nonnegative, got " + c.str(), f->loc);
                return eval_state(f->kids[0].get(), s).scale(c);
            }
            case FormKind::Diamond:
            case FormKind::Box:
                return modal_eval(f, nullptr, s);
            case FormKind::Sup:
            case FormKind::Inf: {
                const SupPlan& plan = sup_plans_.at(f);
                return sup_eval(plan, 0, s);
            }
            case FormKind::Mu:
            case FormKind::Nu: {
                const FixSolution& sol = solve_fix(f, s);
                auto it = sol.at_init.find(s);
                if (it == sol.at_init.end())
                    throw Error(ErrorKind::Internal, "fixpoint demand did not cover state");
                return it->second;
            }
            case FormKind::FixCall: {
                const ActiveLayered* ctx = active_for(f->fix_decl);
                if (!ctx)
                    throw Error(ErrorKind::Internal, "fixpoint call outside its solver",
                                f->loc);
                std::vector<Value> tuple;
                tuple.reserve(f->call_args.size());
                for (size_t i = 0; i < f->call_args.size(); ++i)
                    tuple.push_back(coerce_value(eval_data(*f->call_args[i]),
                                                 f->fix_decl->params[i].sort,
                                                 f->call_args[i]->loc));
                return ctx->lookup(tuple, s);
            }
            case FormKind::SumQ: break;
        }
        throw Error(ErrorKind::Internal, "bad formula node");
    }

    ExtReal eval_dist(const Formula* f, DistId d) {
        if (!digest_empty(f)) return eval_dist_raw(f, d);
        return eval_dist_ref(f, d);
    }

    const ExtReal& eval_dist_ref(const Formula* f, DistId d) {
        MemoKey key{f, -1 - d, {}};
        auto hit = memo_dist_.find(key);
        if (hit != memo_dist_.end()) return hit->second;
        ExtReal v = eval_dist_raw(f, d);
        return memo_dist_.emplace(std::move(key), std::move(v)).first->second;
    }

    ExtReal eval_dist_raw(const Formula* f, DistId d) {
        const Distribution& dist = plts_.dist(d);
        ExtReal acc(0);
        if (dist.support.size() > 1) {
            // integer-weight accumulation over one common denominator avoids
            // a gcd per addition; essential for long backward inductions
            std::vector<const ExtReal*> vals;
            std::vector<ExtReal> owned;
            bool target_memoized = digest_empty(f);
            vals.reserve(dist.support.size());
            if (!target_memoized) owned.reserve(dist.support.size());
            bool all_finite = true;
            for (const auto& [sid, p] : dist.support) {
                (void)p;
                if (target_memoized) {
                    const ExtReal& v = eval_state_ref(f, sid);
                    vals.push_back(&v);
                    all_finite &= v.is_finite();
                } else {
                    owned.push_back(eval_state_raw(f, sid));
                    all_finite &= owned.back().is_finite();
                }
            }
            if (!target_memoized)
                for (const auto& v : owned) vals.push_back(&v);
            if (all_finite) {
                std::vector<const Rat*> ptrs;
                ptrs.reserve(vals.size());
                for (const ExtReal* v : vals) ptrs.push_back(&v->value());
                if (auto sum = weighted_sum_raw(dist.weight_nums(), dist.weight_den(), ptrs)) {
                    return ExtReal::finite(std::move(*sum));
                }
            }
            for (size_t i = 0; i < vals.size(); ++i)
                acc = acc + vals[i]->scale(dist.support[i].second);
            return acc;
        }
        for (const auto& [sid, p] : dist.support) acc = acc + eval_state(f, sid).scale(p);
        return acc;
    }

    // Matches of a pattern among the transitions of s; captures are written
    // into `captured` aligned with plan->captures.
    bool match(const ActionPattern& pat, const Transition& tr, Value* captured, char* got) {
        if (pat.kind == ActionPattern::AnyAction) return true;
        if (pat.action != tr.label.name) return false;
        for (size_t i = 0; i < pat.args.size(); ++i) {
            int slot = i < pat.capture.size() ? pat.capture[i] : -1;
            if (slot >= 0) {
                if (got[static_cast<size_t>(slot)]) {
                    if (!(captured[static_cast<size_t>(slot)] == tr.label.args[i]))
                        return false;
                } else {
                    captured[static_cast<size_t>(slot)] = tr.label.args[i];
                    got[static_cast<size_t>(slot)] = 1;
                }
            } else {
                const ActionDecl& decl =
                    model_.actions[static_cast<size_t>(pat.action_index)];
                Value want = coerce_value(eval_data(*pat.args[i]), decl.param_sorts[i],
                                          pat.args[i]->loc);
                if (!(want == tr.label.args[i])) return false;
            }
        }
        return true;
    }

    // Evaluates <pat>body or [pat]body at s. When driven by a sup/inf plan,
    // capture slots bind the plan's quantifier variables.
    static constexpr size_t kMaxCaptures = 16;

    ExtReal modal_eval(const Formula* modal, const SupPlan* plan, StateId s) {
        bool diamond = modal->kind == FormKind::Diamond;
        const Formula* body = modal->kids[0].get();
        size_t ncap = plan ? plan->captures.size() : 0;
        Value captured[kMaxCaptures];
        char got[kMaxCaptures];

        if (!hook_) {
            // streaming: no candidate buffering; memo references where legal
            bool ref_mode = digest_empty(body);
            const ExtReal* best_ref = nullptr;
            bool best_set = false;
            ExtReal best(0);
            for (const Transition& tr : plts_.transitions(s)) {
                std::fill(got, got + ncap, 0);
                if (!match(modal->pattern, tr, captured, got)) continue;
                bool complete = true;
                for (size_t i = 0; i < ncap; ++i) complete &= got[i] != 0;
                if (!complete) continue;
                for (size_t i = 0; i < ncap; ++i)
                    stack_.emplace_back(plan->captures[i], std::move(captured[i]));
                if (ref_mode) {
                    const ExtReal& v = eval_dist_ref(body, tr.dist);
                    stack_.resize(stack_.size() - ncap);
                    if (!best_ref || (diamond ? *best_ref < v : v < *best_ref)) best_ref = &v;
                } else {
                    ExtReal v = eval_dist_raw(body, tr.dist);
                    stack_.resize(stack_.size() - ncap);
                    if (!best_set || (diamond ? best < v : v < best)) {
                        best = std::move(v);
                        best_set = true;
                    }
                }
            }
            if (ref_mode) {
                if (!best_ref) return diamond ? ExtReal::neg_inf() : ExtReal::pos_inf();
                return *best_ref;
            }
            if (!best_set) return diamond ? ExtReal::neg_inf() : ExtReal::pos_inf();
            return best;
        }

        struct Cand {
            const Transition* tr;
            std::vector<Value> captured;
        };
        std::vector<Cand> cands;
        for (const Transition& tr : plts_.transitions(s)) {
            std::fill(got, got + ncap, 0);
            if (!match(modal->pattern, tr, captured, got)) continue;
            bool complete = true;
            for (size_t i = 0; i < ncap; ++i) complete &= got[i] != 0;
            if (!complete) continue;  // unmatched capture slot: no binding
            cands.push_back(Cand{&tr, std::vector<Value>(captured, captured + ncap)});
        }
        if (cands.empty()) return diamond ? ExtReal::neg_inf() : ExtReal::pos_inf();

        bool decision = cands.size() >= 2 && hook_ != nullptr;
        std::vector<ActionLabel> labels;
        if (decision) {
            labels.reserve(cands.size());
            for (const auto& c : cands) labels.push_back(c.tr->label);
            int forced = hook_->resolve(s, current_tuple(), labels);
            if (forced >= 0) {
                if (forced >= static_cast<int>(cands.size()))
                    throw Error(ErrorKind::IncompleteTable, "forced choice out of range");
                Cand chosen = std::move(cands[static_cast<size_t>(forced)]);
                cands.clear();
                cands.push_back(std::move(chosen));
            }
        }

        bool best_set = false;
        ExtReal best(0);
        size_t best_index = 0;
        for (size_t ci = 0; ci < cands.size(); ++ci) {
            size_t pushed = 0;
            for (size_t i = 0; i < ncap; ++i) {
                stack_.emplace_back(plan->captures[i], cands[ci].captured[i]);
                ++pushed;
            }
            ExtReal v = eval_dist(body, cands[ci].tr->dist);
            for (size_t i = 0; i < pushed; ++i) stack_.pop_back();
            if (!best_set || (diamond ? best < v : v < best)) {
                best = std::move(v);
                best_index = ci;
                best_set = true;
            }
        }
        if (decision && cands.size() >= 2)
            hook_->observe(s, current_tuple(), diamond, labels, best_index, best);
        return best;
    }

    ExtReal sup_eval(const SupPlan& plan, size_t enum_index, StateId s) {
        if (enum_index < plan.enumerated.size()) {
            const auto& [b, sort] = plan.enumerated[enum_index];
            bool best_set = false;
            ExtReal best(0);
            for (const Value& v : enumerate_sort(model_.sorts, sort)) {
                stack_.emplace_back(b, v);
                ExtReal r = sup_eval(plan, enum_index + 1, s);
                stack_.pop_back();
                if (!best_set || (plan.maximize ? best < r : r < best)) {
                    best = r;
                    best_set = true;
                }
            }
            return best;
        }
        if (plan.modal) return modal_eval(plan.modal, &plan, s);
        return eval_state(plan.body, s);
    }

    std::vector<Value> current_tuple() const {
        return current_tuple_ ? *current_tuple_ : std::vector<Value>{};
    }

    // ---------- fixpoint solving ----------
    struct FixSolution {
        std::vector<Value> digest;
        std::unordered_map<StateId, ExtReal> at_init;
        bool full_demand = false;
    };

    struct ActiveLayered {
        const Formula* fix;
        int k_index;
        const std::map<long, std::unordered_map<TupleKey, std::vector<ExtReal>,
                                                TupleKeyHash>>* store;
        const std::vector<int>* slot_of;  // StateId -> demand slot (-1)

        ExtReal lookup(const std::vector<Value>& tuple, StateId s) const {
            long layer = tuple[static_cast<size_t>(k_index)].as_int().to_long();
            auto lit = store->find(layer);
            if (lit == store->end())
                throw Error(ErrorKind::Internal, "fixpoint layer not available");
            auto tit = lit->second.find(TupleKey{tuple});
            if (tit == lit->second.end())
                throw Error(ErrorKind::Internal, "fixpoint argument tuple not materialized");
            int slot = (*slot_of)[static_cast<size_t>(s)];
            if (slot < 0) throw Error(ErrorKind::Internal, "fixpoint state not demanded");
            return tit->second[static_cast<size_t>(slot)];
        }
    };

    const ActiveLayered* active_for(const Formula* fix) const {
        for (auto it = active_.rbegin(); it != active_.rend(); ++it)
            if (it->fix == fix) return &*it;
        return nullptr;
    }

    const FixSolution& solve_fix(const Formula* fix, StateId trigger) {
        std::vector<Value> digest = digest_of(fix);
        auto& cached = solutions_[fix];
        for (auto& sol : cached) {
            if (sol.digest == digest) {
                if (sol.at_init.count(trigger) || sol.full_demand) return sol;
                break;
            }
        }
        // demand: the global seed plus the triggering state; a re-solve after
        // a miss covers everything
        std::set<StateId> seed(demand_seed_.begin(), demand_seed_.end());
        seed.insert(trigger);
        bool full = false;
        for (auto& sol : cached)
            if (sol.digest == digest) full = true;  // second attempt: cover all states
        if (full)
            for (StateId s = 0; s < static_cast<StateId>(plts_.state_count()); ++s)
                seed.insert(s);

        FixSolution sol;
        sol.digest = digest;
        sol.full_demand = full;
        if (!try_layered(fix, seed, sol)) solve_system(fix, seed, sol);

        cached.erase(std::remove_if(cached.begin(), cached.end(),
                                    [&](const FixSolution& s) { return s.digest == digest; }),
                     cached.end());
        cached.push_back(std::move(sol));
        return cached.back();
    }

    std::vector<Value> init_tuple(const Formula* fix) {
        std::vector<Value> tuple;
        tuple.reserve(fix->params.size());
        for (const auto& p : fix->params)
            tuple.push_back(coerce_value(eval_data(*p.init), p.sort, fix->loc));
        return tuple;
    }

    void collect_calls(const Formula* f, const Formula* fix,
                       std::vector<const Formula*>& out) const {
        if (f->kind == FormKind::FixCall && f->fix_decl == fix) out.push_back(f);
        if (f->kind == FormKind::Sup || f->kind == FormKind::Inf) {
            auto it = sup_plans_.find(f);
            if (it != sup_plans_.end()) {
                collect_calls_body(it->second.body, fix, out);
                return;
            }
        }
        for (const auto& k : f->kids) collect_calls(k.get(), fix, out);
    }
    void collect_calls_body(const Formula* f, const Formula* fix,
                            std::vector<const Formula*>& out) const {
        collect_calls(f, fix, out);
    }

    // Horizon detection: one parameter strictly increases by a positive
    // literal constant in every recursive call and every call argument
    // depends on parameters only.
    bool detect_layered(const Formula* fix, int& k_index, long& window,
                        std::vector<const Formula*>& calls) {
        if (fix->params.empty()) return false;
        const NodeInfo& ni = info_.at(fix->kids[0].get());
        for (const Formula* fx : ni.free_fix)
            if (fx != fix) return false;  // other fixpoints flow through here
        collect_calls(fix->kids[0].get(), fix, calls);
        if (calls.empty()) return false;
        std::set<NameId> params;
        for (const auto& p : fix->params) params.insert(p.name);
        for (const Formula* c : calls)
            for (const auto& a : c->call_args)
                for (NameId v : free_vars(*a)) {
                    // constants resolved by the model or CLI parameters are fine
                    bool formula_bound = params.count(v) > 0;
                    if (!formula_bound) {
                        bool is_cli = false;
                        for (size_t i = 0; i < base_depth_; ++i)
                            is_cli |= stack_[i].first == v;
                        if (!is_cli) return false;
                    }
                }
        for (size_t i = 0; i < fix->params.size(); ++i) {
            if (fix->params[i].sort.kind != SortKind::Nat &&
                fix->params[i].sort.kind != SortKind::Int)
                continue;
            bool all_increment = true;
            long max_inc = 0;
            for (const Formula* c : calls) {
                const ExprPtr& a = c->call_args[i];
                long inc = -1;
                if (a->kind == ExprKind::Add) {
                    const Expr *l = a->args[0].get(), *r = a->args[1].get();
                    if (l->kind == ExprKind::Var && l->name == fix->params[i].name &&
                        r->kind == ExprKind::Lit && r->lit.is_int() &&
                        r->lit.as_int().sign() > 0 && r->lit.as_int().fits_long())
                        inc = r->lit.as_int().to_long();
                    else if (r->kind == ExprKind::Var && r->name == fix->params[i].name &&
                             l->kind == ExprKind::Lit && l->lit.is_int() &&
                             l->lit.as_int().sign() > 0 && l->lit.as_int().fits_long())
                        inc = l->lit.as_int().to_long();
                }
                if (inc < 0) {
                    all_increment = false;
                    break;
                }
                max_inc = std::max(max_inc, inc);
            }
            if (all_increment) {
                k_index = static_cast<int>(i);
                window = max_inc;
                return true;
            }
        }
        return false;
    }

    // Statically decidable value of a subformula given only parameters.
    std::optional<ExtReal> static_value(const Formula* f, const std::set<NameId>& params) {
        if (f->kind == FormKind::Top) return ExtReal::pos_inf();
        if (f->kind == FormKind::Bottom) return ExtReal::neg_inf();
        if (f->kind == FormKind::Const) return ExtReal::finite(f->constant);
        if (f->kind == FormKind::Data) {
            for (NameId v : info_.at(f).free_vars)
                if (!params.count(v)) return std::nullopt;
            return data_to_ext(eval_data(*f->data));
        }
        return std::nullopt;
    }

    // Live recursive calls of the body under a fixed parameter tuple; the
    // left-to-right short-circuit of Min/Max prunes dead branches.
    void live_calls(const Formula* f, const Formula* fix, const std::set<NameId>& params,
                    std::vector<std::vector<Value>>& out) {
        switch (f->kind) {
            case FormKind::Min:
            case FormKind::Max: {
                bool is_min = f->kind == FormKind::Min;
                auto v0 = static_value(f->kids[0].get(), params);
                if (v0) {
                    if (is_min && v0->is_neg_inf()) return;
                    if (!is_min && v0->is_pos_inf()) return;
                    live_calls(f->kids[1].get(), fix, params, out);
                    return;
                }
                live_calls(f->kids[0].get(), fix, params, out);
                live_calls(f->kids[1].get(), fix, params, out);
                return;
            }
            case FormKind::FixCall:
                if (f->fix_decl == fix) {
                    std::vector<Value> tuple;
                    tuple.reserve(f->call_args.size());
                    for (size_t i = 0; i < f->call_args.size(); ++i)
                        tuple.push_back(coerce_value(eval_data(*f->call_args[i]),
                                                     fix->params[i].sort, f->loc));
                    out.push_back(std::move(tuple));
                }
                return;
            case FormKind::Sup:
            case FormKind::Inf: {
                const SupPlan& plan = sup_plans_.at(f);
                live_calls(plan.body, fix, params, out);
                return;
            }
            default:
                for (const auto& k : f->kids) live_calls(k.get(), fix, params, out);
        }
    }

    // States at which the recursive calls get evaluated, starting from the
    // seed; action-pattern arguments are overapproximated by name matching.
    void demand_states(const Formula* f, const Formula* fix,
                       const std::vector<char>& cur, std::vector<char>& demanded,
                       std::vector<char>& next_scratch) {
        switch (f->kind) {
            case FormKind::FixCall:
                if (f->fix_decl == fix)
                    for (size_t i = 0; i < cur.size(); ++i)
                        if (cur[i]) demanded[i] = 1;
                return;
            case FormKind::Diamond:
            case FormKind::Box: {
                std::vector<char> next(cur.size(), 0);
                modal_reach(f->pattern, cur, next);
                demand_states(f->kids[0].get(), fix, next, demanded, next_scratch);
                return;
            }
            case FormKind::Sup:
            case FormKind::Inf: {
                const SupPlan& plan = sup_plans_.at(f);
                if (plan.modal) {
                    std::vector<char> next(cur.size(), 0);
                    modal_reach(plan.modal->pattern, cur, next);
                    demand_states(plan.modal->kids[0].get(), fix, next, demanded,
                                  next_scratch);
                } else {
                    demand_states(plan.body, fix, cur, demanded, next_scratch);
                }
                return;
            }
            default:
                for (const auto& k : f->kids)
                    demand_states(k.get(), fix, cur, demanded, next_scratch);
        }
    }

    void modal_reach(const ActionPattern& pat, const std::vector<char>& cur,
                     std::vector<char>& next) {
        for (size_t s = 0; s < cur.size(); ++s) {
            if (!cur[s]) continue;
            for (const Transition& tr : plts_.transitions(static_cast<StateId>(s))) {
                if (pat.kind == ActionPattern::Action && pat.action != tr.label.name)
                    continue;
                for (const auto& [tid, p] : plts_.dist(tr.dist).support) {
                    (void)p;
                    next[static_cast<size_t>(tid)] = 1;
                }
            }
        }
    }

    // Rescale every finite value of a finished layer to one shared
    // denominator. All upstream sums and comparisons then run on the
    // equal-denominator fast paths with no gcd or division at all.
    static void normalize_layer(
        std::unordered_map<TupleKey, std::vector<ExtReal>, TupleKeyHash>& layer) {
        mpz_t dmax;
        mpz_init_set_ui(dmax, 1);
        for (auto& [t, row] : layer)
            for (auto& v : row)
                if (v.is_finite() && mpz_cmp(mpq_denref(v.value().raw()), dmax) > 0)
                    mpz_set(dmax, mpq_denref(v.value().raw()));
        mpz_t scale;
        mpz_init(scale);
        for (auto& [t, row] : layer) {
            (void)t;
            for (auto& v : row) {
                if (!v.is_finite()) continue;
                mpq_ptr q = const_cast<Rat&>(v.value()).raw();
                if (mpz_cmp(mpq_denref(q), dmax) == 0) continue;
                if (!mpz_divisible_p(dmax, mpq_denref(q))) continue;
                mpz_divexact(scale, dmax, mpq_denref(q));
                mpz_mul(mpq_numref(q), mpq_numref(q), scale);
                mpz_set(mpq_denref(q), dmax);
            }
        }
        mpz_clears(dmax, scale, nullptr);
    }

    bool try_layered(const Formula* fix, const std::set<StateId>& seed, FixSolution& sol) {
        if (!opts_.exact_acceleration) return false;
        int k_index = -1;
        long window = 1;
        std::vector<const Formula*> calls;
        if (!detect_layered(fix, k_index, window, calls)) return false;

        std::set<NameId> params;
        for (const auto& p : fix->params) params.insert(p.name);

        // forward closure of parameter tuples, grouped by the horizon value
        std::vector<Value> tuple0 = init_tuple(fix);
        std::map<long, std::vector<std::vector<Value>>> layers;
        std::unordered_set<TupleKey, TupleKeyHash> seen;
        std::vector<std::vector<Value>> frontier{tuple0};
        seen.insert(TupleKey{tuple0});
        size_t total_tuples = 0;
        const Formula* body = fix->kids[0].get();
        while (!frontier.empty()) {
            std::vector<Value> tuple = std::move(frontier.back());
            frontier.pop_back();
            if (++total_tuples > 20000000)
                throw Error(ErrorKind::NonConvergence,
                            "horizon parameter closure exceeds 20M tuples");
            long layer = tuple[static_cast<size_t>(k_index)].as_int().to_long();
            size_t depth = stack_.size();
            for (size_t i = 0; i < fix->params.size(); ++i)
                stack_.emplace_back(fix->params[i].name, tuple[i]);
            std::vector<std::vector<Value>> found;
            live_calls(body, fix, params, found);
            stack_.resize(depth);
            layers[layer].push_back(std::move(tuple));
            for (auto& t : found) {
                TupleKey k{t};
                if (seen.insert(k).second) frontier.push_back(std::move(t));
            }
        }

        // demanded states: closure of the seed through the body's modal steps
        std::vector<char> demanded(plts_.state_count(), 0);
        for (StateId s : seed) demanded[static_cast<size_t>(s)] = 1;
        for (;;) {
            std::vector<char> cur = demanded;
            std::vector<char> scratch;
            demand_states(body, fix, cur, demanded, scratch);
            if (demanded == cur) break;
        }
        std::vector<StateId> demand_list;
        std::vector<int> slot_of(plts_.state_count(), -1);
        for (size_t i = 0; i < demanded.size(); ++i)
            if (demanded[i]) {
                slot_of[i] = static_cast<int>(demand_list.size());
                demand_list.push_back(static_cast<StateId>(i));
            }

        // backward induction, retaining a window of layers
        std::map<long, std::unordered_map<TupleKey, std::vector<ExtReal>, TupleKeyHash>>
            store;
        active_.push_back(ActiveLayered{fix, k_index, &store, &slot_of});
        stats.horizon_index = k_index;
        if (hook_) hook_->horizon(k_index);
        std::set<NameId> skip_params = params;
        const std::set<NameId>* outer_skip = digest_skip_;
        digest_skip_ = &skip_params;
        long done_below = 0;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
            long layer = it->first;
            for (const auto& tuple : it->second) {
                size_t depth = stack_.size();
                for (size_t i = 0; i < fix->params.size(); ++i)
                    stack_.emplace_back(fix->params[i].name, tuple[i]);
                current_tuple_ = &tuple;
                std::vector<ExtReal> row;
                row.reserve(demand_list.size());
                for (StateId s : demand_list) row.push_back(eval_state(body, s));
                current_tuple_ = nullptr;
                stack_.resize(depth);
                store[layer].emplace(TupleKey{tuple}, std::move(row));
                memo_state_.clear();
                memo_dist_.clear();
                stats.variables += static_cast<long>(demand_list.size());
            }
            normalize_layer(store[layer]);
            // drop layers above the retention window
            for (auto sit = store.begin(); sit != store.end();) {
                if (sit->first > layer + window && sit->first != layer) {
                    sit = store.erase(sit);
                } else {
                    ++sit;
                }
            }
            done_below = layer;
        }
        (void)done_below;
        digest_skip_ = outer_skip;
        active_.pop_back();

        long layer0 = tuple0[static_cast<size_t>(k_index)].as_int().to_long();
        const auto& final_layer = store.at(layer0);
        auto row_it = final_layer.find(TupleKey{tuple0});
        if (row_it == final_layer.end())
            throw Error(ErrorKind::Internal, "initial tuple missing after induction");
        for (size_t i = 0; i < demand_list.size(); ++i)
            sol.at_init.emplace(demand_list[i], row_it->second[i].reduced());
        return true;
    }

    // ---------- generic equation-system path ----------
    void solve_system(const Formula* fix, const std::set<StateId>& seed, FixSolution& sol) {
        EqSystem system;
        FixSign sign = fix->kind == FormKind::Mu ? FixSign::Mu : FixSign::Nu;

        struct VarKey {
            TupleKey tuple;
            StateId state;
            bool operator==(const VarKey& o) const {
                return state == o.state && tuple == o.tuple;
            }
        };
        struct VarKeyHash {
            size_t operator()(const VarKey& k) const {
                return hash_combine(TupleKeyHash()(k.tuple), static_cast<size_t>(k.state));
            }
        };
        std::unordered_map<VarKey, int, VarKeyHash> var_of;
        std::vector<VarKey> todo;

        std::vector<Value> tuple0 = init_tuple(fix);
        auto var_for = [&](std::vector<Value> tuple, StateId s) {
            VarKey key{TupleKey{std::move(tuple)}, s};
            auto it = var_of.find(key);
            if (it != var_of.end()) return it->second;
            std::string name = name_of(fix->fixvar);
            if (!key.tuple.v.empty()) {
                name += "(";
                for (size_t i = 0; i < key.tuple.v.size(); ++i) {
                    if (i) name += ",";
                    name += key.tuple.v[i].str();
                }
                name += ")";
            }
            name += "@" + std::to_string(s);
            int v = system.add_variable(sign, std::move(name));
            var_of.emplace(key, v);
            todo.push_back(key);
            if (static_cast<long>(var_of.size()) > 2000000)
                throw Error(ErrorKind::NonConvergence, "equation system exceeds 2M variables");
            return v;
        };

        for (StateId s : seed) var_for(tuple0, s);

        // RHS construction: concrete evaluation except that recursive calls
        // become system variables.
        std::function<const EqNode*(const Formula*, StateId)> build =
            [&](const Formula* f, StateId s) -> const EqNode* {
            switch (f->kind) {
                case FormKind::Const: return system.constant(ExtReal::finite(f->constant));
                case FormKind::Top: return system.constant(ExtReal::pos_inf());
                case FormKind::Bottom: return system.constant(ExtReal::neg_inf());
                case FormKind::Data:
                    return system.constant(data_to_ext(eval_data(*f->data)));
                case FormKind::Add:
                case FormKind::Sub: {
                    const EqNode* a = build(f->kids[0].get(), s);
                    const EqNode* b = build(f->kids[1].get(), s);
                    return f->kind == FormKind::Add ? system.add(a, b) : system.sub(a, b);
                }
                case FormKind::Min:
                case FormKind::Max: {
                    const EqNode* a = build(f->kids[0].get(), s);
                    bool is_min = f->kind == FormKind::Min;
                    if (a->kind == EqNode::Const) {
                        if (is_min && a->constant.is_neg_inf()) return a;
                        if (!is_min && a->constant.is_pos_inf()) return a;
                    }
                    const EqNode* b = build(f->kids[1].get(), s);
                    return system.extremum(!is_min, {a, b});
                }
                case FormKind::Scale: {
                    Rat c = eval_data(*f->data).to_rat();
                    if (c.sign() < 0)
                        throw Error(ErrorKind::Validation, "scale factor must be nonnegative",
                                    f->loc);
                    return system.scale(c, build(f->kids[0].get(), s));
                }
                case FormKind::Diamond:
                case FormKind::Box: return build_modal(f, nullptr, s, system, build, var_for);
                case FormKind::Sup:
                case FormKind::Inf: {
                    const SupPlan& plan = sup_plans_.at(f);
                    return build_sup(plan, 0, s, system, build, var_for);
                }
                case FormKind::Mu:
                case FormKind::Nu: {
                    // independent nested fixpoint: solve it and fold the value
                    const FixSolution& inner = solve_fix(f, s);
                    auto it = inner.at_init.find(s);
                    if (it == inner.at_init.end())
                        throw Error(ErrorKind::Internal, "nested fixpoint demand miss");
                    return system.constant(it->second);
                }
                case FormKind::FixCall: {
                    if (f->fix_decl != fix)
                        throw Error(ErrorKind::MixedSignCycle,
                                    "mutually recursive fixpoints are not supported",
                                    f->loc);
                    std::vector<Value> tuple;
                    tuple.reserve(f->call_args.size());
                    for (size_t i = 0; i < f->call_args.size(); ++i)
                        tuple.push_back(coerce_value(eval_data(*f->call_args[i]),
                                                     fix->params[i].sort, f->loc));
                    return system.variable(var_for(std::move(tuple), s));
                }
                case FormKind::SumQ: break;
            }
            throw Error(ErrorKind::Internal, "bad formula node in system build");
        };

        const Formula* body = fix->kids[0].get();
        size_t processed = 0;
        while (processed < todo.size()) {
            VarKey key = todo[processed];
            int var = var_of.at(key);
            size_t depth = stack_.size();
            for (size_t i = 0; i < fix->params.size(); ++i)
                stack_.emplace_back(fix->params[i].name, key.tuple.v[i]);
            system.set_rhs(var, build(body, key.state));
            stack_.resize(depth);
            ++processed;
        }

        SolveOptions sopts;
        sopts.tolerance = opts_.tolerance;
        sopts.max_iterations = opts_.max_iterations;
        sopts.check_monotone = opts_.check_monotone;
        sopts.exact_acceleration = opts_.exact_acceleration;
        SolveStats sstats;
        std::vector<ExtReal> values = solve(system, sopts, &sstats);
        stats.sweeps += sstats.sweeps;
        stats.exact = stats.exact && sstats.exact;
        stats.variables += static_cast<long>(system.size());

        for (StateId s : seed) {
            auto it = var_of.find(VarKey{TupleKey{tuple0}, s});
            if (it != var_of.end())
                sol.at_init.emplace(s, values[static_cast<size_t>(it->second)]);
        }
    }

    template <typename Build, typename VarFor>
    const EqNode* build_modal(const Formula* modal, const SupPlan* plan, StateId s,
                              EqSystem& system, Build& build, VarFor& var_for) {
        (void)var_for;
        bool diamond = modal->kind == FormKind::Diamond;
        const Formula* body = modal->kids[0].get();
        size_t ncap = plan ? plan->captures.size() : 0;
        std::vector<const EqNode*> alts;
        Value captured[kMaxCaptures];
        char got[kMaxCaptures];
        for (const Transition& tr : plts_.transitions(s)) {
            std::fill(got, got + ncap, 0);
            if (!match(modal->pattern, tr, captured, got)) continue;
            bool complete = true;
            for (size_t i = 0; i < ncap; ++i) complete &= got[i] != 0;
            if (!complete) continue;
            size_t depth = stack_.size();
            for (size_t i = 0; i < ncap; ++i)
                stack_.emplace_back(plan->captures[i], captured[i]);
            std::vector<std::pair<Rat, const EqNode*>> terms;
            for (const auto& [tid, p] : plts_.dist(tr.dist).support)
                terms.emplace_back(p, build(body, tid));
            stack_.resize(depth);
            alts.push_back(system.weighted_sum(std::move(terms)));
        }
        if (alts.empty())
            return system.constant(diamond ? ExtReal::neg_inf() : ExtReal::pos_inf());
        if (alts.size() == 1) return alts[0];
        return system.extremum(diamond, std::move(alts));
    }

    template <typename Build, typename VarFor>
    const EqNode* build_sup(const SupPlan& plan, size_t enum_index, StateId s,
                            EqSystem& system, Build& build, VarFor& var_for) {
        if (enum_index < plan.enumerated.size()) {
            const auto& [b, sort] = plan.enumerated[enum_index];
            std::vector<const EqNode*> alts;
            for (const Value& v : enumerate_sort(model_.sorts, sort)) {
                stack_.emplace_back(b, v);
                alts.push_back(build_sup(plan, enum_index + 1, s, system, build, var_for));
                stack_.pop_back();
            }
            if (alts.size() == 1) return alts[0];
            return system.extremum(plan.maximize, std::move(alts));
        }
        if (plan.modal) return build_modal(plan.modal, &plan, s, system, build, var_for);
        return build(plan.body, s);
    }

    const Plts& plts_;
    const ModelSpec& model_;
    EvalOptions opts_;
    ChoiceHook* hook_;
    FormulaPtr root_;

    Bindings stack_;
    size_t base_depth_ = 0;
    EvalCache cache_;
    std::unordered_map<const Formula*, NodeInfo> info_;
    std::unordered_map<const Formula*, SupPlan> sup_plans_;
    std::unordered_map<MemoKey, ExtReal, MemoKeyHash> memo_state_;
    std::unordered_map<MemoKey, ExtReal, MemoKeyHash> memo_dist_;
    std::unordered_map<const Formula*, std::vector<FixSolution>> solutions_;
    std::vector<ActiveLayered> active_;
    std::vector<StateId> demand_seed_;
    const std::vector<Value>* current_tuple_ = nullptr;
    const std::set<NameId>* digest_skip_ = nullptr;
};

}  // namespace

EvalResult evaluate(const Plts& plts, const FormulaSpec& formula, const EvalOptions& opts,
                    ChoiceHook* hook) {
    if (!formula.validated)
        throw Error(ErrorKind::Validation, "formula must be validated against the model");
    auto start = std::chrono::steady_clock::now();
    Checker checker(plts, lower_regular(formula.root), opts, hook);
    checker.prep(formula.required_params);
    ExtReal value = checker.eval_initial().reduced();
    auto end = std::chrono::steady_clock::now();
    checker.stats.seconds = std::chrono::duration<double>(end - start).count();
    return EvalResult{value, checker.stats};
}

std::unordered_map<StateId, ExtReal> evaluate_per_state(const Plts& plts,
                                                        const FormulaSpec& formula,
                                                        const EvalOptions& opts,
                                                        EvalStats* stats, ChoiceHook* hook) {
    if (!formula.validated)
        throw Error(ErrorKind::Validation, "formula must be validated against the model");
    Checker checker(plts, lower_regular(formula.root), opts, hook);
    checker.prep(formula.required_params);
    auto out = checker.per_state();
    if (stats) *stats = checker.stats;
    return out;
}

}  // namespace spinspec
