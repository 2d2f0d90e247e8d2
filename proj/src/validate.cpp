#include "spinspec/validate.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace spinspec {

namespace {

Sort resolve_sort(const ModelSpec& m, const std::string& text, SourceLoc loc) {
    if (text.rfind("List(", 0) == 0 && !text.empty() && text.back() == ')') {
        Sort elem = resolve_sort(m, text.substr(5, text.size() - 6), loc);
        return const_cast<SortTable&>(m.sorts).add_list(elem);
    }
    const Sort* s = m.sorts.lookup(text);
    if (!s) throw Error(ErrorKind::UnknownName, "unknown sort `" + text + "`", loc);
    return *s;
}

ExprPtr subst_expr_exprs(const ExprPtr& e,
                         const std::vector<std::pair<NameId, ExprPtr>>& bindings) {
    if (e->kind == ExprKind::Var) {
        for (const auto& [n, repl] : bindings)
            if (n == e->name) return repl;
        return e;
    }
    if (e->args.empty()) return e;
    bool changed = false;
    std::vector<ExprPtr> kids;
    kids.reserve(e->args.size());
    for (const auto& a : e->args) {
        ExprPtr s = subst_expr_exprs(a, bindings);
        changed |= s != a;
        kids.push_back(std::move(s));
    }
    if (!changed) return e;
    auto n = std::make_shared<Expr>(*e);
    n->args = std::move(kids);
    n->resolved = false;
    n->free_computed = false;
    return n;
}

// Matches `if(x < K, e, 0)`-shaped factors after inlining function calls.
std::optional<long> zeroing_bound(const ExprPtr& factor, NameId binder,
                                  const FunctionTable& funcs, int depth) {
    if (depth > 8) return std::nullopt;
    const Expr& f = *factor;
    if (f.kind == ExprKind::Call || (f.kind == ExprKind::Var && f.args.empty())) {
        const FunctionDef* def = funcs.find(f.name);
        if (!def || def->params.size() != f.args.size()) return std::nullopt;
        std::vector<std::pair<NameId, ExprPtr>> bind;
        for (size_t i = 0; i < f.args.size(); ++i)
            bind.emplace_back(def->params[i].first, f.args[i]);
        return zeroing_bound(subst_expr_exprs(def->body, bind), binder, funcs, depth + 1);
    }
    if (f.kind == ExprKind::If) {
        const Expr& cond = *f.args[0];
        const Expr& else_branch = *f.args[2];
        bool else_zero = else_branch.kind == ExprKind::Lit && else_branch.lit.is_int() &&
                         else_branch.lit.as_int().is_zero();
        if (else_zero && cond.kind == ExprKind::Lt && cond.args[0]->kind == ExprKind::Var &&
            cond.args[0]->name == binder && cond.args[1]->kind == ExprKind::Lit &&
            cond.args[1]->lit.is_int() && cond.args[1]->lit.as_int().fits_long()) {
            return cond.args[1]->lit.as_int().to_long();
        }
        // bound may also sit in a branch: if(c, bounded, 0) with c free of x
        return std::nullopt;
    }
    return std::nullopt;
}

void collect_factors(const ExprPtr& e, std::vector<ExprPtr>& out) {
    if (e->kind == ExprKind::Mul) {
        collect_factors(e->args[0], out);
        collect_factors(e->args[1], out);
        return;
    }
    out.push_back(e);
}

bool mentions(const ExprPtr& e, NameId n) {
    if (e->kind == ExprKind::Var && e->name == n) return true;
    for (const auto& a : e->args)
        if (mentions(a, n)) return true;
    return false;
}

struct ModelValidator {
    ModelSpec& m;
    Diagnostics diags;

    void report(ErrorKind k, SourceLoc loc, std::string msg) {
        diags.push_back(Diagnostic{k, loc, std::move(msg)});
    }

    void run() {
        std::set<NameId> action_names, proc_names;
        for (const auto& a : m.actions) {
            if (!action_names.insert(a.name).second)
                report(ErrorKind::Validation, a.loc,
                       "action `" + name_of(a.name) + "` declared twice");
            a.param_sorts.clear();
            for (const auto& s : a.param_sort_names) {
                try {
                    a.param_sorts.push_back(resolve_sort(m, s, a.loc));
                } catch (const Error& e) {
                    report(e.kind(), a.loc, e.what());
                }
            }
        }
        for (const auto& g : m.globs) {
            try {
                g.sort = resolve_sort(m, g.sort_name, g.loc);
            } catch (const Error& e) {
                report(e.kind(), g.loc, e.what());
            }
        }
        for (const auto& p : m.processes) {
            if (!proc_names.insert(p.name).second)
                report(ErrorKind::Validation, p.loc,
                       "process `" + name_of(p.name) + "` defined twice");
            if (action_names.count(p.name))
                report(ErrorKind::Validation, p.loc,
                       "`" + name_of(p.name) + "` is both an action and a process");
            p.param_sorts.clear();
            for (const auto& [n, s] : p.params) {
                (void)n;
                try {
                    p.param_sorts.push_back(resolve_sort(m, s, p.loc));
                } catch (const Error& e) {
                    report(e.kind(), p.loc, e.what());
                }
            }
        }
        if (!diags.empty()) return;  // sorts unresolved; later checks would cascade

        // function bodies
        for (size_t i = 0; i < m.functions.size(); ++i) {
            const FunctionDef& def = m.functions.at(static_cast<int>(i));
            TypeContext ctx{&m.sorts, &m.functions, {}};
            for (const auto& [n, s] : def.params) ctx.vars.emplace_back(n, s);
            try {
                Sort body = typecheck_expr(*def.body, ctx);
                if (!is_subsort(body, def.result))
                    report(ErrorKind::TypeMismatch, def.loc,
                           "body of `" + name_of(def.name) +
                               "` does not fit its declared result sort");
            } catch (const Error& e) {
                report(e.kind(), e.loc().valid() ? e.loc() : def.loc, e.what());
            }
        }

        // process bodies and init
        for (const auto& p : m.processes) {
            TypeContext ctx = base_context();
            for (size_t i = 0; i < p.params.size(); ++i)
                ctx.vars.emplace_back(p.params[i].first, p.param_sorts[i]);
            check_proc(*p.body, ctx, false);
        }
        if (m.init) {
            TypeContext ctx = base_context();
            check_proc(*m.init, ctx, false);
        }
    }

    TypeContext base_context() {
        TypeContext ctx{&m.sorts, &m.functions, {}};
        for (const auto& g : m.globs) ctx.vars.emplace_back(g.name, g.sort);
        return ctx;
    }

    void check_proc(const ProcessTerm& t, TypeContext& ctx, bool in_choice) {
        switch (t.kind) {
            case ProcKind::Deadlock: return;
            case ProcKind::Prefix: {
                const ActionDecl* a = m.find_action(t.name);
                if (!a) {
                    report(ErrorKind::UnknownName, t.loc,
                           "action `" + name_of(t.name) + "` not declared");
                    return;
                }
                t.action_index = m.action_index(t.name);
                if (a->param_sorts.size() != t.args.size()) {
                    report(ErrorKind::ArityMismatch, t.loc,
                           "action `" + name_of(t.name) + "` expects " +
                               std::to_string(a->param_sorts.size()) + " argument(s), got " +
                               std::to_string(t.args.size()));
                    return;
                }
                for (size_t i = 0; i < t.args.size(); ++i) {
                    try {
                        Sort s = typecheck_expr(*t.args[i], ctx);
                        if (!is_subsort(s, a->param_sorts[i]))
                            report(ErrorKind::TypeMismatch, t.args[i]->loc,
                                   "argument " + std::to_string(i + 1) + " of action `" +
                                       name_of(t.name) + "` has the wrong sort");
                    } catch (const Error& e) {
                        report(e.kind(), e.loc(), e.what());
                    }
                }
                check_proc(*t.kids[0], ctx, false);
                return;
            }
            case ProcKind::Choice:
                check_proc(*t.kids[0], ctx, true);
                check_proc(*t.kids[1], ctx, true);
                return;
            case ProcKind::Cond: {
                try {
                    if (typecheck_expr(*t.cond, ctx).kind != SortKind::Bool)
                        report(ErrorKind::TypeMismatch, t.cond->loc,
                               "condition must be Bool");
                } catch (const Error& e) {
                    report(e.kind(), e.loc(), e.what());
                }
                check_proc(*t.kids[0], ctx, in_choice);
                check_proc(*t.kids[1], ctx, in_choice);
                return;
            }
            case ProcKind::Sum: {
                try {
                    t.binder_sort = resolve_sort(m, t.binder_sort_name, t.loc);
                } catch (const Error& e) {
                    report(e.kind(), t.loc, e.what());
                    return;
                }
                if (!sort_is_enumerable(t.binder_sort)) {
                    report(ErrorKind::InfiniteSort, t.loc,
                           "sum binder ranges over an infinite sort");
                    return;
                }
                size_t before = ctx.vars.size();
                for (NameId b : t.binders) ctx.vars.emplace_back(b, t.binder_sort);
                check_proc(*t.kids[0], ctx, true);
                ctx.vars.resize(before);
                return;
            }
            case ProcKind::Dist: {
                if (in_choice)
                    report(ErrorKind::Validation, t.loc,
                           "probabilistic choice may not be an alternative of `+` or sum");
                try {
                    t.binder_sort = resolve_sort(m, t.binder_sort_name, t.loc);
                } catch (const Error& e) {
                    report(e.kind(), t.loc, e.what());
                    return;
                }
                size_t before = ctx.vars.size();
                for (NameId b : t.binders) ctx.vars.emplace_back(b, t.binder_sort);
                try {
                    Sort w = typecheck_expr(*t.weight, ctx);
                    if (!w.is_numeric())
                        report(ErrorKind::TypeMismatch, t.weight->loc,
                               "distribution weight must be numeric");
                } catch (const Error& e) {
                    report(e.kind(), e.loc(), e.what());
                }
                t.binder_bounds.assign(t.binders.size(), -1);
                if (!sort_is_enumerable(t.binder_sort)) {
                    if (t.binder_sort.kind != SortKind::Nat) {
                        report(ErrorKind::UnboundedDistribution, t.loc,
                               "dist binder sort must be finite or Nat with bounded weight");
                    } else {
                        analyse_bounds(t);
                    }
                }
                check_proc(*t.kids[0], ctx, false);
                ctx.vars.resize(before);
                return;
            }
            case ProcKind::CallProc: {
                const ProcessDecl* p = m.find_process(t.name);
                if (!p) {
                    report(ErrorKind::UnknownName, t.loc,
                           "process `" + name_of(t.name) + "` not defined");
                    return;
                }
                t.proc_index = m.process_index(t.name);
                if (p->params.size() != t.args.size()) {
                    report(ErrorKind::ArityMismatch, t.loc,
                           "process `" + name_of(t.name) + "` expects " +
                               std::to_string(p->params.size()) + " argument(s), got " +
                               std::to_string(t.args.size()));
                    return;
                }
                for (size_t i = 0; i < t.args.size(); ++i) {
                    try {
                        Sort s = typecheck_expr(*t.args[i], ctx);
                        if (!is_subsort(s, p->param_sorts[i]))
                            report(ErrorKind::TypeMismatch, t.args[i]->loc,
                                   "argument " + std::to_string(i + 1) + " of `" +
                                       name_of(t.name) + "` has the wrong sort");
                    } catch (const Error& e) {
                        report(e.kind(), e.loc(), e.what());
                    }
                }
                return;
            }
        }
    }

    // Every Nat binder needs one factor of the weight that provably zeroes
    // it outside a finite range (the `if(i < 24, 1/24, 0)` idiom).
    void analyse_bounds(const ProcessTerm& t) {
        std::vector<ExprPtr> factors;
        collect_factors(t.weight, factors);
        for (size_t bi = 0; bi < t.binders.size(); ++bi) {
            NameId b = t.binders[bi];
            std::optional<long> bound;
            for (const auto& f : factors) {
                if (!mentions(f, b)) continue;
                for (NameId other : t.binders)
                    if (other != b && mentions(f, other)) {
                        report(ErrorKind::UnboundedDistribution, t.loc,
                               "weight factor couples several Nat binders; "
                               "cannot prove bounded support");
                        return;
                    }
                if (auto k = zeroing_bound(f, b, m.functions, 0)) {
                    bound = bound ? std::min(*bound, *k) : *k;
                }
            }
            if (!bound) {
                report(ErrorKind::UnboundedDistribution, t.loc,
                       "cannot prove bounded support for dist binder `" + name_of(b) + "`");
                return;
            }
            t.binder_bounds[bi] = *bound;
        }
    }
};

}  // namespace

ExprPtr subst_expr(const ExprPtr& e, const std::vector<std::pair<NameId, Value>>& bindings) {
    std::vector<std::pair<NameId, ExprPtr>> exprs;
    exprs.reserve(bindings.size());
    for (const auto& [n, v] : bindings) exprs.emplace_back(n, Expr::lit_expr(v));
    return subst_expr_exprs(e, exprs);
}

Diagnostics validate_model(ModelSpec& spec) {
    ModelValidator v{spec, {}};
    v.run();
    spec.validated = v.diags.empty();
    return v.diags;
}

namespace {

struct FormulaValidator {
    FormulaSpec& spec;
    const ModelSpec& model;
    Diagnostics diags;
    std::vector<std::pair<NameId, const Formula*>> fix_scope;
    std::vector<NameId> bound_vars;
    std::set<NameId> params;

    void report(ErrorKind k, SourceLoc loc, std::string msg) {
        diags.push_back(Diagnostic{k, loc, std::move(msg)});
    }

    FormulaPtr walk(const FormulaPtr& f) {
        switch (f->kind) {
            case FormKind::Const:
            case FormKind::Top:
            case FormKind::Bottom: return f;
            case FormKind::Data: {
                collect_params(f->data);
                return f;
            }
            case FormKind::Add:
            case FormKind::Sub:
            case FormKind::Min:
            case FormKind::Max: {
                auto n = std::make_shared<Formula>(*f);
                n->kids = {walk(f->kids[0]), walk(f->kids[1])};
                return n;
            }
            case FormKind::Scale: {
                collect_params(f->data);
                auto n = std::make_shared<Formula>(*f);
                n->kids = {walk(f->kids[0])};
                return n;
            }
            case FormKind::Diamond:
            case FormKind::Box: {
                auto n = std::make_shared<Formula>(*f);
                if (f->pattern.kind == ActionPattern::Action) {
                    int idx = model.action_index(f->pattern.action);
                    if (idx < 0) {
                        report(ErrorKind::UnknownName, f->pattern.loc,
                               "action `" + name_of(f->pattern.action) +
                                   "` not declared in the model");
                    } else {
                        n->pattern.action_index = idx;
                        const ActionDecl& a = model.actions[static_cast<size_t>(idx)];
                        if (a.param_sorts.size() != f->pattern.args.size())
                            report(ErrorKind::ArityMismatch, f->pattern.loc,
                                   "pattern `" + name_of(f->pattern.action) + "` expects " +
                                       std::to_string(a.param_sorts.size()) + " argument(s)");
                        for (const auto& arg : f->pattern.args) collect_params(arg);
                    }
                }
                n->kids = {walk(f->kids[0])};
                return n;
            }
            case FormKind::Sup:
            case FormKind::Inf: {
                auto n = std::make_shared<Formula>(*f);
                try {
                    n->binder_sort = resolve_sort(model, f->binder_sort_name, f->loc);
                    f->binder_sort = n->binder_sort;
                } catch (const Error& e) {
                    report(e.kind(), f->loc, e.what());
                    return n;
                }
                size_t before = bound_vars.size();
                for (NameId b : f->binders) bound_vars.push_back(b);
                n->kids = {walk(f->kids[0])};
                bound_vars.resize(before);
                return n;
            }
            case FormKind::SumQ: {
                // sum x,..:S . phi  expands to  phi[x:=v1] + phi[x:=v2] + ...
                Sort s;
                try {
                    s = resolve_sort(model, f->binder_sort_name, f->loc);
                } catch (const Error& e) {
                    report(e.kind(), f->loc, e.what());
                    return f;
                }
                if (!sort_is_enumerable(s)) {
                    report(ErrorKind::InfiniteSort, f->loc,
                           "sum quantifier needs a finite sort");
                    return f;
                }
                std::vector<Value> values = enumerate_sort(model.sorts, s);
                std::vector<FormulaPtr> terms{f->kids[0]};
                for (NameId b : f->binders) {
                    std::vector<FormulaPtr> next;
                    for (const auto& t : terms)
                        for (const auto& v : values) next.push_back(subst_formula(t, {{b, v}}));
                    terms = std::move(next);
                }
                FormulaPtr acc = walk(terms[0]);
                for (size_t i = 1; i < terms.size(); ++i) {
                    auto add = std::make_shared<Formula>();
                    add->kind = FormKind::Add;
                    add->loc = f->loc;
                    add->kids = {acc, walk(terms[i])};
                    acc = add;
                }
                return acc;
            }
            case FormKind::Mu:
            case FormKind::Nu: {
                auto n = std::make_shared<Formula>(*f);
                size_t bound_before = bound_vars.size();
                for (auto& p : n->params) {
                    try {
                        p.sort = resolve_sort(model, p.sort_name, f->loc);
                    } catch (const Error& e) {
                        report(e.kind(), f->loc, e.what());
                    }
                    collect_params(p.init);
                    bound_vars.push_back(p.name);
                }
                fix_scope.emplace_back(f->fixvar, n.get());
                n->kids = {walk(f->kids[0])};
                fix_scope.pop_back();
                bound_vars.resize(bound_before);
                return n;
            }
            case FormKind::FixCall: {
                const Formula* decl = nullptr;
                for (auto it = fix_scope.rbegin(); it != fix_scope.rend(); ++it)
                    if (it->first == f->fixvar) decl = it->second;
                if (!decl) {
                    report(ErrorKind::UnknownName, f->loc,
                           "fixpoint variable `" + name_of(f->fixvar) + "` not in scope");
                    return f;
                }
                if (decl->params.size() != f->call_args.size())
                    report(ErrorKind::ArityMismatch, f->loc,
                           "`" + name_of(f->fixvar) + "` expects " +
                               std::to_string(decl->params.size()) + " argument(s), got " +
                               std::to_string(f->call_args.size()));
                auto n = std::make_shared<Formula>(*f);
                n->fix_decl = decl;
                for (const auto& a : f->call_args) collect_params(a);
                return n;
            }
        }
        return f;
    }

    // Free names in data expressions that neither the model nor any binder
    // resolves must be supplied as check-time parameters.
    void collect_params(const ExprPtr& e) {
        if (!e) return;
        if (e->kind == ExprKind::Var) {
            NameId n = e->name;
            for (NameId b : bound_vars)
                if (b == n) return;
            Sort s;
            int ctor;
            if (model.sorts.lookup_constructor(name_of(n), &s, &ctor)) return;
            if (model.functions.find(n)) return;
            params.insert(n);
            return;
        }
        if (e->kind == ExprKind::Call && !model.functions.find(e->name))
            report(ErrorKind::UnknownName, e->loc,
                   "function `" + name_of(e->name) + "` not declared");
        for (const auto& a : e->args) collect_params(a);
    }
};

FormulaPtr subst_data_in_formula(const FormulaPtr& f,
                                 const std::vector<std::pair<NameId, Value>>& bindings) {
    auto n = std::make_shared<Formula>(*f);
    bool changed = false;
    if (f->data) {
        n->data = subst_expr(f->data, bindings);
        changed |= n->data != f->data;
    }
    for (auto& a : n->call_args) {
        ExprPtr s = subst_expr(a, bindings);
        changed |= s != a;
        a = s;
    }
    for (auto& a : n->pattern.args) {
        ExprPtr s = subst_expr(a, bindings);
        changed |= s != a;
        a = s;
    }
    for (auto& p : n->params) {
        ExprPtr s = subst_expr(p.init, bindings);
        changed |= s != p.init;
        p.init = s;
    }
    for (auto& k : n->kids) {
        FormulaPtr s = subst_formula(k, bindings);
        changed |= s != k;
        k = s;
    }
    return changed ? n : f;
}

}  // namespace

FormulaPtr subst_formula(const FormulaPtr& f,
                         const std::vector<std::pair<NameId, Value>>& bindings) {
    // Binders shadow; drop shadowed bindings before descending.
    std::vector<std::pair<NameId, Value>> live = bindings;
    auto drop = [&](NameId n) {
        live.erase(std::remove_if(live.begin(), live.end(),
                                  [&](const auto& b) { return b.first == n; }),
                   live.end());
    };
    for (NameId b : f->binders) drop(b);
    for (const auto& p : f->params) drop(p.name);
    if (live.empty()) return f;
    return subst_data_in_formula(f, live);
}

Diagnostics validate_formula(FormulaSpec& spec, const ModelSpec& model) {
    FormulaValidator v{spec, model, {}, {}, {}, {}};
    FormulaPtr walked = v.walk(spec.root);
    if (v.diags.empty()) {
        spec.root = walked;
        spec.required_params.assign(v.params.begin(), v.params.end());
        spec.validated = true;
    }
    return v.diags;
}

}  // namespace spinspec
