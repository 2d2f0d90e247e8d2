#include "spinspec/expr.hpp"

#include <algorithm>

namespace spinspec {

ExprPtr Expr::lit_expr(Value v, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Lit;
    e->lit = std::move(v);
    e->loc = loc;
    return e;
}

ExprPtr Expr::var(NameId n, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Var;
    e->name = n;
    e->loc = loc;
    return e;
}

ExprPtr Expr::make(ExprKind k, std::vector<ExprPtr> args, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->args = std::move(args);
    e->loc = loc;
    return e;
}

ExprPtr Expr::call(NameId n, std::vector<ExprPtr> args, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Call;
    e->name = n;
    e->args = std::move(args);
    e->loc = loc;
    return e;
}

int FunctionTable::add(FunctionDef def) {
    int idx = static_cast<int>(defs_.size());
    by_name_[def.name] = idx;
    defs_.push_back(std::move(def));
    return idx;
}

const FunctionDef* FunctionTable::find(NameId name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &defs_[static_cast<size_t>(it->second)];
}

int FunctionTable::index_of(NameId name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

const Value* EvalCache::find(int func, const std::vector<Value>& args) const {
    auto it = memo_.find(Key{func, args});
    return it == memo_.end() ? nullptr : &it->second;
}

void EvalCache::put(int func, std::vector<Value> args, Value result) {
    if (memo_.size() >= 400000) return;  // bounded; models stay far below this
    memo_.emplace(Key{func, std::move(args)}, std::move(result));
}

namespace {

[[noreturn]] void ill_typed(const Expr& e, const std::string& why) {
    throw Error(ErrorKind::TypeMismatch, why + " in `" + expr_to_string(e) + "`", e.loc);
}

Sort check_numeric(const Expr& e, const Sort& s, const char* what) {
    if (!s.is_numeric()) ill_typed(e, std::string(what) + " expects a numeric operand");
    return s;
}

}  // namespace

Sort typecheck_expr(const Expr& e, const TypeContext& ctx) {
    switch (e.kind) {
        case ExprKind::Lit: {
            if (e.lit.is_bool()) e.type = Sort::boolean();
            else if (e.lit.is_int())
                e.type = e.lit.as_int().sign() >= 0 ? Sort::nat() : Sort::integer();
            else if (e.lit.is_rat()) e.type = Sort::real();
            else if (e.lit.is_enum()) e.type = Sort{SortKind::Enum, e.lit.as_enum().sort_index};
            else ill_typed(e, "literal of unexpected shape");
            break;
        }
        case ExprKind::Var: {
            if (const Sort* s = ctx.find(e.name)) {
                e.var_res = Expr::VarRes::Variable;
                e.type = *s;
                break;
            }
            Sort es;
            int ctor;
            if (ctx.sorts && ctx.sorts->lookup_constructor(name_of(e.name), &es, &ctor)) {
                e.var_res = Expr::VarRes::Constructor;
                e.ctor_value = Value(
                    EnumVal{es.index, ctor, &(*ctx.sorts->enum_def(es).constructors)[ctor]});
                e.type = es;
                break;
            }
            if (ctx.funcs) {
                if (const FunctionDef* f = ctx.funcs->find(e.name)) {
                    if (!f->params.empty())
                        throw Error(ErrorKind::ArityMismatch,
                                    "`" + name_of(e.name) + "` expects " +
                                        std::to_string(f->params.size()) + " argument(s)",
                                    e.loc);
                    e.var_res = Expr::VarRes::Constant;
                    e.func_index = ctx.funcs->index_of(e.name);
                    e.type = f->result;
                    break;
                }
            }
            throw Error(ErrorKind::UnknownName, "`" + name_of(e.name) + "`", e.loc);
        }
        case ExprKind::Call: {
            const FunctionDef* f = ctx.funcs ? ctx.funcs->find(e.name) : nullptr;
            if (!f) throw Error(ErrorKind::UnknownName, "`" + name_of(e.name) + "`", e.loc);
            if (f->params.size() != e.args.size())
                throw Error(ErrorKind::ArityMismatch,
                            "`" + name_of(e.name) + "` expects " +
                                std::to_string(f->params.size()) + " argument(s), got " +
                                std::to_string(e.args.size()),
                            e.loc);
            for (size_t i = 0; i < e.args.size(); ++i) {
                Sort a = typecheck_expr(*e.args[i], ctx);
                if (!is_subsort(a, f->params[i].second))
                    ill_typed(e, "argument " + std::to_string(i + 1) + " of `" +
                                     name_of(e.name) + "` has the wrong sort");
            }
            e.func_index = ctx.funcs->index_of(e.name);
            e.type = f->result;
            break;
        }
        case ExprKind::Add:
        case ExprKind::Mul: {
            Sort a = check_numeric(e, typecheck_expr(*e.args[0], ctx), "arithmetic");
            Sort b = check_numeric(e, typecheck_expr(*e.args[1], ctx), "arithmetic");
            Sort j;
            join_sorts(a, b, &j);
            e.type = j;
            break;
        }
        case ExprKind::Sub: {
            Sort a = check_numeric(e, typecheck_expr(*e.args[0], ctx), "subtraction");
            Sort b = check_numeric(e, typecheck_expr(*e.args[1], ctx), "subtraction");
            Sort j;
            join_sorts(a, b, &j);
            // Nat is not closed under subtraction; the result lives in Int.
            if (j.kind == SortKind::Nat) j = Sort::integer();
            e.type = j;
            break;
        }
        case ExprKind::Div: {
            check_numeric(e, typecheck_expr(*e.args[0], ctx), "division");
            check_numeric(e, typecheck_expr(*e.args[1], ctx), "division");
            e.type = Sort::real();
            break;
        }
        case ExprKind::Mod: {
            Sort a = typecheck_expr(*e.args[0], ctx);
            Sort b = typecheck_expr(*e.args[1], ctx);
            if (a.kind == SortKind::Real || b.kind == SortKind::Real || !a.is_numeric() ||
                !b.is_numeric())
                ill_typed(e, "mod is defined on Nat/Int only");
            e.type = Sort::nat();
            break;
        }
        case ExprKind::Neg: {
            Sort a = check_numeric(e, typecheck_expr(*e.args[0], ctx), "negation");
            e.type = a.kind == SortKind::Real ? Sort::real() : Sort::integer();
            break;
        }
        case ExprKind::Eq:
        case ExprKind::Ne: {
            Sort a = typecheck_expr(*e.args[0], ctx);
            Sort b = typecheck_expr(*e.args[1], ctx);
            Sort j;
            if (!join_sorts(a, b, &j)) ill_typed(e, "incomparable operand sorts");
            e.type = Sort::boolean();
            break;
        }
        case ExprKind::Lt:
        case ExprKind::Le:
        case ExprKind::Gt:
        case ExprKind::Ge: {
            check_numeric(e, typecheck_expr(*e.args[0], ctx), "comparison");
            check_numeric(e, typecheck_expr(*e.args[1], ctx), "comparison");
            e.type = Sort::boolean();
            break;
        }
        case ExprKind::And:
        case ExprKind::Or: {
            for (int i = 0; i < 2; ++i)
                if (typecheck_expr(*e.args[static_cast<size_t>(i)], ctx).kind != SortKind::Bool)
                    ill_typed(e, "boolean connective expects Bool operands");
            e.type = Sort::boolean();
            break;
        }
        case ExprKind::Not: {
            if (typecheck_expr(*e.args[0], ctx).kind != SortKind::Bool)
                ill_typed(e, "negation expects a Bool operand");
            e.type = Sort::boolean();
            break;
        }
        case ExprKind::If: {
            if (typecheck_expr(*e.args[0], ctx).kind != SortKind::Bool)
                ill_typed(e, "if-condition must be Bool");
            Sort a = typecheck_expr(*e.args[1], ctx);
            Sort b = typecheck_expr(*e.args[2], ctx);
            Sort j;
            if (!join_sorts(a, b, &j)) ill_typed(e, "if-branches have incompatible sorts");
            e.type = j;
            break;
        }
        case ExprKind::ListLit: {
            if (e.args.empty()) ill_typed(e, "empty list literal has no sort");
            Sort elem = typecheck_expr(*e.args[0], ctx);
            for (size_t i = 1; i < e.args.size(); ++i) {
                Sort s = typecheck_expr(*e.args[i], ctx);
                if (!join_sorts(elem, s, &elem)) ill_typed(e, "mixed element sorts in list");
            }
            // List sorts are interned via the table of the enclosing model.
            e.type = const_cast<SortTable*>(ctx.sorts)->add_list(elem);
            break;
        }
        case ExprKind::Index: {
            Sort l = typecheck_expr(*e.args[0], ctx);
            if (l.kind != SortKind::List) ill_typed(e, "indexing a non-list");
            Sort i = typecheck_expr(*e.args[1], ctx);
            if (i.kind != SortKind::Nat) ill_typed(e, "list index must be Nat");
            e.type = ctx.sorts->list_def(l).elem;
            break;
        }
        case ExprKind::InSet: {
            Sort x = typecheck_expr(*e.args[0], ctx);
            for (size_t i = 1; i < e.args.size(); ++i) {
                Sort s = typecheck_expr(*e.args[i], ctx);
                Sort j;
                if (!join_sorts(x, s, &j)) ill_typed(e, "set element sort mismatch");
            }
            e.type = Sort::boolean();
            break;
        }
    }
    e.resolved = true;
    return e.type;
}

namespace {

std::pair<Rat, Rat> promote(const Value& a, const Value& b) {
    return {a.to_rat(), b.to_rat()};
}

Value eval_binary_numeric(ExprKind k, const Value& a, const Value& b, SourceLoc loc) {
    if (a.is_int() && b.is_int()) {
        const Int &x = a.as_int(), &y = b.as_int();
        switch (k) {
            case ExprKind::Add: return Value(x + y);
            case ExprKind::Sub: return Value(x - y);
            case ExprKind::Mul: return Value(x * y);
            default: break;
        }
    }
    auto [x, y] = promote(a, b);
    switch (k) {
        case ExprKind::Add: return Value(x + y);
        case ExprKind::Sub: return Value(x - y);
        case ExprKind::Mul: return Value(x * y);
        case ExprKind::Div:
            if (y.is_zero()) throw Error(ErrorKind::DivisionByZero, "division by zero", loc);
            return Value(x / y);
        default: break;
    }
    throw Error(ErrorKind::Internal, "bad numeric operator", loc);
}

int compare_numeric(const Value& a, const Value& b) {
    if (a.is_int() && b.is_int())
        return a.as_int() < b.as_int() ? -1 : (a.as_int() == b.as_int() ? 0 : 1);
    auto [x, y] = promote(a, b);
    return x < y ? -1 : (x == y ? 0 : 1);
}

bool values_equal(const Value& a, const Value& b) {
    if (a.is_bool() || a.is_enum() || a.is_list() || b.is_bool() || b.is_enum() || b.is_list())
        return a == b;
    return compare_numeric(a, b) == 0;
}

}  // namespace

Value eval_expr(const Env& env, const Expr& e) {
    switch (e.kind) {
        case ExprKind::Lit: return e.lit;
        case ExprKind::Var: {
            if (e.var_res == Expr::VarRes::Variable || e.var_res == Expr::VarRes::Unresolved) {
                if (const Value* v = env.find(e.name)) return *v;
                if (e.var_res == Expr::VarRes::Variable)
                    throw Error(ErrorKind::UnknownName, "unbound `" + name_of(e.name) + "`",
                                e.loc);
            }
            if (e.var_res == Expr::VarRes::Constructor) return e.ctor_value;
            if (e.var_res == Expr::VarRes::Constant) {
                const FunctionDef& f = env.funcs->at(e.func_index);
                if (env.cache) {
                    if (const Value* v = env.cache->find(e.func_index, {})) return *v;
                }
                Env inner{nullptr, env.funcs, env.cache};
                Value r = coerce_value(eval_expr(inner, *f.body), f.result, e.loc);
                if (env.cache) env.cache->put(e.func_index, {}, r);
                return r;
            }
            throw Error(ErrorKind::UnknownName, "unresolved `" + name_of(e.name) + "`", e.loc);
        }
        case ExprKind::Call: {
            const FunctionDef& f = env.funcs->at(e.func_index);
            std::vector<Value> args;
            args.reserve(e.args.size());
            for (size_t i = 0; i < e.args.size(); ++i)
                args.push_back(
                    coerce_value(eval_expr(env, *e.args[i]), f.params[i].second, e.loc));
            if (env.cache) {
                if (const Value* v = env.cache->find(e.func_index, args)) return *v;
            }
            Bindings inner_vars;
            inner_vars.reserve(args.size());
            for (size_t i = 0; i < args.size(); ++i)
                inner_vars.emplace_back(f.params[i].first, args[i]);
            Env inner{&inner_vars, env.funcs, env.cache};
            Value r = coerce_value(eval_expr(inner, *f.body), f.result, e.loc);
            if (env.cache) env.cache->put(e.func_index, std::move(args), r);
            return r;
        }
        case ExprKind::Add:
        case ExprKind::Sub:
        case ExprKind::Mul:
        case ExprKind::Div:
            return eval_binary_numeric(e.kind, eval_expr(env, *e.args[0]),
                                       eval_expr(env, *e.args[1]), e.loc);
        case ExprKind::Mod: {
            Value a = eval_expr(env, *e.args[0]);
            Value b = eval_expr(env, *e.args[1]);
            if (b.as_int().is_zero())
                throw Error(ErrorKind::DivisionByZero, "mod by zero", e.loc);
            return Value(euclid_mod(a.as_int(), b.as_int()));
        }
        case ExprKind::Neg: {
            Value a = eval_expr(env, *e.args[0]);
            return a.is_int() ? Value(-a.as_int()) : Value(-a.as_rat());
        }
        case ExprKind::Eq:
            return Value(values_equal(eval_expr(env, *e.args[0]), eval_expr(env, *e.args[1])));
        case ExprKind::Ne:
            return Value(!values_equal(eval_expr(env, *e.args[0]), eval_expr(env, *e.args[1])));
        case ExprKind::Lt:
            return Value(compare_numeric(eval_expr(env, *e.args[0]),
                                         eval_expr(env, *e.args[1])) < 0);
        case ExprKind::Le:
            return Value(compare_numeric(eval_expr(env, *e.args[0]),
                                         eval_expr(env, *e.args[1])) <= 0);
        case ExprKind::Gt:
            return Value(compare_numeric(eval_expr(env, *e.args[0]),
                                         eval_expr(env, *e.args[1])) > 0);
        case ExprKind::Ge:
            return Value(compare_numeric(eval_expr(env, *e.args[0]),
                                         eval_expr(env, *e.args[1])) >= 0);
        case ExprKind::And:
            if (!eval_expr(env, *e.args[0]).as_bool()) return Value(false);
            return eval_expr(env, *e.args[1]);
        case ExprKind::Or:
            if (eval_expr(env, *e.args[0]).as_bool()) return Value(true);
            return eval_expr(env, *e.args[1]);
        case ExprKind::Not: return Value(!eval_expr(env, *e.args[0]).as_bool());
        case ExprKind::If:
            return eval_expr(env, *e.args[eval_expr(env, *e.args[0]).as_bool() ? 1 : 2]);
        case ExprKind::ListLit: {
            auto items = std::make_shared<std::vector<Value>>();
            items->reserve(e.args.size());
            for (const auto& a : e.args) items->push_back(eval_expr(env, *a));
            return Value(Value::List(std::move(items)));
        }
        case ExprKind::Index: {
            Value l = eval_expr(env, *e.args[0]);
            Value i = eval_expr(env, *e.args[1]);
            const auto& items = *l.as_list();
            const Int& idx = i.as_int();
            if (idx.sign() < 0 || !idx.fits_long() ||
                idx.to_long() >= static_cast<long>(items.size()))
                throw Error(ErrorKind::IndexOutOfRange,
                            "index " + idx.str() + " into a list of length " +
                                std::to_string(items.size()),
                            e.loc);
            return items[static_cast<size_t>(idx.to_long())];
        }
        case ExprKind::InSet: {
            Value x = eval_expr(env, *e.args[0]);
            for (size_t i = 1; i < e.args.size(); ++i)
                if (values_equal(x, eval_expr(env, *e.args[i]))) return Value(true);
            return Value(false);
        }
    }
    throw Error(ErrorKind::Internal, "bad expression kind", e.loc);
}

static void collect_free(const Expr& e, std::vector<NameId>& out) {
    if (e.kind == ExprKind::Var) {
        if (e.var_res == Expr::VarRes::Variable || e.var_res == Expr::VarRes::Unresolved)
            out.push_back(e.name);
        return;
    }
    for (const auto& a : e.args) collect_free(*a, out);
}

const std::vector<NameId>& free_vars(const Expr& e) {
    if (!e.free_computed) {
        std::vector<NameId> out;
        collect_free(e, out);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        e.free = std::move(out);
        e.free_computed = true;
    }
    return e.free;
}

namespace {

int prec_of(ExprKind k) {
    switch (k) {
        case ExprKind::Or: return 1;
        case ExprKind::And: return 2;
        case ExprKind::Eq:
        case ExprKind::Ne:
        case ExprKind::Lt:
        case ExprKind::Le:
        case ExprKind::Gt:
        case ExprKind::Ge:
        case ExprKind::InSet: return 3;
        case ExprKind::Add:
        case ExprKind::Sub: return 4;
        case ExprKind::Mul:
        case ExprKind::Div:
        case ExprKind::Mod: return 5;
        case ExprKind::Neg:
        case ExprKind::Not: return 6;
        case ExprKind::Index: return 7;
        default: return 8;
    }
}

const char* op_token(ExprKind k) {
    switch (k) {
        case ExprKind::Or: return "||";
        case ExprKind::And: return "&&";
        case ExprKind::Eq: return "==";
        case ExprKind::Ne: return "!=";
        case ExprKind::Lt: return "<";
        case ExprKind::Le: return "<=";
        case ExprKind::Gt: return ">";
        case ExprKind::Ge: return ">=";
        case ExprKind::Add: return "+";
        case ExprKind::Sub: return "-";
        case ExprKind::Mul: return "*";
        case ExprKind::Div: return "/";
        case ExprKind::Mod: return "mod";
        default: return "?";
    }
}

void print_expr(const Expr& e, std::string& out, int parent_prec) {
    int p = prec_of(e.kind);
    bool paren = p < parent_prec;
    auto open = [&] {
        if (paren) out += "(";
    };
    auto close = [&] {
        if (paren) out += ")";
    };
    switch (e.kind) {
        case ExprKind::Lit: out += e.lit.str(); return;
        case ExprKind::Var: out += name_of(e.name); return;
        case ExprKind::Call: {
            out += name_of(e.name);
            out += "(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_expr(*e.args[i], out, 0);
            }
            out += ")";
            return;
        }
        case ExprKind::If: {
            out += "if(";
            print_expr(*e.args[0], out, 0);
            out += ", ";
            print_expr(*e.args[1], out, 0);
            out += ", ";
            print_expr(*e.args[2], out, 0);
            out += ")";
            return;
        }
        case ExprKind::ListLit: {
            out += "[";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_expr(*e.args[i], out, 0);
            }
            out += "]";
            return;
        }
        case ExprKind::Index: {
            open();
            print_expr(*e.args[0], out, p);
            out += ".";
            print_expr(*e.args[1], out, p + 1);
            close();
            return;
        }
        case ExprKind::InSet: {
            open();
            print_expr(*e.args[0], out, p + 1);
            out += " in {";
            for (size_t i = 1; i < e.args.size(); ++i) {
                if (i > 1) out += ", ";
                print_expr(*e.args[i], out, 0);
            }
            out += "}";
            close();
            return;
        }
        case ExprKind::Neg:
        case ExprKind::Not: {
            open();
            out += e.kind == ExprKind::Neg ? "-" : "!";
            print_expr(*e.args[0], out, p);
            close();
            return;
        }
        default: {
            open();
            print_expr(*e.args[0], out, p);
            out += " ";
            out += op_token(e.kind);
            out += " ";
            print_expr(*e.args[1], out, p + 1);
            close();
            return;
        }
    }
}

}  // namespace

std::string expr_to_string(const Expr& e) {
    std::string out;
    print_expr(e, out, 0);
    return out;
}

}  // namespace spinspec
