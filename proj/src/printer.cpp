#include "spinspec/printer.hpp"

namespace spinspec {

namespace {

// Process precedence: choice(1) < cond(2) < prefix/seq(3) < atom(4).
// sum/dist extend right maximally and print at choice level.
void print_proc(const ProcessTerm& p, std::string& out, int parent) {
    auto wrap = [&](int mine, auto body) {
        bool paren = mine < parent;
        if (paren) out += "(";
        body();
        if (paren) out += ")";
    };
    switch (p.kind) {
        case ProcKind::Deadlock: out += "delta"; return;
        case ProcKind::Choice:
            wrap(1, [&] {
                // A sum/dist left operand would swallow ` + q` into its body.
                bool greedy_lhs = p.kids[0]->kind == ProcKind::Sum ||
                                  p.kids[0]->kind == ProcKind::Dist;
                print_proc(*p.kids[0], out, greedy_lhs ? 2 : 1);
                out += " + ";
                print_proc(*p.kids[1], out, 2);
            });
            return;
        case ProcKind::Cond:
            wrap(2, [&] {
                out += expr_to_string(*p.cond);
                out += " -> ";
                // With an explicit else, a then-branch that could swallow the
                // `<>` (a nested condition, sum or dist) must be bracketed.
                print_proc(*p.kids[0], out, p.else_omitted ? 2 : 3);
                if (!p.else_omitted) {
                    out += " <> ";
                    print_proc(*p.kids[1], out, 2);
                }
            });
            return;
        case ProcKind::Prefix:
            wrap(3, [&] {
                out += name_of(p.name);
                if (!p.args.empty()) {
                    out += "(";
                    for (size_t i = 0; i < p.args.size(); ++i) {
                        if (i) out += ", ";
                        out += expr_to_string(*p.args[i]);
                    }
                    out += ")";
                }
                out += " . ";
                print_proc(*p.kids[0], out, 3);
            });
            return;
        case ProcKind::Sum:
        case ProcKind::Dist:
            wrap(1, [&] {
                out += p.kind == ProcKind::Sum ? "sum " : "dist ";
                for (size_t i = 0; i < p.binders.size(); ++i) {
                    if (i) out += ", ";
                    out += name_of(p.binders[i]);
                }
                out += ": " + p.binder_sort_name;
                if (p.kind == ProcKind::Dist) out += "[" + expr_to_string(*p.weight) + "]";
                out += " . ";
                print_proc(*p.kids[0], out, 1);
            });
            return;
        case ProcKind::CallProc:
            out += name_of(p.name);
            if (!p.args.empty()) {
                out += "(";
                for (size_t i = 0; i < p.args.size(); ++i) {
                    if (i) out += ", ";
                    out += expr_to_string(*p.args[i]);
                }
                out += ")";
            }
            return;
    }
}

}  // namespace

std::string print_process(const ProcessTerm& p) {
    std::string out;
    print_proc(p, out, 0);
    return out;
}

std::string print_model(const ModelSpec& m) {
    std::string out;
    for (const auto& item : m.data_items) {
        switch (item.kind) {
            case ModelSpec::DataItem::SortDecl:
                out += "sort " + item.sort_name + " = " + item.sort_rhs + ";\n";
                break;
            case ModelSpec::DataItem::MapDecl:
                out += "map";
                for (const auto& [name, type] : item.map_entries)
                    out += " " + name + ": " + type + ";";
                out += "\n";
                break;
            case ModelSpec::DataItem::EqnGroup: {
                if (!item.eqn_vars.empty()) {
                    out += "var";
                    for (const auto& [v, s] : item.eqn_vars)
                        out += " " + name_of(v) + ": " + s + ";";
                    out += "\n";
                }
                if (!item.eqn_functions.empty()) {
                    out += "eqn\n";
                    for (int fi : item.eqn_functions) {
                        const FunctionDef& def = m.functions.at(fi);
                        out += "  " + name_of(def.name);
                        if (!def.params.empty()) {
                            out += "(";
                            for (size_t i = 0; i < def.params.size(); ++i) {
                                if (i) out += ", ";
                                out += name_of(def.params[i].first);
                            }
                            out += ")";
                        }
                        out += " = " + expr_to_string(*def.body) + ";\n";
                    }
                }
                break;
            }
        }
    }
    if (!m.actions.empty()) {
        out += "act";
        for (const auto& a : m.actions) {
            out += " " + name_of(a.name);
            if (!a.param_sort_names.empty()) {
                out += ": ";
                for (size_t i = 0; i < a.param_sort_names.size(); ++i) {
                    if (i) out += " # ";
                    out += a.param_sort_names[i];
                }
            }
            out += ";";
        }
        out += "\n";
    }
    if (!m.globs.empty()) {
        out += "glob";
        for (const auto& g : m.globs) out += " " + name_of(g.name) + ": " + g.sort_name + ";";
        out += "\n";
    }
    if (!m.processes.empty()) {
        out += "proc\n";
        for (const auto& p : m.processes) {
            out += "  " + name_of(p.name);
            if (!p.params.empty()) {
                out += "(";
                for (size_t i = 0; i < p.params.size(); ++i) {
                    if (i) out += ", ";
                    out += name_of(p.params[i].first) + ": " + p.params[i].second;
                }
                out += ")";
            }
            out += " = " + print_process(*p.body) + ";\n";
        }
    }
    if (m.init) out += "init " + print_process(*m.init) + ";\n";
    return out;
}

namespace {

// Formula precedence mirrors the parser's tower: quantifiers(0) < ||(1)
// < &&(2) < +-(3) < *(4) < modal/unary(5) < atoms(6).
void print_f(const Formula& f, std::string& out, int parent) {
    auto wrap = [&](int mine, auto body) {
        bool paren = mine < parent;
        if (paren) out += "(";
        body();
        if (paren) out += ")";
    };
    switch (f.kind) {
        case FormKind::Const: out += f.constant.str(); return;
        case FormKind::Top: out += "true"; return;
        case FormKind::Bottom: out += "false"; return;
        case FormKind::Data: {
            // Parenthesize compound data so the formula grammar re-reads it
            // as one data operand.
            std::string s = expr_to_string(*f.data);
            bool atom = s.find(' ') == std::string::npos;
            if (!atom) out += "(";
            out += s;
            if (!atom) out += ")";
            return;
        }
        case FormKind::Max:
            wrap(1, [&] {
                print_f(*f.kids[0], out, 1);
                out += " || ";
                print_f(*f.kids[1], out, 2);
            });
            return;
        case FormKind::Min:
            wrap(2, [&] {
                print_f(*f.kids[0], out, 2);
                out += " && ";
                print_f(*f.kids[1], out, 3);
            });
            return;
        case FormKind::Add:
        case FormKind::Sub:
            wrap(3, [&] {
                print_f(*f.kids[0], out, 3);
                out += f.kind == FormKind::Add ? " + " : " - ";
                print_f(*f.kids[1], out, 4);
            });
            return;
        case FormKind::Scale:
            wrap(4, [&] {
                std::string c = expr_to_string(*f.data);
                if (c.find(' ') != std::string::npos) c = "(" + c + ")";
                out += c + " * ";
                print_f(*f.kids[0], out, 4);
            });
            return;
        case FormKind::Diamond:
        case FormKind::Box: {
            wrap(5, [&] {
                bool dia = f.kind == FormKind::Diamond;
                out += dia ? "<" : "[";
                const ActionPattern& p = f.pattern;
                if (p.kind == ActionPattern::AnyAction) out += "true";
                else if (p.kind == ActionPattern::AnyStar) out += "true*";
                else {
                    out += name_of(p.action);
                    if (!p.args.empty()) {
                        out += "(";
                        for (size_t i = 0; i < p.args.size(); ++i) {
                            if (i) out += ", ";
                            out += expr_to_string(*p.args[i]);
                        }
                        out += ")";
                    }
                }
                out += dia ? ">" : "]";
                print_f(*f.kids[0], out, 5);
            });
            return;
        }
        case FormKind::Sup:
        case FormKind::Inf:
        case FormKind::SumQ: {
            wrap(0, [&] {
                out += f.kind == FormKind::Sup ? "sup " : f.kind == FormKind::Inf ? "inf "
                                                                                  : "sum ";
                for (size_t i = 0; i < f.binders.size(); ++i) {
                    if (i) out += ", ";
                    out += name_of(f.binders[i]);
                }
                out += ": " + f.binder_sort_name + " . ";
                print_f(*f.kids[0], out, 0);
            });
            return;
        }
        case FormKind::Mu:
        case FormKind::Nu: {
            wrap(0, [&] {
                out += f.kind == FormKind::Mu ? "mu " : "nu ";
                out += name_of(f.fixvar);
                if (!f.params.empty()) {
                    out += "(";
                    for (size_t i = 0; i < f.params.size(); ++i) {
                        if (i) out += ", ";
                        out += name_of(f.params[i].name) + ": " + f.params[i].sort_name +
                               " = " + expr_to_string(*f.params[i].init);
                    }
                    out += ")";
                }
                out += " . ";
                print_f(*f.kids[0], out, 0);
            });
            return;
        }
        case FormKind::FixCall: {
            out += name_of(f.fixvar);
            if (!f.call_args.empty()) {
                out += "(";
                for (size_t i = 0; i < f.call_args.size(); ++i) {
                    if (i) out += ", ";
                    out += expr_to_string(*f.call_args[i]);
                }
                out += ")";
            }
            return;
        }
    }
}

}  // namespace

std::string print_formula(const Formula& f) {
    std::string out;
    print_f(f, out, 0);
    return out;
}

}  // namespace spinspec
