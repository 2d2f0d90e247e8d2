#include "spinspec/eqsystem.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace spinspec {

int EqSystem::add_variable(FixSign sign, std::string name) {
    vars_.push_back(VarInfo{sign, std::move(name), nullptr});
    return static_cast<int>(vars_.size() - 1);
}

void EqSystem::set_rhs(int var, const EqNode* rhs) {
    vars_.at(static_cast<size_t>(var)).rhs = rhs;
}

const EqNode* EqSystem::constant(ExtReal v) {
    auto n = std::make_unique<EqNode>();
    n->kind = EqNode::Const;
    n->constant = std::move(v);
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

const EqNode* EqSystem::variable(int var) {
    auto n = std::make_unique<EqNode>();
    n->kind = EqNode::Var;
    n->var = var;
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

const EqNode* EqSystem::add(const EqNode* a, const EqNode* b) {
    auto n = std::make_unique<EqNode>();
    n->kind = EqNode::Add;
    n->kids = {a, b};
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

const EqNode* EqSystem::sub(const EqNode* a, const EqNode* b) {
    auto n = std::make_unique<EqNode>();
    n->kind = EqNode::Sub;
    n->kids = {a, b};
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

const EqNode* EqSystem::scale(Rat c, const EqNode* a) {
    auto n = std::make_unique<EqNode>();
    n->kind = EqNode::Scale;
    n->coeff = std::move(c);
    n->kids = {a};
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

const EqNode* EqSystem::extremum(bool maximize, std::vector<const EqNode*> kids) {
    auto n = std::make_unique<EqNode>();
    n->kind = maximize ? EqNode::Max : EqNode::Min;
    n->kids = std::move(kids);
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

const EqNode* EqSystem::weighted_sum(std::vector<std::pair<Rat, const EqNode*>> terms) {
    auto n = std::make_unique<EqNode>();
    n->kind = EqNode::WSum;
    n->terms = std::move(terms);
    arena_.push_back(std::move(n));
    return arena_.back().get();
}

namespace {

ExtReal eval_node(const EqNode* n, const std::vector<ExtReal>& x) {
    switch (n->kind) {
        case EqNode::Const: return n->constant;
        case EqNode::Var: return x[static_cast<size_t>(n->var)];
        case EqNode::Add: return eval_node(n->kids[0], x) + eval_node(n->kids[1], x);
        case EqNode::Sub: return eval_node(n->kids[0], x) - eval_node(n->kids[1], x);
        case EqNode::Scale: return eval_node(n->kids[0], x).scale(n->coeff);
        case EqNode::Min:
        case EqNode::Max: {
            bool maximize = n->kind == EqNode::Max;
            ExtReal best = eval_node(n->kids[0], x);
            n->last_choice = 0;
            for (size_t i = 1; i < n->kids.size(); ++i) {
                ExtReal v = eval_node(n->kids[i], x);
                if (maximize ? best < v : v < best) {
                    best = v;
                    n->last_choice = static_cast<int>(i);
                }
            }
            return best;
        }
        case EqNode::WSum: {
            ExtReal acc(0);
            for (const auto& [c, kid] : n->terms) acc = acc + eval_node(kid, x).scale(c);
            return acc;
        }
    }
    throw Error(ErrorKind::Internal, "bad EqNode");
}

void collect_vars(const EqNode* n, std::set<int>& out) {
    switch (n->kind) {
        case EqNode::Const: return;
        case EqNode::Var: out.insert(n->var); return;
        case EqNode::WSum:
            for (const auto& [c, kid] : n->terms) {
                (void)c;
                collect_vars(kid, out);
            }
            return;
        default:
            for (const EqNode* k : n->kids) collect_vars(k, out);
    }
}

struct Tarjan {
    const std::vector<std::vector<int>>& deps;
    std::vector<int> index, low, on_stack;
    std::vector<int> stack;
    int counter = 0;
    std::vector<std::vector<int>> sccs;

    explicit Tarjan(const std::vector<std::vector<int>>& d)
        : deps(d), index(d.size(), -1), low(d.size(), 0), on_stack(d.size(), 0) {}

    void run() {
        for (size_t v = 0; v < deps.size(); ++v)
            if (index[v] < 0) visit(static_cast<int>(v));
    }

    void visit(int v) {
        index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = counter++;
        stack.push_back(v);
        on_stack[static_cast<size_t>(v)] = 1;
        for (int w : deps[static_cast<size_t>(v)]) {
            if (index[static_cast<size_t>(w)] < 0) {
                visit(w);
                low[static_cast<size_t>(v)] =
                    std::min(low[static_cast<size_t>(v)], low[static_cast<size_t>(w)]);
            } else if (on_stack[static_cast<size_t>(w)]) {
                low[static_cast<size_t>(v)] =
                    std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
            }
        }
        if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
            std::vector<int> scc;
            for (;;) {
                int w = stack.back();
                stack.pop_back();
                on_stack[static_cast<size_t>(w)] = 0;
                scc.push_back(w);
                if (w == v) break;
            }
            sccs.push_back(std::move(scc));
        }
    }
};

// Affine view c + sum coeff_i * x_i of an RHS under the recorded choices.
struct Affine {
    bool ok = true;
    ExtReal c{0};
    std::map<int, Rat> terms;
};

Affine affine_of(const EqNode* n, const std::set<int>& scc, const std::vector<ExtReal>& x) {
    Affine out;
    switch (n->kind) {
        case EqNode::Const: out.c = n->constant; return out;
        case EqNode::Var:
            if (scc.count(n->var)) out.terms[n->var] = Rat(1);
            else out.c = x[static_cast<size_t>(n->var)];
            return out;
        case EqNode::Add:
        case EqNode::Sub: {
            Affine a = affine_of(n->kids[0], scc, x);
            Affine b = affine_of(n->kids[1], scc, x);
            if (!a.ok || !b.ok) return {false, ExtReal(0), {}};
            bool subtract = n->kind == EqNode::Sub;
            try {
                out.c = subtract ? a.c - b.c : a.c + b.c;
            } catch (const Error&) {
                return {false, ExtReal(0), {}};
            }
            out.terms = std::move(a.terms);
            for (auto& [v, q] : b.terms) {
                Rat delta = subtract ? -q : q;
                auto [it, fresh] = out.terms.emplace(v, delta);
                if (!fresh) it->second += delta;
            }
            return out;
        }
        case EqNode::Scale: {
            Affine a = affine_of(n->kids[0], scc, x);
            if (!a.ok) return a;
            out.c = a.c.scale(n->coeff);
            for (auto& [v, q] : a.terms) out.terms[v] = q * n->coeff;
            return out;
        }
        case EqNode::Min:
        case EqNode::Max:
            return affine_of(n->kids[static_cast<size_t>(n->last_choice)], scc, x);
        case EqNode::WSum: {
            for (const auto& [c, kid] : n->terms) {
                Affine a = affine_of(kid, scc, x);
                if (!a.ok) return {false, ExtReal(0), {}};
                try {
                    out.c = out.c + a.c.scale(c);
                } catch (const Error&) {
                    return {false, ExtReal(0), {}};
                }
                for (auto& [v, q] : a.terms) {
                    Rat delta = q * c;
                    auto [it, fresh] = out.terms.emplace(v, delta);
                    if (!fresh) it->second += delta;
                }
            }
            return out;
        }
    }
    return {false, ExtReal(0), {}};
}

// Exact Gaussian elimination for x = A x + b over the SCC variables.
// Returns empty on a singular system.
std::vector<Rat> solve_linear(const std::vector<int>& vars,
                              const std::vector<Affine>& forms) {
    size_t n = vars.size();
    std::map<int, size_t> slot;
    for (size_t i = 0; i < n; ++i) slot[vars[i]] = i;
    // rows: (I - A) x = b
    std::vector<std::vector<Rat>> m(n, std::vector<Rat>(n + 1, Rat(0)));
    for (size_t i = 0; i < n; ++i) {
        m[i][i] = Rat(1);
        for (const auto& [v, q] : forms[i].terms) m[i][slot.at(v)] -= q;
        m[i][n] = forms[i].c.value();
    }
    std::vector<size_t> perm(n);
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        while (pivot < n && m[pivot][col].is_zero()) ++pivot;
        if (pivot == n) return {};
        std::swap(m[col], m[pivot]);
        Rat inv = m[col][col];
        for (size_t j = col; j <= n; ++j) m[col][j] = m[col][j] / inv;
        for (size_t r = 0; r < n; ++r) {
            if (r == col || m[r][col].is_zero()) continue;
            Rat f = m[r][col];
            for (size_t j = col; j <= n; ++j) m[r][j] -= f * m[col][j];
        }
    }
    std::vector<Rat> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = m[i][n];
    return out;
}

}  // namespace

std::vector<ExtReal> solve(const EqSystem& system, const SolveOptions& opts,
                           SolveStats* stats_out) {
    size_t n = system.size();
    std::vector<std::vector<int>> deps(n);
    for (size_t v = 0; v < n; ++v) {
        std::set<int> ds;
        collect_vars(system.rhs(static_cast<int>(v)), ds);
        deps[v].assign(ds.begin(), ds.end());
    }
    Tarjan tarjan(deps);
    tarjan.run();

    std::vector<ExtReal> x(n, ExtReal(0));
    SolveStats stats;

    for (const auto& scc : tarjan.sccs) {
        FixSign sign = system.sign(scc[0]);
        bool cyclic = scc.size() > 1;
        for (int v : scc) {
            if (system.sign(v) != sign)
                throw Error(ErrorKind::MixedSignCycle,
                            "mu and nu variables are mutually recursive (" +
                                system.name(scc[0]) + ", " + system.name(v) + ")");
            for (int w : deps[static_cast<size_t>(v)])
                if (w == v) cyclic = true;
        }
        std::set<int> members(scc.begin(), scc.end());
        if (!cyclic) {
            int v = scc[0];
            x[static_cast<size_t>(v)] = eval_node(system.rhs(v), x);
            continue;
        }

        ExtReal bottom = sign == FixSign::Mu ? ExtReal::neg_inf() : ExtReal::pos_inf();
        for (int v : scc) x[static_cast<size_t>(v)] = bottom;

        std::vector<ExtReal> next(scc.size());
        std::vector<std::vector<int>> prev_choices, choices;
        long sweep = 0;
        bool done = false;
        while (!done) {
            if (++sweep > opts.max_iterations)
                throw Error(ErrorKind::NonConvergence,
                            "no convergence after " + std::to_string(sweep - 1) + " sweeps");
            ++stats.sweeps;
            choices.clear();
            for (size_t i = 0; i < scc.size(); ++i) {
                next[i] = eval_node(system.rhs(scc[i]), x);
                std::vector<int> ch;
                // record the argext trail for policy stability detection
                struct Rec {
                    static void walk(const EqNode* e, std::vector<int>& out) {
                        if (e->kind == EqNode::Min || e->kind == EqNode::Max)
                            out.push_back(e->last_choice);
                        for (const EqNode* k : e->kids) walk(k, out);
                        for (const auto& [c, k] : e->terms) {
                            (void)c;
                            walk(k, out);
                        }
                    }
                };
                Rec::walk(system.rhs(scc[i]), ch);
                choices.push_back(std::move(ch));
            }
            bool stable = true;
            Rat max_delta(0);
            for (size_t i = 0; i < scc.size(); ++i) {
                const ExtReal& old = x[static_cast<size_t>(scc[i])];
                if (opts.check_monotone) {
                    bool ok = sign == FixSign::Mu ? old <= next[i] : next[i] <= old;
                    if (!ok)
                        throw Error(ErrorKind::Internal,
                                    "fixpoint iteration is not monotone at " +
                                        system.name(scc[i]));
                }
                if (old != next[i]) {
                    stable = false;
                    max_delta = std::max(max_delta, ExtReal::delta(old, next[i]));
                }
            }
            for (size_t i = 0; i < scc.size(); ++i) x[static_cast<size_t>(scc[i])] = next[i];
            if (stable) {
                done = true;  // exact fixpoint reached
                break;
            }
            if (opts.exact_acceleration && choices == prev_choices) {
                // Policy settled: solve the induced linear system exactly and
                // verify the candidate as a fixpoint that dominates the
                // current iterate.
                std::vector<Affine> forms;
                bool affine_ok = true;
                for (int v : scc) {
                    Affine a = affine_of(system.rhs(v), members, x);
                    if (!a.ok || !a.c.is_finite()) {
                        affine_ok = false;
                        break;
                    }
                    forms.push_back(std::move(a));
                }
                if (affine_ok) {
                    std::vector<Rat> cand = solve_linear(scc, forms);
                    if (!cand.empty()) {
                        std::vector<ExtReal> trial = x;
                        bool dominates = true;
                        for (size_t i = 0; i < scc.size(); ++i) {
                            ExtReal cv = ExtReal::finite(cand[i]);
                            const ExtReal& cur = x[static_cast<size_t>(scc[i])];
                            if (sign == FixSign::Mu ? cv < cur : cur < cv) dominates = false;
                            trial[static_cast<size_t>(scc[i])] = std::move(cv);
                        }
                        bool is_fix = dominates;
                        if (is_fix) {
                            for (size_t i = 0; i < scc.size() && is_fix; ++i) {
                                try {
                                    is_fix = eval_node(system.rhs(scc[i]), trial) ==
                                             trial[static_cast<size_t>(scc[i])];
                                } catch (const Error&) {
                                    is_fix = false;
                                }
                            }
                        }
                        if (is_fix) {
                            x = std::move(trial);
                            done = true;
                            break;
                        }
                    }
                }
            }
            if (!opts.exact_acceleration && max_delta < opts.tolerance) {
                stats.exact = false;
                done = true;
                break;
            }
            // With acceleration, the tolerance is still a safety valve for
            // systems the lock cannot certify.
            if (opts.exact_acceleration && sweep > 64 && max_delta < opts.tolerance) {
                stats.exact = false;
                done = true;
                break;
            }
            prev_choices = choices;
        }
    }
    if (stats_out) *stats_out = stats;
    return x;
}

}  // namespace spinspec
