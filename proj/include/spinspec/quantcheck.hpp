#pragma once

#include <map>
#include <unordered_map>

#include "spinspec/eqsystem.hpp"
#include "spinspec/formula_ast.hpp"
#include "spinspec/plts.hpp"

namespace spinspec {

struct EvalOptions {
    /// Formula parameters such as max_rounds; must cover required_params.
    std::map<std::string, Value> params;
    /// Convergence tolerance for cyclic fixpoints solved by iteration alone.
    Rat tolerance = Rat(1, 1000000000);
    long max_iterations = 1000000;
    /// Exact mode: backward induction for horizon-bounded systems and
    /// policy-locked linear solves for cyclic ones. When false, cyclic
    /// components use plain Kleene iteration up to the tolerance.
    bool exact_acceleration = true;
    bool check_monotone = true;
};

struct EvalStats {
    long sweeps = 0;
    long variables = 0;
    bool exact = true;
    /// Index of the horizon parameter of the last layered fixpoint (-1 when
    /// no layered solve ran); strategy extraction reads the layer from it.
    int horizon_index = -1;
    double seconds = 0;
};

struct EvalResult {
    ExtReal value;
    EvalStats stats;
};

/// Rewrites `<true*>phi` into `mu Z. phi || <true>Z` and `[true*]phi` into
/// `nu Z. phi && [true]Z`; other regular modalities pass through.
FormulaPtr lower_regular(const FormulaPtr& f);

/// Observer/resolver for nondeterministic decision points (modalities that
/// match two or more transitions). Used by strategy extraction and
/// verification; fix_args is the enclosing fixpoint's argument tuple.
class ChoiceHook {
  public:
    virtual ~ChoiceHook() = default;
    /// The layered solver announces which fixpoint parameter is the horizon
    /// before any decision below it fires.
    virtual void horizon(int param_index) { (void)param_index; }
    /// Return the index of the transition to force, or -1 to optimize freely.
    virtual int resolve(StateId s, const std::vector<Value>& fix_args,
                        const std::vector<ActionLabel>& alternatives) {
        (void)s;
        (void)fix_args;
        (void)alternatives;
        return -1;
    }
    virtual void observe(StateId s, const std::vector<Value>& fix_args, bool maximize,
                         const std::vector<ActionLabel>& alternatives, size_t chosen,
                         const ExtReal& value) {
        (void)s;
        (void)fix_args;
        (void)maximize;
        (void)alternatives;
        (void)chosen;
        (void)value;
    }
};

/// Value of the formula at the initial distribution (probability-weighted
/// over the initial support).
EvalResult evaluate(const Plts& plts, const FormulaSpec& formula, const EvalOptions& opts = {},
                    ChoiceHook* hook = nullptr);

/// Full per-state solution vector of the formula.
std::unordered_map<StateId, ExtReal> evaluate_per_state(const Plts& plts,
                                                        const FormulaSpec& formula,
                                                        const EvalOptions& opts = {},
                                                        EvalStats* stats = nullptr,
                                                        ChoiceHook* hook = nullptr);

}  // namespace spinspec
