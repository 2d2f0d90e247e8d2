#pragma once

#include "spinspec/formula_ast.hpp"
#include "spinspec/model_ast.hpp"

namespace spinspec {

/// Checks and resolves a parsed model in place: sorts, action/process
/// references, arities, guard sorts, distribution weight sorts, and the
/// bounded-support rule for dist binders over infinite sorts.
/// Empty result means the model is well-formed; spec.validated is set.
Diagnostics validate_model(ModelSpec& spec);

/// Checks a formula against a model: action patterns, fixpoint arities,
/// binder sorts. Expands `sum` quantifiers into explicit sums. Free data
/// names become spec.required_params (supplied later via EvalOptions).
Diagnostics validate_formula(FormulaSpec& spec, const ModelSpec& model);

/// Substitution helpers (capture is not an issue: substituted values are
/// literals).
ExprPtr subst_expr(const ExprPtr& e, const std::vector<std::pair<NameId, Value>>& bindings);
FormulaPtr subst_formula(const FormulaPtr& f,
                         const std::vector<std::pair<NameId, Value>>& bindings);

/// Bounded-support analysis for `dist x:Nat[w]`: returns the exclusive upper
/// bound proven for x (weight is zero at and above it), or nullopt.
std::optional<long> bounded_support(const ExprPtr& weight, NameId binder,
                                    const FunctionTable& funcs);

}  // namespace spinspec
