#pragma once

#include <string>

#include "spinspec/formula_ast.hpp"
#include "spinspec/model_ast.hpp"

namespace spinspec {

/// Parses a .psm process-model text. Throws Error(Syntax) with location.
ModelPtr parse_model(const std::string& text, const std::string& name = "model");

/// Parses a .qmf quantitative-formula text. Throws Error(Syntax).
FormulaSpecPtr parse_formula(const std::string& text, const std::string& name = "formula");

/// Parses a single data expression (used by reward specs and parameters).
ExprPtr parse_expr_text(const std::string& text);

}  // namespace spinspec
