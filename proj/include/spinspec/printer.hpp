#pragma once

#include <string>

#include "spinspec/formula_ast.hpp"
#include "spinspec/model_ast.hpp"

namespace spinspec {

/// Renders a model back to .psm concrete syntax; parse(print(m)) == m
/// up to whitespace.
std::string print_model(const ModelSpec& m);

std::string print_process(const ProcessTerm& p);

/// Renders a formula back to .qmf concrete syntax.
std::string print_formula(const Formula& f);

}  // namespace spinspec
