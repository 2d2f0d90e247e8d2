#pragma once

#include <optional>

#include "spinspec/formula_ast.hpp"
#include "spinspec/model_ast.hpp"

namespace spinspec {

/// Root directory of the bundled assets (models/, formulas/, golden/).
/// Compile-time default, overridable via the SPINSPEC_ASSETS env variable.
std::string asset_root();

/// Names of the bundled process models.
std::vector<std::string> list_models();

/// Loads, parses and validates a bundled model by name.
ModelPtr load_model(const std::string& name);

/// Loads and parses a bundled formula by name (validation needs a model).
FormulaSpecPtr load_formula(const std::string& name);

/// Loads, parses and validates a formula against the given model.
FormulaSpecPtr load_formula(const std::string& name, const ModelSpec& model);

struct GoldenEntry {
    std::string model;
    std::string formula;
    std::map<std::string, std::string> params;
    std::optional<Rat> expect_exact;       // exact equality required
    std::optional<Rat> expect_value;       // |value - expect| <= tolerance
    Rat tolerance;
    std::string provenance;
    bool slow = false;
    int criterion = 0;  // acceptance criterion this entry belongs to
};

/// The golden-results registry from golden/golden.json.
std::vector<GoldenEntry> golden_results();

}  // namespace spinspec
