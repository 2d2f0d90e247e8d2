#pragma once

#include <functional>
#include <map>
#include <memory>

#include "spinspec/quantcheck.hpp"

namespace spinspec {

/// One resolved nondeterministic choice: at `state`, with `horizon` rounds
/// already played, pick `chosen` out of `available`.
struct DecisionPoint {
    StateId state = -1;
    long horizon = 0;
    std::vector<ActionLabel> available;
    ActionLabel chosen;
    ExtReal value;        // value of the chosen branch
    bool maximize = true; // argmin for worst-strategy extractions
};

/// Optimal choice per (state, horizon layer), plus a detailed slice for the
/// reported layer (by default the one with the most rounds remaining).
struct StrategyTable {
    std::string model;
    std::string formula;
    std::map<std::string, std::string> params;
    long horizon = 0;       // number of layers (e.g. max_rounds)
    long slice_layer = 0;
    std::map<std::pair<StateId, long>, ActionLabel> choices;
    std::vector<DecisionPoint> slice;

    const ActionLabel* choice_at(StateId s, long layer) const {
        auto it = choices.find({s, layer});
        return it == choices.end() ? nullptr : &it->second;
    }
};

/// Runs the evaluation and records the argmax (argmin under box) witness at
/// every decision point, for every horizon layer. `slice_remaining` selects
/// the layer detailed in table.slice as rounds-remaining (-1 = all of them,
/// i.e. the stationary view from the first round).
StrategyTable extract_strategy(const Plts& plts, const FormulaSpec& formula,
                               const EvalOptions& opts, long slice_remaining = -1);

/// Re-evaluates the formula with every decision forced by the table; equals
/// the free optimum exactly when the table is optimal.
/// Throws IncompleteTable when a decision point is not covered.
ExtReal strategy_value(const Plts& plts, const StrategyTable& table,
                       const FormulaSpec& formula, const EvalOptions& opts);

/// Like strategy_value but with one decision overridden; for dominance tests.
ExtReal strategy_value_with_override(const Plts& plts, const StrategyTable& table,
                                     const FormulaSpec& formula, const EvalOptions& opts,
                                     StateId state, long layer, const ActionLabel& forced);

/// Binary predicates over the decision states' displayed symbols.
struct FeatureSet {
    std::string sort_name = "Symbol";
    std::string wild = "star";  // the symbol with the stand-in role
    /// Reads `%!feature-sort` / `%!feature-wild` model directives.
    static FeatureSet from_model(const ModelSpec& model);
};

struct TreeNode {
    int feature = -1;  // -1: leaf
    ActionLabel leaf_choice;
    std::unique_ptr<TreeNode> yes, no;
};

struct DecisionTree {
    std::vector<std::string> feature_names;
    std::unique_ptr<TreeNode> root;
    size_t node_count = 0;

    const ActionLabel& predict(const std::vector<Value>& symbols) const;
    /// Feature evaluation semantics live with the tree for replay.
    std::vector<std::function<bool(const std::vector<Value>&)>> feature_fns;
};

/// Displayed-symbol tuple of a decision state (ordered feature-sort-valued
/// arguments of the first process call in the configuration).
std::vector<Value> state_symbols(const Plts& plts, StateId s, const FeatureSet& features);

/// Greedy entropy-split tree over the table's slice; exact fidelity by
/// construction (per-reel identity predicates shatter any table).
DecisionTree fit_tree(const Plts& plts, const StrategyTable& table,
                      const FeatureSet& features);

std::string export_tree_dot(const DecisionTree& tree);
std::string export_table_json(const Plts& plts, const StrategyTable& table, bool slice_only);
std::string export_table_csv(const Plts& plts, const StrategyTable& table);

/// "hold13" style rendering of a choice label with boolean arguments.
std::string hold_label(const ActionLabel& label);

}  // namespace spinspec
