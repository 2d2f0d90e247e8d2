#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "spinspec/model_ast.hpp"

namespace spinspec {

using StateId = int32_t;
using DistId = int32_t;

struct ActionLabel {
    NameId name = -1;
    std::vector<Value> args;

    bool operator==(const ActionLabel& o) const { return name == o.name && args == o.args; }
    /// Order by action name text, then argument values.
    static int compare(const ActionLabel& a, const ActionLabel& b);
    size_t hash() const;
    std::string str() const;
};

/// Probability distribution over action states; support sorted by state id,
/// probabilities positive and summing to exactly one.
struct Distribution {
    std::vector<std::pair<StateId, Rat>> support;

    bool is_point() const { return support.size() == 1; }
    size_t hash() const;
    bool operator==(const Distribution& o) const { return support == o.support; }

    /// Integer probability numerators over one common denominator, derived
    /// lazily; lets expectation sums run in integer arithmetic.
    const std::vector<Int>& weight_nums() const;
    const Int& weight_den() const;

  private:
    mutable std::vector<Int> wnum_;
    mutable Int wden_;
    mutable bool weights_done_ = false;
};

struct Transition {
    ActionLabel label;
    DistId dist = -1;
};

/// Explicit probabilistic labelled transition system. Action states carry
/// sorted transitions; distributions are interned by content, so the
/// probabilistic layer is shared (the drawn probabilistic nodes are the
/// non-point distributions).
class Plts {
  public:
    StateId add_state(std::string config);
    StateId add_state(const ProcessTerm* term, std::vector<std::pair<NameId, Value>> env);
    DistId add_distribution(Distribution d);
    void add_transition(StateId s, ActionLabel label, DistId dist);
    void sort_transitions(StateId s);
    void set_initial(DistId d) { initial_ = d; }

    size_t state_count() const { return states_.size(); }
    size_t dist_count() const { return dists_.size(); }
    DistId initial() const { return initial_; }
    const Distribution& dist(DistId d) const { return dists_.at(static_cast<size_t>(d)); }
    const std::vector<Transition>& transitions(StateId s) const {
        return states_.at(static_cast<size_t>(s)).transitions;
    }
    const std::string& state_config(StateId s) const;
    const ProcessTerm* state_term(StateId s) const {
        return states_.at(static_cast<size_t>(s)).term;
    }
    const std::vector<std::pair<NameId, Value>>& state_env(StateId s) const {
        return states_.at(static_cast<size_t>(s)).env;
    }

    /// Distributions referenced by transitions or as the initial one.
    std::vector<char> referenced_dists() const;

    /// Number of distinct non-point distributions (probabilistic nodes).
    size_t probabilistic_node_count() const;

    const ModelSpec* model = nullptr;
    ModelPtr model_ref;
    std::vector<std::pair<NameId, Value>> glob_values;

  private:
    struct State {
        const ProcessTerm* term = nullptr;
        std::vector<std::pair<NameId, Value>> env;
        mutable std::string config;
        mutable bool config_rendered = false;
        std::vector<Transition> transitions;
    };
    std::vector<State> states_;
    std::vector<Distribution> dists_;
    std::unordered_map<size_t, std::vector<DistId>> dist_intern_;
    DistId initial_ = -1;
};

/// Transitions of one state in deterministic (sorted) order.
const std::vector<Transition>& successors(const Plts& plts, StateId s);

struct PltsStats {
    // State count follows the drawn systems: action states plus probabilistic
    // nodes (non-point distributions; probability-one steps are collapsed).
    long states = 0;
    long action_states = 0;
    long transitions = 0;
    long distributions = 0;  // distinct distributions incl. point ones
    long max_support = 0;
    long deadlocks = 0;
    std::string str() const;
};

PltsStats stats(const Plts& plts);

struct DistViolation {
    DistId dist;
    std::string owner;  // "initial" or "state <id>"
    Rat sum;
};

struct DistReport {
    std::vector<DistViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Exact re-verification that every distribution sums to one.
DistReport check_distributions(const Plts& plts);

/// Line-oriented text dump: `state <id> <config>` and
/// `trans <id> <action> -> {id:p, ...}`.
std::string dump_plts(const Plts& plts);

}  // namespace spinspec
