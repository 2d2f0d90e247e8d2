#pragma once

#include "spinspec/strategy.hpp"

namespace spinspec {

/// One reward rule: an action pattern binding its arguments plus the gain
/// expression over them. Rules marked as round boundaries advance the round
/// counter when they fire.
struct RewardRule {
    NameId action = -1;
    std::vector<NameId> vars;  // one per action argument (fresh names bind)
    ExprPtr gain;
    bool round_marker = false;
};

/// Parsed from e.g. "@win: 1, @lose: -1" or
/// "@play(b1,b2,b3,b4): -1, points(n): n". A leading @ marks the round
/// boundary; without any marker every rule counts rounds.
struct RewardSpec {
    std::vector<RewardRule> rules;
    static RewardSpec parse(const std::string& text, const ModelSpec& model);
    const RewardRule* match(const ActionLabel& label) const;
};

struct Policy {
    enum Kind { UniformRandom, FromTable, Minimize } kind = UniformRandom;
    /// FromTable follows an optimal table, Minimize a worst-extraction table;
    /// both resolve decisions by (state, rounds-played) lookup.
    const StrategyTable* table = nullptr;
};

struct Estimate {
    double mean = 0;  // per-round gain
    double se = 0;    // sample standard error
    long n = 0;       // sample count (episodes, or rounds when episodes == 1)
    uint64_t seed = 0;
};

/// Seeded simulation of the PLTS under a policy. Probabilistic branches are
/// sampled by integer arithmetic on each distribution's common denominator,
/// so sampling is unbiased by construction. The stream is splitmix64-seeded
/// xoshiro256++, fixed across platforms; episode e uses the substream derived
/// from (seed, e), making results independent of scheduling.
Estimate simulate(const Plts& plts, const Policy& policy, const RewardSpec& rewards,
                  long rounds, long episodes, uint64_t seed,
                  std::vector<double>* per_episode = nullptr, int threads = 1);

/// Brute-force expectation oracle for acyclic single-shot games: sums
/// probability times reward over every path (up to `horizon` rounds).
/// Throws CyclicModel on a cycle and Validation on nondeterministic choice.
Rat enumerate_exact(const Plts& plts, const RewardSpec& rewards, int horizon = 1);

}  // namespace spinspec
