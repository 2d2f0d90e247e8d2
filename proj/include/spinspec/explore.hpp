#pragma once

#include <map>
#include <memory>

#include "spinspec/plts.hpp"

namespace spinspec {

struct ExploreLimits {
    long max_states = 1000000;
    long max_support = 2000000;
};

struct ExploreOptions {
    ExploreLimits limits;
    /// Glob variable overrides; unlisted globs default to the first value of
    /// their sort (or zero/empty for unbounded sorts).
    std::map<std::string, Value> globs;
};

/// Unfolds a validated model into its explicit probabilistic LTS.
/// Consecutive probabilistic steps collapse into one product distribution;
/// states intern by canonicalized closed configuration.
std::shared_ptr<Plts> explore(ModelPtr model, const ExploreOptions& options = {});

}  // namespace spinspec
