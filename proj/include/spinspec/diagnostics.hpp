#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spinspec {

struct SourceLoc {
    int line = 0;
    int col = 0;
    bool valid() const { return line > 0; }
    std::string str() const {
        return valid() ? std::to_string(line) + ":" + std::to_string(col) : "?";
    }
};

enum class ErrorKind {
    Syntax,
    Validation,
    UnknownName,
    TypeMismatch,
    ArityMismatch,
    DivisionByZero,
    IndexOutOfRange,
    NatUnderflow,
    InfiniteSort,
    UnboundedDistribution,
    StateLimitExceeded,
    DistributionNotNormalized,
    NegativeWeight,
    UnguardedRecursion,
    UnsupportedRegex,
    UndefinedArithmetic,
    NonConvergence,
    UnboundedQuantifier,
    MixedSignCycle,
    UnboundParameter,
    NoChoices,
    IncompleteTable,
    IncompletePolicy,
    CyclicModel,
    UnknownAsset,
    Internal,
};

const char* error_kind_name(ErrorKind k);

/// Engine error: carries a kind so callers (CLI, tests) can map to exit codes.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string message, SourceLoc loc = {})
        : std::runtime_error(format(kind, message, loc)), kind_(kind), loc_(loc) {}

    ErrorKind kind() const { return kind_; }
    SourceLoc loc() const { return loc_; }

  private:
    static std::string format(ErrorKind kind, const std::string& message, SourceLoc loc) {
        std::string s = error_kind_name(kind);
        if (loc.valid()) s += " at " + loc.str();
        s += ": " + message;
        return s;
    }
    ErrorKind kind_;
    SourceLoc loc_;
};

struct Diagnostic {
    ErrorKind kind;
    SourceLoc loc;
    std::string message;
    std::string str() const {
        std::string s = error_kind_name(kind);
        if (loc.valid()) s += " at " + loc.str();
        return s + ": " + message;
    }
};

using Diagnostics = std::vector<Diagnostic>;

}  // namespace spinspec
