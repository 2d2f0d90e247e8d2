#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spinspec/extreal.hpp"

namespace spinspec {

/// Right-hand sides of equation systems: max/min-affine expressions over the
/// system's variables and extended-real constants.
struct EqNode {
    enum Kind { Const, Var, Add, Sub, Scale, Min, Max, WSum } kind = Const;
    ExtReal constant;                 // Const
    int var = -1;                     // Var
    Rat coeff;                        // Scale
    std::vector<const EqNode*> kids;  // Add/Sub: 2; Min/Max: n
    std::vector<std::pair<Rat, const EqNode*>> terms;  // WSum
    mutable int last_choice = 0;      // Min/Max: argext of the latest sweep
};

enum class FixSign { Mu, Nu };

/// A real equation system: one variable per (fixpoint instance, state),
/// each with a sign and a max/min-affine right-hand side.
class EqSystem {
  public:
    int add_variable(FixSign sign, std::string name);
    void set_rhs(int var, const EqNode* rhs);

    const EqNode* constant(ExtReal v);
    const EqNode* variable(int var);
    const EqNode* add(const EqNode* a, const EqNode* b);
    const EqNode* sub(const EqNode* a, const EqNode* b);
    const EqNode* scale(Rat c, const EqNode* a);
    const EqNode* extremum(bool maximize, std::vector<const EqNode*> kids);
    const EqNode* weighted_sum(std::vector<std::pair<Rat, const EqNode*>> terms);

    size_t size() const { return vars_.size(); }
    FixSign sign(int v) const { return vars_[static_cast<size_t>(v)].sign; }
    const EqNode* rhs(int v) const { return vars_[static_cast<size_t>(v)].rhs; }
    const std::string& name(int v) const { return vars_[static_cast<size_t>(v)].name; }

  private:
    struct VarInfo {
        FixSign sign;
        std::string name;
        const EqNode* rhs = nullptr;
    };
    std::vector<VarInfo> vars_;
    std::vector<std::unique_ptr<EqNode>> arena_;
};

struct SolveOptions {
    Rat tolerance = Rat(1, 1000000000);
    long max_iterations = 1000000;
    bool check_monotone = true;
    /// When false, skip the policy-locked exact linear solve and accept the
    /// first iterate within tolerance (plain Kleene).
    bool exact_acceleration = true;
};

struct SolveStats {
    long sweeps = 0;
    bool exact = true;  // solution certified as the exact fixpoint
};

/// Solves per strongly connected component in reverse topological order.
/// Cyclic components iterate monotonically from the sign's bottom/top; exact
/// stabilization or a policy-locked linear solve certify the limit, with
/// tolerance-based acceptance as the fallback.
/// Throws MixedSignCycle for mu/nu-mutual recursion and NonConvergence when
/// the iteration budget runs out before the tolerance is met.
std::vector<ExtReal> solve(const EqSystem& system, const SolveOptions& opts,
                           SolveStats* stats = nullptr);

}  // namespace spinspec
