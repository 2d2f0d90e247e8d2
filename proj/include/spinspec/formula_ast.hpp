#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spinspec/expr.hpp"

namespace spinspec {

/// Regular part of a modality: a single action pattern, `true` (any action)
/// or `true*` (any finite sequence; removed by lower_regular).
struct ActionPattern {
    enum Kind { Action, AnyAction, AnyStar } kind = AnyAction;
    NameId action = -1;
    std::vector<ExprPtr> args;  // argument expressions; sup/inf binders may capture here
    SourceLoc loc;

    mutable int action_index = -1;
    /// Per argument: capture slot for a quantifier binder (-1 = match the value).
    mutable std::vector<int> capture;
};

enum class FormKind {
    Const,     // rational constant
    Top,       // true, +inf
    Bottom,    // false, -inf
    Data,      // embedded data expression (Bool or numeric sort)
    Add,
    Sub,
    Scale,     // c * phi, c a nonnegative constant expression
    Min,       // &&
    Max,       // ||
    Diamond,
    Box,
    Sup,
    Inf,
    SumQ,      // sum x:S . phi, expanded during validation
    Mu,
    Nu,
    FixCall,   // X(e...)
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct FixParam {
    NameId name;
    std::string sort_name;
    ExprPtr init;
    mutable Sort sort{};
};

struct Formula {
    FormKind kind;
    SourceLoc loc;

    Rat constant;                     // Const
    ExprPtr data;                     // Data; Scale's coefficient
    ActionPattern pattern;            // Diamond / Box
    std::vector<NameId> binders;      // Sup / Inf (one group, shared sort)
    std::string binder_sort_name;
    NameId fixvar = -1;               // Mu / Nu / FixCall
    std::vector<FixParam> params;     // Mu / Nu
    std::vector<ExprPtr> call_args;   // FixCall
    std::vector<FormulaPtr> kids;

    mutable Sort binder_sort{};
    mutable const Formula* fix_decl = nullptr;  // FixCall -> its Mu/Nu node
};

/// A parsed .qmf file plus what validation learned about it.
struct FormulaSpec {
    std::string name;
    FormulaPtr root;
    /// Free names that must be supplied via parameters (e.g. max_rounds).
    std::vector<NameId> required_params;
    bool validated = false;
};

using FormulaSpecPtr = std::shared_ptr<FormulaSpec>;

}  // namespace spinspec
