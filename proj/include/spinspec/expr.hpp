#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "spinspec/value.hpp"

namespace spinspec {

enum class ExprKind {
    Lit,
    Var,
    Call,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    If,
    ListLit,
    Index,   // L . i
    InSet,   // x in {v1, ...}: args[0] is x, rest are the set elements
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind;
    SourceLoc loc;
    Value lit;                  // Lit
    NameId name = -1;           // Var / Call
    std::vector<ExprPtr> args;  // children

    // Filled during typechecking/resolution.
    enum class VarRes { Unresolved, Variable, Constructor, Constant };
    mutable Sort type{};
    mutable int func_index = -1;        // Call target (also constants via VarRes::Constant)
    mutable VarRes var_res = VarRes::Unresolved;
    mutable Value ctor_value;           // VarRes::Constructor
    mutable std::vector<NameId> free;   // free variables, sorted
    mutable bool free_computed = false;
    mutable bool resolved = false;

    static ExprPtr lit_expr(Value v, SourceLoc loc = {});
    static ExprPtr var(NameId n, SourceLoc loc = {});
    static ExprPtr make(ExprKind k, std::vector<ExprPtr> args, SourceLoc loc = {});
    static ExprPtr call(NameId n, std::vector<ExprPtr> args, SourceLoc loc = {});
};

struct FunctionDef {
    NameId name;
    std::vector<std::pair<NameId, Sort>> params;
    Sort result;
    ExprPtr body;
    SourceLoc loc;
};

class FunctionTable {
  public:
    int add(FunctionDef def);
    const FunctionDef* find(NameId name) const;
    int index_of(NameId name) const;
    const FunctionDef& at(int i) const { return defs_[static_cast<size_t>(i)]; }
    size_t size() const { return defs_.size(); }

  private:
    std::vector<FunctionDef> defs_;
    std::unordered_map<NameId, int> by_name_;
};

/// Memo for pure function calls; owned by whoever drives evaluation.
class EvalCache {
  public:
    const Value* find(int func, const std::vector<Value>& args) const;
    void put(int func, std::vector<Value> args, Value result);

  private:
    struct Key {
        int func;
        std::vector<Value> args;
        bool operator==(const Key& o) const { return func == o.func && args == o.args; }
    };
    struct KeyHash {
        size_t operator()(const Key& k) const {
            size_t h = static_cast<size_t>(k.func);
            for (const auto& v : k.args) h = hash_combine(h, v.hash());
            return h;
        }
    };
    std::unordered_map<Key, Value, KeyHash> memo_;
};

using Bindings = std::vector<std::pair<NameId, Value>>;

/// Variable view for evaluation: non-owning, so building scopes is free.
/// Bindings are few; reverse linear scan implements shadowing.
struct Env {
    const Bindings* vars = nullptr;
    const FunctionTable* funcs = nullptr;
    EvalCache* cache = nullptr;

    const Value* find(NameId n) const {
        if (!vars) return nullptr;
        for (auto it = vars->rbegin(); it != vars->rend(); ++it)
            if (it->first == n) return &it->second;
        return nullptr;
    }
};

/// Typing context: variable sorts plus declared functions and sorts.
struct TypeContext {
    const SortTable* sorts = nullptr;
    const FunctionTable* funcs = nullptr;
    std::vector<std::pair<NameId, Sort>> vars;

    const Sort* find(NameId n) const {
        for (auto it = vars.rbegin(); it != vars.rend(); ++it)
            if (it->first == n) return &it->second;
        return nullptr;
    }
};

/// Returns the unique sort of the expression, resolving names in place.
/// Throws Error(UnknownName | TypeMismatch | ArityMismatch) naming the subterm.
Sort typecheck_expr(const Expr& expr, const TypeContext& ctx);

/// Exact evaluation; expr must typecheck and env must bind all free variables.
Value eval_expr(const Env& env, const Expr& expr);

/// Sorted free variables (constructor literals and function names excluded).
/// Valid only after typecheck_expr resolved the expression.
const std::vector<NameId>& free_vars(const Expr& expr);

std::string expr_to_string(const Expr& expr);

}  // namespace spinspec
