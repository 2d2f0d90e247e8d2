#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spinspec/expr.hpp"

namespace spinspec {

enum class ProcKind {
    Deadlock,   // delta
    Prefix,     // a(e...) . p
    Choice,     // p + q
    Sum,        // sum x,...:S . p
    Cond,       // c -> p <> q   (q may be Deadlock when the else-part is omitted)
    Dist,       // dist x,...:S[w] . p
    CallProc,   // P(e...)
};

struct ProcessTerm;
using ProcPtr = std::shared_ptr<const ProcessTerm>;

struct ProcessTerm {
    ProcKind kind;
    SourceLoc loc;

    NameId name = -1;                  // Prefix: action; CallProc: process
    std::vector<ExprPtr> args;         // Prefix / CallProc arguments
    std::vector<NameId> binders;       // Sum / Dist variables
    std::string binder_sort_name;      // as written; resolved during validation
    ExprPtr weight;                    // Dist
    ExprPtr cond;                      // Cond guard
    std::vector<ProcPtr> kids;         // Prefix/Sum/Dist: 1; Choice/Cond: 2

    // Resolution (validation) results.
    mutable Sort binder_sort{};
    mutable int action_index = -1;     // Prefix
    mutable int proc_index = -1;       // CallProc
    mutable bool else_omitted = false; // Cond printed without <>-part
    // Dist: per binder, exclusive Nat upper bound (-1 = enumerate the sort).
    mutable std::vector<long> binder_bounds;
    // Free variables of the whole term (exprs + kids, minus binders).
    mutable std::vector<NameId> term_free;
    mutable bool term_free_done = false;

    static ProcPtr deadlock(SourceLoc loc = {});
};

struct ActionDecl {
    NameId name;
    std::vector<std::string> param_sort_names;
    SourceLoc loc;
    mutable std::vector<Sort> param_sorts;
};

struct ProcessDecl {
    NameId name;
    std::vector<std::pair<NameId, std::string>> params;  // (name, sort text)
    ProcPtr body;
    SourceLoc loc;
    mutable std::vector<Sort> param_sorts;
};

struct GlobDecl {
    NameId name;
    std::string sort_name;
    SourceLoc loc;
    mutable Sort sort{};
};

/// A parsed .psm file: data part, actions, globals, processes and init.
struct ModelSpec {
    std::string name;  // derived from the file name, informational
    SortTable sorts;
    FunctionTable functions;
    std::vector<ActionDecl> actions;
    std::vector<GlobDecl> globs;
    std::vector<ProcessDecl> processes;
    ProcPtr init;
    SourceLoc init_loc;

    /// `%!key: value` directive comments, e.g. feature metadata.
    std::map<std::string, std::string> metadata;

    // Declaration order as written, for faithful pretty-printing.
    struct DataItem {
        enum Kind { SortDecl, MapDecl, EqnGroup } kind;
        std::string sort_name;                       // SortDecl
        std::string sort_rhs;                        // SortDecl: printable right-hand side
        std::vector<std::pair<std::string, std::string>> map_entries;  // MapDecl: name, type
        std::vector<std::pair<NameId, std::string>> eqn_vars;          // EqnGroup
        std::vector<int> eqn_functions;              // FunctionTable indices
    };
    std::vector<DataItem> data_items;

    bool validated = false;

    const ActionDecl* find_action(NameId name) const {
        for (const auto& a : actions)
            if (a.name == name) return &a;
        return nullptr;
    }
    int action_index(NameId name) const {
        for (size_t i = 0; i < actions.size(); ++i)
            if (actions[i].name == name) return static_cast<int>(i);
        return -1;
    }
    const ProcessDecl* find_process(NameId name) const {
        for (const auto& p : processes)
            if (p.name == name) return &p;
        return nullptr;
    }
    int process_index(NameId name) const {
        for (size_t i = 0; i < processes.size(); ++i)
            if (processes[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

using ModelPtr = std::shared_ptr<ModelSpec>;

}  // namespace spinspec
