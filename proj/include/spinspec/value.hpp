#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "spinspec/diagnostics.hpp"
#include "spinspec/rational.hpp"

namespace spinspec {

/// Process-wide interned identifier. Interning makes env lookups and
/// structural hashing integer comparisons.
using NameId = int;
NameId intern(std::string_view name);
const std::string& name_of(NameId id);

enum class SortKind { Bool, Nat, Int, Real, Enum, List };

struct Sort {
    SortKind kind = SortKind::Bool;
    int index = -1;  // SortTable index for Enum/List

    bool operator==(const Sort& o) const { return kind == o.kind && index == o.index; }
    bool operator!=(const Sort& o) const { return !(*this == o); }

    static Sort boolean() { return {SortKind::Bool, -1}; }
    static Sort nat() { return {SortKind::Nat, -1}; }
    static Sort integer() { return {SortKind::Int, -1}; }
    static Sort real() { return {SortKind::Real, -1}; }

    bool is_numeric() const {
        return kind == SortKind::Nat || kind == SortKind::Int || kind == SortKind::Real;
    }
};

struct EnumSortDef {
    std::string name;
    std::shared_ptr<const std::vector<std::string>> constructors;
};

struct ListSortDef {
    Sort elem;
};

/// Per-model registry of enum and list sorts plus name aliases.
class SortTable {
  public:
    Sort add_enum(const std::string& name, std::vector<std::string> constructors);
    Sort add_list(Sort elem);  // interned: List(D) registered once
    void add_alias(const std::string& name, Sort sort) { aliases_[name] = sort; }

    const EnumSortDef& enum_def(const Sort& s) const { return enums_.at(s.index); }
    const ListSortDef& list_def(const Sort& s) const { return lists_.at(s.index); }

    /// Resolves "Bool", "Nat", "Int", "Real", enum names and aliases.
    const Sort* lookup(const std::string& name) const;
    /// Constructor name -> (sort, constructor index), if any enum declares it.
    bool lookup_constructor(const std::string& name, Sort* sort, int* ctor) const;

    std::string sort_name(const Sort& s) const;
    size_t enum_count() const { return enums_.size(); }

  private:
    std::vector<EnumSortDef> enums_;
    std::vector<ListSortDef> lists_;
    std::unordered_map<std::string, Sort> aliases_;
    std::unordered_map<std::string, std::pair<Sort, int>> constructors_;
};

struct EnumVal {
    int sort_index = -1;
    int ctor = -1;
    const std::string* name = nullptr;  // owned by the SortTable's constructor list

    bool operator==(const EnumVal& o) const {
        return sort_index == o.sort_index && ctor == o.ctor;
    }
};

/// A datum of the data language. Nat and Int share the Int representation;
/// their distinction lives in the sort system.
class Value {
  public:
    using List = std::shared_ptr<const std::vector<Value>>;

    Value() : v_(false) {}
    explicit Value(bool b) : v_(b) {}
    explicit Value(Int i) : v_(std::move(i)) {}
    explicit Value(long i) : v_(Int(i)) {}
    explicit Value(Rat r) : v_(std::move(r)) {}
    explicit Value(EnumVal e) : v_(e) {}
    explicit Value(List l) : v_(std::move(l)) {}

    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<Int>(v_); }
    bool is_rat() const { return std::holds_alternative<Rat>(v_); }
    bool is_enum() const { return std::holds_alternative<EnumVal>(v_); }
    bool is_list() const { return std::holds_alternative<List>(v_); }

    bool as_bool() const { return std::get<bool>(v_); }
    const Int& as_int() const { return std::get<Int>(v_); }
    const Rat& as_rat() const { return std::get<Rat>(v_); }
    const EnumVal& as_enum() const { return std::get<EnumVal>(v_); }
    const List& as_list() const { return std::get<List>(v_); }

    /// Numeric view: Int promoted to Rat on demand.
    Rat to_rat() const { return is_int() ? Rat(as_int()) : as_rat(); }

    bool operator==(const Value& o) const;
    bool operator!=(const Value& o) const { return !(*this == o); }
    /// Total order (tag, then content); used only for deterministic sorting.
    static int compare(const Value& a, const Value& b);

    size_t hash() const;
    std::string str() const;

  private:
    std::variant<bool, Int, Rat, EnumVal, List> v_;
};

std::ostream& operator<<(std::ostream& os, const Value& v);

/// All values of a finite sort in declaration order; InfiniteSort otherwise.
std::vector<Value> enumerate_sort(const SortTable& sorts, const Sort& sort);
bool sort_is_enumerable(const Sort& sort);

/// Nat <= Int <= Real subsort lattice; exact on other kinds.
bool is_subsort(const Sort& sub, const Sort& super);
/// Least common supersort, if any.
bool join_sorts(const Sort& a, const Sort& b, Sort* out);

/// Checks tag/sort agreement and converts between numeric representations.
/// Throws TypeMismatch or NatUnderflow (negative value at a Nat position).
Value coerce_value(const Value& v, const Sort& target, SourceLoc loc = {});

}  // namespace spinspec

template <>
struct std::hash<spinspec::Value> {
    size_t operator()(const spinspec::Value& v) const { return v.hash(); }
};
