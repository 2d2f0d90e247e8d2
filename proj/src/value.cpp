#include "spinspec/value.hpp"

#include <mutex>
#include <ostream>

namespace spinspec {

namespace {
struct Interner {
    std::mutex mu;
    std::unordered_map<std::string, NameId> ids;
    std::vector<const std::string*> names;
};
Interner& interner() {
    static Interner in;
    return in;
}
}  // namespace

NameId intern(std::string_view name) {
    auto& in = interner();
    std::lock_guard<std::mutex> lock(in.mu);
    auto it = in.ids.find(std::string(name));
    if (it != in.ids.end()) return it->second;
    auto id = static_cast<NameId>(in.names.size());
    auto [pos, inserted] = in.ids.emplace(std::string(name), id);
    in.names.push_back(&pos->first);
    return id;
}

const std::string& name_of(NameId id) {
    auto& in = interner();
    std::lock_guard<std::mutex> lock(in.mu);
    return *in.names.at(static_cast<size_t>(id));
}

Sort SortTable::add_enum(const std::string& name, std::vector<std::string> constructors) {
    Sort s{SortKind::Enum, static_cast<int>(enums_.size())};
    auto ctors = std::make_shared<const std::vector<std::string>>(std::move(constructors));
    for (int i = 0; i < static_cast<int>(ctors->size()); ++i)
        constructors_.emplace((*ctors)[i], std::make_pair(s, i));
    enums_.push_back(EnumSortDef{name, std::move(ctors)});
    aliases_[name] = s;
    return s;
}

Sort SortTable::add_list(Sort elem) {
    for (size_t i = 0; i < lists_.size(); ++i)
        if (lists_[i].elem == elem) return {SortKind::List, static_cast<int>(i)};
    lists_.push_back(ListSortDef{elem});
    return {SortKind::List, static_cast<int>(lists_.size() - 1)};
}

const Sort* SortTable::lookup(const std::string& name) const {
    static const Sort kBool = Sort::boolean(), kNat = Sort::nat(), kInt = Sort::integer(),
                      kReal = Sort::real();
    if (name == "Bool") return &kBool;
    if (name == "Nat") return &kNat;
    if (name == "Int") return &kInt;
    if (name == "Real") return &kReal;
    auto it = aliases_.find(name);
    return it == aliases_.end() ? nullptr : &it->second;
}

bool SortTable::lookup_constructor(const std::string& name, Sort* sort, int* ctor) const {
    auto it = constructors_.find(name);
    if (it == constructors_.end()) return false;
    *sort = it->second.first;
    *ctor = it->second.second;
    return true;
}

std::string SortTable::sort_name(const Sort& s) const {
    switch (s.kind) {
        case SortKind::Bool: return "Bool";
        case SortKind::Nat: return "Nat";
        case SortKind::Int: return "Int";
        case SortKind::Real: return "Real";
        case SortKind::Enum: return enum_def(s).name;
        case SortKind::List: return "List(" + sort_name(list_def(s).elem) + ")";
    }
    return "?";
}

bool Value::operator==(const Value& o) const {
    if (v_.index() != o.v_.index()) return false;
    switch (v_.index()) {
        case 0: return as_bool() == o.as_bool();
        case 1: return as_int() == o.as_int();
        case 2: return as_rat() == o.as_rat();
        case 3: return as_enum() == o.as_enum();
        case 4: {
            const auto& a = *as_list();
            const auto& b = *o.as_list();
            if (a.size() != b.size()) return false;
            for (size_t i = 0; i < a.size(); ++i)
                if (!(a[i] == b[i])) return false;
            return true;
        }
    }
    return false;
}

int Value::compare(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index())
        return a.v_.index() < b.v_.index() ? -1 : 1;
    switch (a.v_.index()) {
        case 0: return static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
        case 1: return a.as_int() < b.as_int() ? -1 : (a.as_int() == b.as_int() ? 0 : 1);
        case 2: return a.as_rat() < b.as_rat() ? -1 : (a.as_rat() == b.as_rat() ? 0 : 1);
        case 3: {
            const auto& x = a.as_enum();
            const auto& y = b.as_enum();
            if (x.sort_index != y.sort_index) return x.sort_index < y.sort_index ? -1 : 1;
            return x.ctor - y.ctor;
        }
        case 4: {
            const auto& x = *a.as_list();
            const auto& y = *b.as_list();
            size_t n = std::min(x.size(), y.size());
            for (size_t i = 0; i < n; ++i)
                if (int c = compare(x[i], y[i])) return c;
            if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
            return 0;
        }
    }
    return 0;
}

size_t Value::hash() const {
    size_t h = v_.index() * 0x9e3779b97f4a7c15ULL;
    switch (v_.index()) {
        case 0: return hash_combine(h, as_bool() ? 1 : 0);
        case 1: return hash_combine(h, as_int().hash());
        case 2: return hash_combine(h, as_rat().hash());
        case 3: return hash_combine(h, hash_combine(as_enum().sort_index, as_enum().ctor));
        case 4: {
            for (const auto& v : *as_list()) h = hash_combine(h, v.hash());
            return h;
        }
    }
    return h;
}

std::string Value::str() const {
    switch (v_.index()) {
        case 0: return as_bool() ? "true" : "false";
        case 1: return as_int().str();
        case 2: return as_rat().str();
        case 3: return as_enum().name ? *as_enum().name : "#" + std::to_string(as_enum().ctor);
        case 4: {
            std::string s = "[";
            bool first = true;
            for (const auto& v : *as_list()) {
                if (!first) s += ", ";
                s += v.str();
                first = false;
            }
            return s + "]";
        }
    }
    return "?";
}

std::ostream& operator<<(std::ostream& os, const Value& v) { return os << v.str(); }

bool sort_is_enumerable(const Sort& sort) {
    return sort.kind == SortKind::Bool || sort.kind == SortKind::Enum;
}

std::vector<Value> enumerate_sort(const SortTable& sorts, const Sort& sort) {
    if (sort.kind == SortKind::Bool) return {Value(false), Value(true)};
    if (sort.kind == SortKind::Enum) {
        const auto& def = sorts.enum_def(sort);
        std::vector<Value> out;
        out.reserve(def.constructors->size());
        for (int i = 0; i < static_cast<int>(def.constructors->size()); ++i)
            out.push_back(Value(EnumVal{sort.index, i, &(*def.constructors)[i]}));
        return out;
    }
    throw Error(ErrorKind::InfiniteSort, "cannot enumerate infinite sort");
}

bool is_subsort(const Sort& sub, const Sort& super) {
    if (sub == super) return true;
    auto rank = [](SortKind k) {
        switch (k) {
            case SortKind::Nat: return 0;
            case SortKind::Int: return 1;
            case SortKind::Real: return 2;
            default: return -1;
        }
    };
    int a = rank(sub.kind), b = rank(super.kind);
    return a >= 0 && b >= 0 && a <= b;
}

bool join_sorts(const Sort& a, const Sort& b, Sort* out) {
    if (is_subsort(a, b)) {
        *out = b;
        return true;
    }
    if (is_subsort(b, a)) {
        *out = a;
        return true;
    }
    return false;
}

Value coerce_value(const Value& v, const Sort& target, SourceLoc loc) {
    switch (target.kind) {
        case SortKind::Bool:
            if (v.is_bool()) return v;
            break;
        case SortKind::Nat:
            if (v.is_int()) {
                if (v.as_int().sign() < 0)
                    throw Error(ErrorKind::NatUnderflow,
                                "negative value " + v.str() + " at a Nat position", loc);
                return v;
            }
            if (v.is_rat() && v.as_rat().is_integer()) {
                if (v.as_rat().sign() < 0)
                    throw Error(ErrorKind::NatUnderflow,
                                "negative value " + v.str() + " at a Nat position", loc);
                return Value(v.as_rat().numerator());
            }
            break;
        case SortKind::Int:
            if (v.is_int()) return v;
            if (v.is_rat() && v.as_rat().is_integer()) return Value(v.as_rat().numerator());
            break;
        case SortKind::Real:
            if (v.is_rat()) return v;
            if (v.is_int()) return Value(Rat(v.as_int()));
            break;
        case SortKind::Enum:
            if (v.is_enum() && v.as_enum().sort_index == target.index) return v;
            break;
        case SortKind::List:
            if (v.is_list()) return v;
            break;
    }
    throw Error(ErrorKind::TypeMismatch, "value " + v.str() + " does not fit the expected sort",
                loc);
}

const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Syntax: return "SyntaxError";
        case ErrorKind::Validation: return "ValidationError";
        case ErrorKind::UnknownName: return "UnknownName";
        case ErrorKind::TypeMismatch: return "TypeMismatch";
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::DivisionByZero: return "DivisionByZero";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::NatUnderflow: return "NatUnderflow";
        case ErrorKind::InfiniteSort: return "InfiniteSort";
        case ErrorKind::UnboundedDistribution: return "UnboundedDistribution";
        case ErrorKind::StateLimitExceeded: return "StateLimitExceeded";
        case ErrorKind::DistributionNotNormalized: return "DistributionNotNormalized";
        case ErrorKind::NegativeWeight: return "NegativeWeight";
        case ErrorKind::UnguardedRecursion: return "UnguardedRecursion";
        case ErrorKind::UnsupportedRegex: return "UnsupportedRegex";
        case ErrorKind::UndefinedArithmetic: return "UndefinedArithmetic";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::UnboundedQuantifier: return "UnboundedQuantifier";
        case ErrorKind::MixedSignCycle: return "MixedSignCycle";
        case ErrorKind::UnboundParameter: return "UnboundParameter";
        case ErrorKind::NoChoices: return "NoChoices";
        case ErrorKind::IncompleteTable: return "IncompleteTable";
        case ErrorKind::IncompletePolicy: return "IncompletePolicy";
        case ErrorKind::CyclicModel: return "CyclicModel";
        case ErrorKind::UnknownAsset: return "UnknownAsset";
        case ErrorKind::Internal: return "InternalError";
    }
    return "Error";
}

}  // namespace spinspec
