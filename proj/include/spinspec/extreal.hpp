#pragma once

#include "spinspec/diagnostics.hpp"
#include "spinspec/rational.hpp"

namespace spinspec {

/// Exact rational extended with both infinities; the value domain of
/// quantitative formulas.
class ExtReal {
  public:
    enum Kind { NegInf = -1, Finite = 0, PosInf = 1 };

    ExtReal() : kind_(Finite), value_(0) {}
    explicit ExtReal(Rat v) : kind_(Finite), value_(std::move(v)) {}
    explicit ExtReal(long v) : kind_(Finite), value_(v) {}

    static ExtReal neg_inf() { return ExtReal(NegInf); }
    static ExtReal pos_inf() { return ExtReal(PosInf); }
    static ExtReal finite(Rat v) { return ExtReal(std::move(v)); }

    bool is_finite() const { return kind_ == Finite; }
    bool is_pos_inf() const { return kind_ == PosInf; }
    bool is_neg_inf() const { return kind_ == NegInf; }
    Kind kind() const { return kind_; }
    const Rat& value() const { return value_; }  // Finite only

    /// x + NegInf = NegInf and x + PosInf = PosInf for finite x;
    /// PosInf + NegInf is undefined arithmetic.
    friend ExtReal operator+(const ExtReal& a, const ExtReal& b);
    /// a - b = a + (-b) with the same undefined combinations.
    friend ExtReal operator-(const ExtReal& a, const ExtReal& b);
    ExtReal negate() const;

    /// q * (+/-inf) keeps the infinity for q > 0, flips it for q < 0 and
    /// gives 0 for q = 0 (zero-probability branches are harmless).
    ExtReal scale(const Rat& q) const;

    friend ExtReal min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }
    friend ExtReal max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }

    friend bool operator==(const ExtReal& a, const ExtReal& b) {
        return a.kind_ == b.kind_ && (a.kind_ != Finite || a.value_ == b.value_);
    }
    friend bool operator!=(const ExtReal& a, const ExtReal& b) { return !(a == b); }
    friend bool operator<(const ExtReal& a, const ExtReal& b) {
        if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
        return a.kind_ == Finite && a.value_ < b.value_;
    }
    friend bool operator<=(const ExtReal& a, const ExtReal& b) { return a < b || a == b; }

    /// Copy in lowest terms (raw accumulation can leave unreduced fractions).
    ExtReal reduced() const {
        if (kind_ != Finite) return *this;
        ExtReal r(*this);
        r.value_.reduce();
        return r;
    }

    /// |a - b| as a finite magnitude; infinite-kind changes count as huge.
    static Rat delta(const ExtReal& a, const ExtReal& b);

    std::string str() const;
    std::string decimal(int digits) const;
    size_t hash() const;

  private:
    explicit ExtReal(Kind k) : kind_(k), value_(0) {}
    Kind kind_;
    Rat value_;
};

enum class ExtOp { Add, Sub, Mul, Min, Max };

/// Table-driven arithmetic entry point (errors on undefined combinations).
ExtReal ext_arith(ExtOp op, const ExtReal& a, const ExtReal& b);

}  // namespace spinspec
