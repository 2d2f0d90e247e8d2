#pragma once

#include <gmp.h>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spinspec {

/// Arbitrary-precision integer, value semantics over GMP's mpz.
class Int {
  public:
    Int() { mpz_init(z_); }
    Int(long v) { mpz_init_set_si(z_, v); }
    explicit Int(const std::string& digits);

    Int(const Int& o) { mpz_init_set(z_, o.z_); }
    Int(Int&& o) noexcept {
        mpz_init(z_);
        mpz_swap(z_, o.z_);
    }
    Int& operator=(const Int& o) {
        if (this != &o) mpz_set(z_, o.z_);
        return *this;
    }
    Int& operator=(Int&& o) noexcept {
        mpz_swap(z_, o.z_);
        return *this;
    }
    ~Int() { mpz_clear(z_); }

    friend Int operator+(const Int& a, const Int& b) {
        Int r;
        mpz_add(r.z_, a.z_, b.z_);
        return r;
    }
    friend Int operator-(const Int& a, const Int& b) {
        Int r;
        mpz_sub(r.z_, a.z_, b.z_);
        return r;
    }
    friend Int operator*(const Int& a, const Int& b) {
        Int r;
        mpz_mul(r.z_, a.z_, b.z_);
        return r;
    }
    friend Int operator-(const Int& a) {
        Int r;
        mpz_neg(r.z_, a.z_);
        return r;
    }
    Int& operator+=(const Int& o) {
        mpz_add(z_, z_, o.z_);
        return *this;
    }
    Int& operator-=(const Int& o) {
        mpz_sub(z_, z_, o.z_);
        return *this;
    }
    Int& operator*=(const Int& o) {
        mpz_mul(z_, z_, o.z_);
        return *this;
    }

    // Euclidean remainder: result in [0, |m|), matching the data language's mod.
    friend Int euclid_mod(const Int& a, const Int& m) {
        Int r;
        mpz_mod(r.z_, a.z_, m.z_);
        return r;
    }

    friend bool operator==(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) == 0; }
    friend bool operator!=(const Int& a, const Int& b) { return !(a == b); }
    friend bool operator<(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) < 0; }
    friend bool operator<=(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) <= 0; }
    friend bool operator>(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) > 0; }
    friend bool operator>=(const Int& a, const Int& b) { return mpz_cmp(a.z_, b.z_) >= 0; }

    int sign() const { return mpz_sgn(z_); }
    bool is_zero() const { return mpz_sgn(z_) == 0; }
    bool fits_long() const { return mpz_fits_slong_p(z_) != 0; }
    long to_long() const { return mpz_get_si(z_); }
    double to_double() const { return mpz_get_d(z_); }

    std::string str() const;
    size_t hash() const;

    mpz_srcptr raw() const { return z_; }
    mpz_ptr raw() { return z_; }

  private:
    mpz_t z_;
};

/// Exact rational, always in lowest terms with positive denominator.
class Rat {
  public:
    Rat() { mpq_init(q_); }
    Rat(long v) {
        mpq_init(q_);
        mpq_set_si(q_, v, 1);
    }
    Rat(long num, unsigned long den) {
        mpq_init(q_);
        mpq_set_si(q_, num, den);
        mpq_canonicalize(q_);
    }
    explicit Rat(const Int& v) {
        mpq_init(q_);
        mpq_set_z(q_, v.raw());
    }
    Rat(const Int& num, const Int& den);

    Rat(const Rat& o) {
        mpq_init(q_);
        mpq_set(q_, o.q_);
    }
    Rat(Rat&& o) noexcept {
        mpq_init(q_);
        mpq_swap(q_, o.q_);
    }
    Rat& operator=(const Rat& o) {
        if (this != &o) mpq_set(q_, o.q_);
        return *this;
    }
    Rat& operator=(Rat&& o) noexcept {
        mpq_swap(q_, o.q_);
        return *this;
    }
    ~Rat() { mpq_clear(q_); }

    friend Rat operator+(const Rat& a, const Rat& b) {
        Rat r;
        // integer operands keep canonicality and skip the gcd entirely
        if (mpz_cmp_ui(mpq_denref(b.q_), 1) == 0) {
            mpz_mul(mpq_numref(r.q_), mpq_numref(b.q_), mpq_denref(a.q_));
            mpz_add(mpq_numref(r.q_), mpq_numref(r.q_), mpq_numref(a.q_));
            mpz_set(mpq_denref(r.q_), mpq_denref(a.q_));
            return r;
        }
        if (mpz_cmp_ui(mpq_denref(a.q_), 1) == 0) {
            mpz_mul(mpq_numref(r.q_), mpq_numref(a.q_), mpq_denref(b.q_));
            mpz_add(mpq_numref(r.q_), mpq_numref(r.q_), mpq_numref(b.q_));
            mpz_set(mpq_denref(r.q_), mpq_denref(b.q_));
            return r;
        }
        mpq_add(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        Rat r;
        mpq_sub(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        Rat r;
        mpq_mul(r.q_, a.q_, b.q_);
        return r;
    }
    /// Division; denominator must be nonzero (checked by caller).
    friend Rat operator/(const Rat& a, const Rat& b) {
        Rat r;
        mpq_div(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rat operator-(const Rat& a) {
        Rat r;
        mpq_neg(r.q_, a.q_);
        return r;
    }
    Rat& operator+=(const Rat& o) {
        mpq_add(q_, q_, o.q_);
        return *this;
    }
    Rat& operator-=(const Rat& o) {
        mpq_sub(q_, q_, o.q_);
        return *this;
    }
    Rat& operator*=(const Rat& o) {
        mpq_mul(q_, q_, o.q_);
        return *this;
    }

    /// Three-way comparison, correct for raw (unreduced) fractions too.
    /// Denominators produced by the weighted accumulations divide each other,
    /// which turns the usual big-by-big cross multiplication into one exact
    /// division by a small quotient.
    static int cmp(const Rat& a, const Rat& b);

    friend bool operator==(const Rat& a, const Rat& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const Rat& a, const Rat& b) { return cmp(a, b) != 0; }
    friend bool operator<(const Rat& a, const Rat& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const Rat& a, const Rat& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const Rat& a, const Rat& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const Rat& a, const Rat& b) { return cmp(a, b) >= 0; }

    int sign() const { return mpq_sgn(q_); }
    bool is_zero() const { return mpq_sgn(q_) == 0; }
    bool is_integer() const { return mpz_cmp_ui(mpq_denref(q_), 1) == 0; }

    Int numerator() const;
    Int denominator() const;
    Rat abs() const {
        Rat r;
        mpq_abs(r.q_, q_);
        return r;
    }
    double to_double() const { return mpq_get_d(q_); }

    /// Fraction without canonicalization; for internal accumulation where a
    /// single reduction at the end replaces one gcd per addition. Callers
    /// must reduce() before the value escapes to equality tests or printing.
    static Rat raw(const Int& num, const Int& den);
    /// Canonicalize in place (lowest terms, positive denominator).
    void reduce() { mpq_canonicalize(q_); }

    /// "p" for integers, "p/q" otherwise.
    std::string str() const;
    /// Fixed-point decimal with round-half-even, e.g. decimal(1/3, 4) == "0.3333".
    std::string decimal(int digits) const;
    size_t hash() const;

    /// Parses "p", "p/q" or plain decimals like "-0.25". Empty on malformed input.
    static std::optional<Rat> parse(std::string_view text);

    static Rat pow10(int exp);  // 10^exp for exp >= 0

    mpq_srcptr raw() const { return q_; }
    mpq_ptr raw() { return q_; }

  private:
    mpq_t q_;
};

std::ostream& operator<<(std::ostream& os, const Int& v);
std::ostream& operator<<(std::ostream& os, const Rat& v);

/// sum_i (weights[i]/wden) * (*values[i]) accumulated over a common
/// denominator, one fraction built and no per-term reduction. Requires the
/// values' denominators to be totally ordered by divisibility; returns
/// nullopt otherwise (caller falls back to pairwise arithmetic). The result
/// is NOT in lowest terms.
std::optional<Rat> weighted_sum_raw(const std::vector<Int>& weights, const Int& wden,
                                    const std::vector<const Rat*>& values);

inline size_t hash_combine(size_t a, size_t b) {
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

}  // namespace spinspec

template <>
struct std::hash<spinspec::Int> {
    size_t operator()(const spinspec::Int& v) const { return v.hash(); }
};
template <>
struct std::hash<spinspec::Rat> {
    size_t operator()(const spinspec::Rat& v) const { return v.hash(); }
};
