#include "spinspec/rational.hpp"

#include <ostream>
#include <stdexcept>

namespace spinspec {

Int::Int(const std::string& digits) {
    if (mpz_init_set_str(z_, digits.c_str(), 10) != 0) {
        mpz_clear(z_);
        throw std::invalid_argument("not an integer literal: " + digits);
    }
}

std::string Int::str() const {
    char* s = mpz_get_str(nullptr, 10, z_);
    std::string out(s);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(s, out.size() + 1);
    return out;
}

static size_t hash_mpz(mpz_srcptr z) {
    size_t h = static_cast<size_t>(mpz_sgn(z)) + 0x517cc1b727220a95ULL;
    size_t n = mpz_size(z);
    for (size_t i = 0; i < n; ++i) h = hash_combine(h, static_cast<size_t>(mpz_getlimbn(z, i)));
    return h;
}

size_t Int::hash() const { return hash_mpz(z_); }

Rat::Rat(const Int& num, const Int& den) {
    if (den.is_zero()) throw std::invalid_argument("rational with zero denominator");
    mpq_init(q_);
    mpz_set(mpq_numref(q_), num.raw());
    mpz_set(mpq_denref(q_), den.raw());
    mpq_canonicalize(q_);
}

int Rat::cmp(const Rat& a, const Rat& b) {
    mpz_srcptr an = mpq_numref(a.q_), ad = mpq_denref(a.q_);
    mpz_srcptr bn = mpq_numref(b.q_), bd = mpq_denref(b.q_);
    int dc = mpz_cmp(ad, bd);
    if (dc == 0) return mpz_cmp(an, bn);
    // sign check settles most mixed-sign cases cheaply
    int sa = mpz_sgn(an), sb = mpz_sgn(bn);
    if (sa != sb) return sa < sb ? -1 : 1;
    mpz_t q, t;
    if (dc < 0 && mpz_divisible_p(bd, ad)) {
        mpz_inits(q, t, nullptr);
        mpz_divexact(q, bd, ad);
        mpz_mul(t, an, q);
        int r = mpz_cmp(t, bn);
        mpz_clears(q, t, nullptr);
        return r;
    }
    if (dc > 0 && mpz_divisible_p(ad, bd)) {
        mpz_inits(q, t, nullptr);
        mpz_divexact(q, ad, bd);
        mpz_mul(t, bn, q);
        int r = mpz_cmp(an, t);
        mpz_clears(q, t, nullptr);
        return r;
    }
    return mpq_cmp(a.q_, b.q_);
}

Rat Rat::raw(const Int& num, const Int& den) {
    Rat r;
    mpz_set(mpq_numref(r.raw()), num.raw());
    mpz_set(mpq_denref(r.raw()), den.raw());
    return r;
}

Int Rat::numerator() const {
    Int r;
    mpz_set(r.raw(), mpq_numref(q_));
    return r;
}

Int Rat::denominator() const {
    Int r;
    mpz_set(r.raw(), mpq_denref(q_));
    return r;
}

std::string Rat::str() const {
    char* s = mpq_get_str(nullptr, 10, q_);
    std::string out(s);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(s, out.size() + 1);
    return out;
}

std::string Rat::decimal(int digits) const {
    if (digits < 0) digits = 0;
    bool neg = sign() < 0;
    mpz_t num, den, scaled, quot, rem;
    mpz_init(num);
    mpz_init(den);
    mpz_init(scaled);
    mpz_init(quot);
    mpz_init(rem);
    mpz_abs(num, mpq_numref(q_));
    mpz_set(den, mpq_denref(q_));
    mpz_ui_pow_ui(scaled, 10, static_cast<unsigned long>(digits));
    mpz_mul(scaled, scaled, num);
    mpz_fdiv_qr(quot, rem, scaled, den);
    // round half to even on the |value| * 10^digits quotient
    mpz_mul_2exp(rem, rem, 1);
    int cmp = mpz_cmp(rem, den);
    if (cmp > 0 || (cmp == 0 && mpz_odd_p(quot))) mpz_add_ui(quot, quot, 1);

    char* s = mpz_get_str(nullptr, 10, quot);
    std::string body(s);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(s, body.size() + 1);
    mpz_clears(num, den, scaled, quot, rem, nullptr);

    if (digits > 0) {
        if (body.size() <= static_cast<size_t>(digits))
            body.insert(0, static_cast<size_t>(digits) + 1 - body.size(), '0');
        body.insert(body.size() - static_cast<size_t>(digits), ".");
    }
    if (neg && body.find_first_not_of("0.") != std::string::npos) body.insert(0, "-");
    return body;
}

size_t Rat::hash() const {
    return hash_combine(hash_mpz(mpq_numref(q_)), hash_mpz(mpq_denref(q_)));
}

std::optional<Rat> Rat::parse(std::string_view text) {
    std::string s(text);
    if (s.empty()) return std::nullopt;
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        // decimal literal: shift the point out
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        size_t frac = s.size() - dot - 1;
        if (frac == 0 || digits.empty()) return std::nullopt;
        for (size_t i = 0; i < digits.size(); ++i) {
            if (i == 0 && (digits[i] == '-' || digits[i] == '+')) continue;
            if (!isdigit(static_cast<unsigned char>(digits[i]))) return std::nullopt;
        }
        try {
            Int num(digits);
            mpz_t den;
            mpz_init(den);
            mpz_ui_pow_ui(den, 10, frac);
            Int d;
            mpz_set(d.raw(), den);
            mpz_clear(den);
            return Rat(num, d);
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    }
    Rat r;
    if (mpq_set_str(r.raw(), s.c_str(), 10) != 0) return std::nullopt;
    if (mpz_sgn(mpq_denref(r.raw())) == 0) return std::nullopt;
    mpq_canonicalize(r.raw());
    return r;
}

Rat Rat::pow10(int exp) {
    Rat r;
    mpz_ui_pow_ui(mpq_numref(r.raw()), 10, static_cast<unsigned long>(exp < 0 ? 0 : exp));
    return r;
}

std::optional<Rat> weighted_sum_raw(const std::vector<Int>& weights, const Int& wden,
                                    const std::vector<const Rat*>& values) {
    size_t n = values.size();
    // dominant denominator: the largest one, provided all others divide it
    size_t dom = 0;
    for (size_t i = 1; i < n; ++i)
        if (mpz_cmp(mpq_denref(values[i]->raw()), mpq_denref(values[dom]->raw())) > 0)
            dom = i;
    mpq_srcptr dq = values[dom]->raw();
    for (size_t i = 0; i < n; ++i)
        if (i != dom && !mpz_divisible_p(mpq_denref(dq), mpq_denref(values[i]->raw())))
            return std::nullopt;
    mpz_t acc, scale, term;
    mpz_inits(acc, scale, term, nullptr);
    for (size_t i = 0; i < n; ++i) {
        if (mpz_cmp(mpq_denref(dq), mpq_denref(values[i]->raw())) == 0) {
            mpz_mul(term, mpq_numref(values[i]->raw()), weights[i].raw());
        } else {
            mpz_divexact(scale, mpq_denref(dq), mpq_denref(values[i]->raw()));
            mpz_mul(term, mpq_numref(values[i]->raw()), scale);
            mpz_mul(term, term, weights[i].raw());
        }
        mpz_add(acc, acc, term);
    }
    Int num, den;
    mpz_set(num.raw(), acc);
    mpz_mul(den.raw(), wden.raw(), mpq_denref(dq));
    mpz_clears(acc, scale, term, nullptr);
    return Rat::raw(num, den);
}

std::ostream& operator<<(std::ostream& os, const Int& v) { return os << v.str(); }
std::ostream& operator<<(std::ostream& os, const Rat& v) { return os << v.str(); }

}  // namespace spinspec
