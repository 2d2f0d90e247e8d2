#include "spinspec/extreal.hpp"

namespace spinspec {

ExtReal operator+(const ExtReal& a, const ExtReal& b) {
    if (a.is_finite() && b.is_finite()) return ExtReal(a.value_ + b.value_);
    if (a.is_finite()) return b;
    if (b.is_finite()) return a;
    if (a.kind_ == b.kind_) return a;
    throw Error(ErrorKind::UndefinedArithmetic, "inf + (-inf) is undefined");
}

ExtReal operator-(const ExtReal& a, const ExtReal& b) { return a + b.negate(); }

ExtReal ExtReal::negate() const {
    switch (kind_) {
        case NegInf: return pos_inf();
        case PosInf: return neg_inf();
        case Finite: return ExtReal(-value_);
    }
    return ExtReal(0);
}

ExtReal ExtReal::scale(const Rat& q) const {
    if (is_finite()) return ExtReal(q * value_);
    int s = q.sign();
    if (s == 0) return ExtReal(0);
    if (s > 0) return *this;
    return negate();
}

Rat ExtReal::delta(const ExtReal& a, const ExtReal& b) {
    if (a.kind() != b.kind()) {
        // any kind change is "far"; callers compare against small tolerances
        return Rat(1000000000L);
    }
    if (a.kind() != Finite) return Rat(0);
    return (a.value() - b.value()).abs();
}

std::string ExtReal::str() const {
    switch (kind_) {
        case NegInf: return "-inf";
        case PosInf: return "inf";
        case Finite: return value_.str();
    }
    return "?";
}

std::string ExtReal::decimal(int digits) const {
    if (kind_ == NegInf) return "-inf";
    if (kind_ == PosInf) return "inf";
    return value_.decimal(digits);
}

size_t ExtReal::hash() const {
    if (kind_ != Finite) return kind_ == NegInf ? 0x1111 : 0x2222;
    return value_.hash();
}

ExtReal ext_arith(ExtOp op, const ExtReal& a, const ExtReal& b) {
    switch (op) {
        case ExtOp::Add: return a + b;
        case ExtOp::Sub: return a - b;
        case ExtOp::Mul: {
            if (a.is_finite()) return b.scale(a.value());
            if (b.is_finite()) return a.scale(b.value());
            throw Error(ErrorKind::UndefinedArithmetic, "inf * inf is not supported");
        }
        case ExtOp::Min: return min(a, b);
        case ExtOp::Max: return max(a, b);
    }
    throw Error(ErrorKind::Internal, "bad ExtOp");
}

}  // namespace spinspec
