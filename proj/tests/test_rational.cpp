#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spinspec/rational.hpp"

using namespace spinspec;

TEST_CASE("integer basics") {
    Int a(7), b(-3);
    CHECK(a + b == Int(4));
    CHECK(a * b == Int(-21));
    CHECK(a - b == Int(10));
    CHECK(-a == Int(-7));
    CHECK(Int("123456789123456789123456789") * Int(0) == Int(0));
    CHECK(Int("99999999999999999999") + Int(1) == Int("100000000000000000000"));
    CHECK_THROWS(Int("12x"));
}

TEST_CASE("euclidean mod is never negative") {
    CHECK(euclid_mod(Int(7), Int(24)) == Int(7));
    CHECK(euclid_mod(Int(25), Int(24)) == Int(1));
    CHECK(euclid_mod(Int(-1), Int(24)) == Int(23));
    CHECK(euclid_mod(Int(48), Int(24)) == Int(0));
}

TEST_CASE("rationals are canonical") {
    Rat r(2, 6);
    CHECK(r.str() == "1/3");
    CHECK(r.numerator() == Int(1));
    CHECK(r.denominator() == Int(3));
    CHECK(Rat(-4, 8).str() == "-1/2");
    CHECK(Rat(Int(3), Int(-6)).str() == "-1/2");
    CHECK(Rat(5).str() == "5");
}

TEST_CASE("a third summed three times is exactly one") {
    Rat third(1, 3);
    CHECK(third + third + third == Rat(1));
    CHECK((Rat(1, 24) * Rat(24)) == Rat(1));
}

TEST_CASE("arithmetic and comparisons") {
    CHECK(Rat(1, 2) + Rat(1, 3) == Rat(5, 6));
    CHECK(Rat(1, 2) * Rat(2, 3) == Rat(1, 3));
    CHECK(Rat(1, 2) / Rat(1, 4) == Rat(2));
    CHECK(Rat(-7, 9) < Rat(0));
    CHECK(Rat(1, 3) < Rat(1, 2));
    CHECK(Rat(1, 3).sign() == 1);
    CHECK((-Rat(1, 3)).sign() == -1);
}

TEST_CASE("decimal rendering rounds half to even") {
    CHECK(Rat(1, 3).decimal(4) == "0.3333");
    CHECK(Rat(2, 3).decimal(4) == "0.6667");
    CHECK(Rat(-7, 9).decimal(4) == "-0.7778");
    CHECK(Rat(1, 2).decimal(0) == "0");    // 0.5 -> even 0
    CHECK(Rat(3, 2).decimal(0) == "2");    // 1.5 -> even 2
    CHECK(Rat(5, 2).decimal(0) == "2");    // 2.5 -> even 2
    CHECK(Rat(1, 8).decimal(2) == "0.12");  // 0.125 -> even 0.12
    CHECK(Rat(3, 8).decimal(2) == "0.38");  // 0.375 -> even 0.38
    CHECK(Rat(-1, 8).decimal(2) == "-0.12");
    CHECK(Rat(1).decimal(4) == "1.0000");
    CHECK(Rat(0).decimal(4) == "0.0000");
    CHECK(Rat(-1, 1000000).decimal(4) == "0.0000");  // no "-0.0000"
    CHECK(Rat(2591, 10000).decimal(4) == "0.2591");
}

TEST_CASE("parsing") {
    CHECK(Rat::parse("1/3").value() == Rat(1, 3));
    CHECK(Rat::parse("-7/9").value() == Rat(-7, 9));
    CHECK(Rat::parse("42").value() == Rat(42));
    CHECK(Rat::parse("-0.25").value() == Rat(-1, 4));
    CHECK(Rat::parse("0.2980").value() == Rat(298, 1000));
    CHECK(!Rat::parse("1/0").has_value());
    CHECK(!Rat::parse("abc").has_value());
    CHECK(!Rat::parse("").has_value());
}

TEST_CASE("hashing distinguishes and agrees") {
    CHECK(Rat(1, 3).hash() == Rat(2, 6).hash());
    CHECK(Int(5).hash() == Int(5).hash());
    CHECK(Rat(1, 3).hash() != Rat(1, 4).hash());
}
