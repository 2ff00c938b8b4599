#include "sm/rational.hpp"

#include <doctest.h>

using sm::Rat;

TEST_CASE("rational arithmetic stays in lowest terms") {
    Rat a(2, 4);
    CHECK(a.num() == 1);
    CHECK(a.den() == 2);
    CHECK((Rat(1, 3) + Rat(1, 6)) == Rat(1, 2));
    CHECK((Rat(1, 3) - Rat(1, 3)).is_zero());
    CHECK((Rat(-3, 9) * Rat(3, 2)) == Rat(-1, 2));
    CHECK((Rat(7, 2) / Rat(7, 2)) == Rat(1));
    CHECK(Rat(5, -10) == Rat(-1, 2));
    CHECK(Rat(-1, 2) < Rat(1, 3));
    CHECK(Rat(-1, 2).abs() == Rat(1, 2));
}

TEST_CASE("parsing accepts integers, fractions and finite decimals exactly") {
    CHECK(*Rat::parse("5") == Rat(5));
    CHECK(*Rat::parse("-5") == Rat(-5));
    CHECK(*Rat::parse("10/4") == Rat(5, 2));
    CHECK(*Rat::parse("-10/4") == Rat(-5, 2));
    CHECK(*Rat::parse("0.25") == Rat(1, 4));
    CHECK(*Rat::parse("-2.375") == Rat(-19, 8));
    CHECK(!Rat::parse(""));
    CHECK(!Rat::parse("1/0"));
    CHECK(!Rat::parse("1.2.3"));
    CHECK(!Rat::parse("a"));
    CHECK(!Rat::parse("1/"));
    CHECK(!Rat::parse("1 2"));
}

TEST_CASE("string round-trips are bit-exact") {
    for (long num = -7; num <= 7; ++num) {
        for (long den = 1; den <= 5; ++den) {
            Rat r(num, den);
            CHECK(*Rat::parse(r.str()) == r);
            CHECK(*Rat::parse(r.str_pq()) == r);
        }
    }
    CHECK(Rat(3).str() == "3");
    CHECK(Rat(3).str_pq() == "3/1");
    CHECK(Rat(-41, 20).str() == "-41/20");
}

TEST_CASE("large values do not overflow") {
    Rat big = Rat(1);
    for (int i = 0; i < 200; ++i) big = big * Rat(10) + Rat(1, 3);
    Rat back = big;
    for (int i = 0; i < 200; ++i) back = (back - Rat(1, 3)) / Rat(10);
    CHECK(back == Rat(1));
}
