#include "support/helpers.hpp"
#include "support/local_sat.hpp"

#include "satnn/bitvec.hpp"
#include "satnn/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <functional>

using namespace satnn;
using namespace satnn::testing;

namespace {

struct Eval {
    bool sat = false;
    std::int64_t value = 0;
};

// Fix inputs by assumption, assert side constraints, solve locally.
Eval eval_binary(int width, std::int64_t av, std::int64_t bv,
                 const std::function<std::pair<BitVec, SideConstraints>(CnfFormula&, const BitVec&, const BitVec&)>& op) {
    CnfFormula f;
    BitVec a = free_bitvec(f, width, "a"), b = free_bitvec(f, width, "b");
    auto [out, sc] = op(f, a, b);
    sc.assert_into(f);
    auto as = assume_value(a.bits(), av);
    auto more = assume_value(b.bits(), bv);
    as.insert(as.end(), more.begin(), more.end());
    auto model = local_solve(f, as);
    if (!model) return {};
    return {true, decode(out, *model)};
}

} // namespace

TEST_CASE("const_bitvec spells two's complement MSB first") {
    CHECK(bit_string(const_bitvec(0, 4)) == "0000");
    CHECK(bit_string(const_bitvec(-1, 4)) == "1111");
    CHECK(bit_string(const_bitvec(5, 4)) == "0101");
    CHECK(bit_string(const_bitvec(-8, 4)) == "1000");
    CHECK_THROWS_AS(const_bitvec(8, 4), RangeError);
    CHECK_THROWS_AS(const_bitvec(-9, 4), RangeError);
    for (int v = -128; v < 128; ++v) CHECK(decode_constant(const_bitvec(v, 8)) == v);
}

TEST_CASE("adder is exact iff the sum fits, widths 3 to 5") {
    for (int w : {3, 4, 5}) {
        const int lo = -(1 << (w - 1)), hi = (1 << (w - 1)) - 1;
        for (int a = lo; a <= hi; ++a)
            for (int b = lo; b <= hi; ++b) {
                const Eval r = eval_binary(w, a, b, [](CnfFormula& f, const BitVec& x, const BitVec& y) {
                    return bitwise_add(f, x, y, AddMode::Signed);
                });
                const bool fits = a + b >= lo && a + b <= hi;
                CHECK(r.sat == fits);
                if (r.sat) CHECK(r.value == a + b);
            }
    }
}

TEST_CASE("adder examples") {
    CnfFormula f;
    auto [s, sc] = bitwise_add(f, const_bitvec(7, 4), const_bitvec(1, 4), AddMode::Signed);
    sc.assert_into(f);
    CHECK(f.contradictory());

    CnfFormula g;
    BitVec a = free_bitvec(g, 4, "a");
    auto [sum, sc2] = bitwise_add(g, a, const_bitvec(0, 4), AddMode::Signed);
    sc2.assert_into(g);
    for (int v = -8; v < 8; ++v) {
        auto m = local_solve(g, assume_value(a.bits(), v));
        REQUIRE(m);
        CHECK(decode(sum, *m) == v);
    }

    CHECK_THROWS_AS(bitwise_add(g, a, const_bitvec(0, 5), AddMode::Signed), ShapeError);
}

TEST_CASE("unsigned adder forbids carry out") {
    // As unsigned 4-bit: 9 + 7 = 16 overflows, 9 + 6 = 15 fits.
    CnfFormula f;
    auto [s, sc] = bitwise_add(f, const_bitvec(-7, 4), const_bitvec(7, 4), AddMode::Unsigned);
    sc.assert_into(f);
    CHECK(f.contradictory());
    CnfFormula g;
    auto [s2, sc2] = bitwise_add(g, const_bitvec(-7, 4), const_bitvec(6, 4), AddMode::Unsigned);
    sc2.assert_into(g);
    CHECK_FALSE(g.contradictory());
    CHECK(decode_constant(s2) == -1); // 1111
}

TEST_CASE("conditional_negate gives the magnitude") {
    CnfFormula f;
    CHECK(bit_string(conditional_negate(f, const_bitvec(3, 4)).first) == "0011");
    CHECK(bit_string(conditional_negate(f, const_bitvec(-3, 4)).first) == "0011");
    CnfFormula g;
    auto [m, sc] = conditional_negate(g, const_bitvec(-8, 4));
    sc.assert_into(g);
    CHECK(g.contradictory());

    CnfFormula h;
    BitVec a = free_bitvec(h, 4, "a");
    auto [mag, sc2] = conditional_negate(h, a);
    sc2.assert_into(h);
    for (int v = -8; v < 8; ++v) {
        auto model = local_solve(h, assume_value(a.bits(), v));
        CHECK(model.has_value() == (v != -8));
        if (model) CHECK(decode(mag, *model) == std::abs(v));
    }
}

TEST_CASE("multiplier examples") {
    Hyperparams hp;
    {
        CnfFormula f;
        auto [p, sc] = bitwise_mul(f, const_bitvec(2, 4), const_bitvec(3, 4), hp);
        CHECK(bit_string(p) == "00000110");
    }
    {
        CnfFormula f;
        auto [p, sc] = bitwise_mul(f, const_bitvec(-2, 4), const_bitvec(3, 4), hp);
        CHECK(bit_string(p) == "11111010");
    }
    {
        CnfFormula f;
        BitVec a = free_bitvec(f, 4, "a");
        auto [p, sc] = bitwise_mul(f, a, const_bitvec(0, 4), hp);
        sc.assert_into(f);
        CHECK(bit_string(p) == "00000000");
        CHECK(local_solve(f, assume_value(a.bits(), 5)));
    }
    {
        Hyperparams tight = hp;
        tight.product_magnitude_bits = 5;
        CnfFormula f;
        auto [p, sc] = bitwise_mul(f, const_bitvec(7, 4), const_bitvec(7, 4), tight);
        sc.assert_into(f);
        CHECK(f.contradictory());
    }
    CnfFormula f;
    Hyperparams bad = hp;
    bad.product_magnitude_bits = 8;
    CHECK_THROWS_AS(bitwise_mul(f, const_bitvec(1, 4), const_bitvec(1, 4), bad), ConfigError);
    CHECK_THROWS_AS(bitwise_mul(f, const_bitvec(1, 5), const_bitvec(1, 4), hp), ShapeError);
}

TEST_CASE("multiplier agrees with integer products over free inputs") {
    Hyperparams hp;
    for (int pmb : {7, 5}) {
        hp.product_magnitude_bits = pmb;
        for (int a = -8; a < 8; ++a)
            for (int b = -8; b < 8; ++b) {
                const Eval r = eval_binary(4, a, b, [&](CnfFormula& f, const BitVec& x, const BitVec& y) {
                    return bitwise_mul(f, x, y, hp);
                });
                const bool expect = a != -8 && b != -8 && std::abs(a * b) < (1 << pmb);
                CHECK(r.sat == expect);
                if (r.sat) CHECK(r.value == a * b);
            }
    }
}

TEST_CASE("sign_extend") {
    CHECK(bit_string(sign_extend(const_bitvec(5, 4), 8)) == "00000101");
    CHECK(bit_string(sign_extend(const_bitvec(-6, 4), 8)) == "11111010");
    CHECK(sign_extend(const_bitvec(-6, 4), 4) == const_bitvec(-6, 4));
    CHECK_THROWS_AS(sign_extend(const_bitvec(1, 4), 3), ShapeError);
}

TEST_CASE("drop_lsbs is floor division by 2^k") {
    CHECK(drop_lsbs(const_bitvec(44, 8), 0) == const_bitvec(44, 8));
    CHECK(decode_constant(drop_lsbs(const_bitvec(44, 8), 2)) == 11);
    CHECK(decode_constant(drop_lsbs(const_bitvec(-6, 8), 2)) == -2);
    for (int v = -128; v < 128; ++v)
        for (int k = 0; k < 8; ++k) CHECK(decode_constant(drop_lsbs(const_bitvec(v, 8), k)) == floor_div_pow2(v, k));
    CHECK_THROWS_AS(drop_lsbs(const_bitvec(1, 8), 8), ShapeError);
    CHECK_THROWS_AS(drop_lsbs(const_bitvec(1, 8), -1), ShapeError);
}

TEST_CASE("truncate_to keeps the low bits") {
    CHECK(bit_string(truncate_to(const_bitvec(5, 8), 4)) == "0101");
    CHECK(decode_constant(truncate_to(const_bitvec(-3, 8), 4)) == -3);
}

TEST_CASE("circuits only append") {
    CnfFormula f;
    BitVec a = free_bitvec(f, 4, "a"), b = free_bitvec(f, 4, "b");
    bitwise_add(f, a, b, AddMode::Signed);
    const auto snapshot = f.clauses();
    const int vars = f.var_count();
    bitwise_mul(f, a, b, Hyperparams{});
    REQUIRE(f.clauses().size() >= snapshot.size());
    CHECK(std::equal(snapshot.begin(), snapshot.end(), f.clauses().begin()));
    CHECK(f.var_count() >= vars);
}
