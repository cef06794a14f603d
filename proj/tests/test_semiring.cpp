#include <catch2/catch_amalgamated.hpp>

#include "maxplus/rng.hpp"
#include "maxplus/semiring.hpp"

using namespace maxplus;

namespace {

MaxPlusValue B() { return MaxPlusValue::bottom(); }
MaxPlusValue F(double x) { return MaxPlusValue::of(x); }

MaxPlusMatrix mat(int r, int c, const std::vector<MaxPlusValue>& vals) {
    MaxPlusMatrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m.at(i, j) = vals[static_cast<size_t>(i) * c + j];
    return m;
}

// dyadic rationals keep plus exactly associative, so semiring laws can be
// checked with operator== instead of tolerances
MaxPlusValue random_value(Stream& rng) {
    if (rng.next_unit() < 0.25) return B();
    const auto raw = static_cast<long>(rng.next_u64() % 4001) - 2000;
    return F(static_cast<double>(raw) / 1024.0);
}

MaxPlusMatrix random_matrix(Stream& rng, int r, int c) {
    MaxPlusMatrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m.at(i, j) = random_value(rng);
    return m;
}

}  // namespace

TEST_CASE("scalar basics") {
    CHECK(B().is_bottom());
    CHECK_FALSE(F(0.0).is_bottom());
    CHECK(oplus(B(), F(3.0)) == F(3.0));
    CHECK(oplus(F(-2.0), B()) == F(-2.0));
    CHECK(oplus(F(1.5), F(-7.0)) == F(1.5));
    CHECK(otimes(F(1.5), F(2.25)) == F(3.75));
    CHECK(otimes(B(), F(9.0)).is_bottom());
    CHECK(otimes(F(9.0), B()).is_bottom());
    CHECK(otimes(MaxPlusValue::one(), F(4.0)) == F(4.0));
    CHECK(B() < F(-1e18));
    CHECK_FALSE(B() < B());
}

TEST_CASE("matrix oplus, known value") {
    const auto a = mat(2, 2, {F(1), B(), F(0), F(2)});
    const auto b = mat(2, 2, {F(0), F(3), B(), F(1)});
    const auto expect = mat(2, 2, {F(1), F(3), F(0), F(2)});
    CHECK(oplus(a, b) == expect);
}

TEST_CASE("matrix otimes, known value") {
    const auto a = mat(2, 2, {F(1), F(2), B(), F(0)});
    const auto v = mat(2, 1, {F(0), F(3)});
    const auto expect = mat(2, 1, {F(5), F(3)});
    CHECK(otimes(a, v) == expect);
}

TEST_CASE("identity and shape errors") {
    const auto e = MaxPlusMatrix::identity(3);
    Stream rng(7);
    const auto a = random_matrix(rng, 3, 3);
    CHECK(otimes(e, a) == a);
    CHECK(otimes(a, e) == a);
    CHECK_THROWS_AS(oplus(MaxPlusMatrix(2, 2), MaxPlusMatrix(2, 3)), DimensionError);
    CHECK_THROWS_AS(otimes(MaxPlusMatrix(2, 3), MaxPlusMatrix(2, 3)), DimensionError);
}

TEST_CASE("product_range") {
    Stream rng(11);
    std::vector<MaxPlusMatrix> mats;
    for (int k = 0; k < 5; ++k) mats.push_back(random_matrix(rng, 3, 3));
    CHECK(product_range(mats, 4, 3) == MaxPlusMatrix::identity(3));
    CHECK(product_range(mats, 2, 2) == mats[1]);
    // descending order: A_4 (x) A_3 (x) A_2
    const auto d = product_range(mats, 2, 4);
    CHECK(d == otimes(otimes(mats[3], mats[2]), mats[1]));
    CHECK_THROWS_AS(product_range(mats, 0, 2), DimensionError);
    CHECK_THROWS_AS(product_range(mats, 1, 6), DimensionError);
}

TEST_CASE("scalar semiring laws on random triples") {
    Stream rng(1234);
    for (int it = 0; it < 10000; ++it) {
        const auto a = random_value(rng), b = random_value(rng), c = random_value(rng);
        CHECK(oplus(a, b) == oplus(b, a));
        CHECK(oplus(oplus(a, b), c) == oplus(a, oplus(b, c)));
        CHECK(otimes(otimes(a, b), c) == otimes(a, otimes(b, c)));
        CHECK(otimes(a, oplus(b, c)) == oplus(otimes(a, b), otimes(a, c)));
        CHECK(otimes(oplus(b, c), a) == oplus(otimes(b, a), otimes(c, a)));
        CHECK(oplus(a, B()) == a);
        CHECK(otimes(a, B()).is_bottom());
        CHECK(otimes(a, MaxPlusValue::one()) == a);
        CHECK(oplus(a, a) == a);
    }
}

TEST_CASE("matrix semiring laws on random triples") {
    Stream rng(99);
    for (int it = 0; it < 200; ++it) {
        const auto a = random_matrix(rng, 3, 4);
        const auto b = random_matrix(rng, 4, 2);
        const auto c = random_matrix(rng, 2, 5);
        CHECK(otimes(otimes(a, b), c) == otimes(a, otimes(b, c)));
        const auto b2 = random_matrix(rng, 4, 2);
        CHECK(otimes(a, oplus(b, b2)) == oplus(otimes(a, b), otimes(a, b2)));
    }
}
