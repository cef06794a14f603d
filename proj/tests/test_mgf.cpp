#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "maxplus/mgf.hpp"
#include "maxplus/models.hpp"
#include "maxplus/structure.hpp"

using namespace maxplus;
using Catch::Approx;

namespace {

/// Union bound ingredient: sum over terms of the exact term MGF. Zero entries
/// count 1, bottom entries 0.
double entry_mgf_sum(const NetworkModel& m, const EntryExpression& e, double theta) {
    if (e.kind == EntryKind::neg_inf) return 0.0;
    if (e.kind == EntryKind::zero) return 1.0;
    double s = 0.0;
    for (const auto& t : e.terms) s += std::exp(term_log_mgf(m, t, theta));
    return s;
}

}  // namespace

TEST_CASE("curve_from_samples against a two-point hand computation") {
    const std::vector<double> x = {0.0, 1.0};
    const auto curve = curve_from_samples(x, 1, {1.0});
    REQUIRE(curve.points.size() == 1);
    CHECK(curve.n == 1);
    CHECK(curve.replicas == 2);
    const auto& pt = curve.points[0];
    const double l1 = std::log((1.0 + std::exp(1.0)) / 2.0);
    const double l2 = std::log((1.0 + std::exp(2.0)) / 2.0);
    CHECK(pt.value == Approx(l1).epsilon(1e-12));
    CHECK(pt.ci_half == Approx(1.96 * std::sqrt((std::exp(l2 - 2 * l1) - 1.0) / 2.0)).epsilon(1e-12));
    // the top sample holds 73% of the full sum: below the 90% trip point
    CHECK_FALSE(pt.infinite);
}

TEST_CASE("infinite flag trips on a dominating sample and never at theta zero") {
    std::vector<double> x(200, 1.0);
    x[0] = 500.0;  // lives in the first half, dominates both sums
    const auto curve = curve_from_samples(x, 1, {0.0, 1.0});
    CHECK_FALSE(curve.points[0].infinite);
    CHECK(curve.points[1].infinite);

    std::vector<double> benign(200);
    for (int i = 0; i < 200; ++i) benign[i] = 0.01 * i;
    for (const auto& pt : curve_from_samples(benign, 1, {0.5, 1.0}).points)
        CHECK_FALSE(pt.infinite);
}

TEST_CASE("singleton exponential block matches log(1/(1-theta)) at safe thetas") {
    const auto m = make_single_server(Exponential{1.0}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    REQUIRE(rep.classes.size() == 1);

    for (double theta : {0.1, 0.2, 0.3}) {
        const double exact = lambda_block_analytic(m, rep, 0, theta).value();
        CHECK(exact == Approx(std::log(1.0 / (1.0 - theta))).epsilon(1e-12));
    }

    const auto curve = lambda_block_empirical(m, rep, 0, {0.1, 0.2, 0.3}, 32, 20000, 42, 1);
    for (const auto& pt : curve.points) {
        const double truth = std::log(1.0 / (1.0 - pt.theta));
        CHECK_FALSE(pt.infinite);
        CHECK(std::abs(pt.value - truth) <= std::max(4.0 * pt.ci_half, 0.02));
    }
}

TEST_CASE("CI half width is tight at theta 0.5 with the full replica budget") {
    const auto m = make_single_server(Exponential{1.0}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    const auto curve = lambda_block_empirical(m, rep, 0, {0.5}, 64, 100000, 42, 1);
    CHECK(curve.points[0].ci_half < 0.02);
    CHECK(curve.points[0].ci_half > 0.0);
}

TEST_CASE("small-theta slope of the exponential block recovers the mean") {
    const auto m = make_single_server(Exponential{1.0}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    const auto curve = lambda_block_empirical(m, rep, 0, {0.01}, 32, 20000, 7, 1);
    const double slope = curve.points[0].value / 0.01;
    CHECK(slope > 0.97);
    CHECK(slope < 1.05);
}

TEST_CASE("multi-coordinate classes have no closed form") {
    NetworkModel m;
    m.s = 2;
    m.components = {{Exponential{1.0}, std::nullopt}, {Exponential{2.0}, std::nullopt}};
    m.A = {{EntryExpression::poly({{0}}), EntryExpression::poly({{1}})},
           {EntryExpression::poly({{1}}), EntryExpression::poly({{1}})}};
    m.B = {EntryExpression::zero(), EntryExpression::zero()};
    m.arrivals = Exponential{0.5};
    const auto rep = analyze_structure(m);
    REQUIRE(rep.classes.size() == 1);
    REQUIRE(rep.classes[0].size() == 2);
    CHECK_FALSE(lambda_block_analytic(m, rep, 0, 0.2).has_value());
}

TEST_CASE("join-node class with a zero diagonal gives the flat curve") {
    const auto m = make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2},
                                  Exponential{0.5});
    const auto rep = analyze_structure(m);
    REQUIRE(rep.classes.size() == 4);
    const int cls = rep.class_of[3];
    CHECK(lambda_block_analytic(m, rep, cls, 0.4).value() == 0.0);
    const auto curve = lambda_block_empirical(m, rep, cls, {0.2, 0.4}, 8, 200, 5, 1);
    for (const auto& pt : curve.points) {
        CHECK(pt.value == 0.0);
        CHECK(pt.ci_half == 0.0);
    }
}

TEST_CASE("estimated curves are convex in theta") {
    // log mean exp(theta X) is a log-sum-exp of linear functions of theta,
    // so even the finite-sample curve must pass the midpoint test exactly.
    const auto fj = make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2},
                                   Exponential{0.5});
    std::vector<double> grid(12);
    for (int j = 0; j < 12; ++j) grid[j] = 0.05 * (j + 1);
    const auto s_curve = lambda_S_empirical(fj, grid, 24, 2000, 11, 1);
    for (size_t j = 1; j + 1 < s_curve.points.size(); ++j) {
        const double mid = s_curve.points[j].value;
        const double chord = 0.5 * (s_curve.points[j - 1].value + s_curve.points[j + 1].value);
        CHECK(mid <= chord + 1e-9);
    }

    const auto m = make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    const auto b_curve = lambda_block_empirical(m, rep, 0, grid, 24, 2000, 11, 1);
    for (size_t j = 1; j + 1 < b_curve.points.size(); ++j) {
        const double mid = b_curve.points[j].value;
        const double chord = 0.5 * (b_curve.points[j - 1].value + b_curve.points[j + 1].value);
        CHECK(mid <= chord + 1e-9);
    }
}

TEST_CASE("network curve dominates every class curve") {
    // S_n majorizes each in-class anchor product pathwise (B entries are
    // nonnegative), so the estimates may only cross within noise.
    const auto m = make_fork_join(Exponential{1.0}, Exponential{0.8}, Exponential{1.2},
                                  Exponential{0.5});
    const auto rep = analyze_structure(m);
    const std::vector<double> grid = {0.2, 0.4};
    const auto s_curve = lambda_S_empirical(m, grid, 32, 4000, 3, 1);
    for (int cls = 0; cls < static_cast<int>(rep.classes.size()); ++cls) {
        const auto c = lambda_block_empirical(m, rep, cls, grid, 32, 4000, 3, 1);
        for (size_t j = 0; j < grid.size(); ++j) {
            const double slack = 3.0 * (s_curve.points[j].ci_half + c.points[j].ci_half) + 0.005;
            CHECK(s_curve.points[j].value >= c.points[j].value - slack);
        }
    }
}

TEST_CASE("union-bound envelope caps the network curve") {
    // max(v_n) <= max over window starts of (sum of A maxima) + B maximum,
    // and each maximum is union-bounded by the sum of exact term MGFs:
    // Lambda_S <= log SA + (log(n+1) + log SB)/n.
    const int n = 32;
    const std::vector<double> grid = {0.2, 0.4, 0.6};
    const auto check_envelope = [&](const NetworkModel& m, uint64_t seed) {
        const auto curve = lambda_S_empirical(m, grid, n, 4000, seed, 1);
        for (size_t j = 0; j < grid.size(); ++j) {
            double sa = 0.0, sb = 0.0;
            for (const auto& row : m.A)
                for (const auto& e : row) sa += entry_mgf_sum(m, e, grid[j]);
            for (const auto& e : m.B) sb += entry_mgf_sum(m, e, grid[j]);
            const double bound =
                std::log(sa) + (std::log(n + 1.0) + std::log(sb)) / n;
            CHECK(curve.points[j].value <= bound + 3.0 * curve.points[j].ci_half + 0.01);
        }
    };
    check_envelope(make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5}), 21);
    check_envelope(make_resequencing(Exponential{1.2}, Exponential{0.8}, 0.7, Exponential{1.0}),
                   22);
}

TEST_CASE("interarrival transform on the negative side") {
    CHECK(lambda_T_neg(Exponential{2.0}, 0.5) == Approx(std::log(2.0 / 2.5)).epsilon(1e-12));
    CHECK(lambda_T_neg(Deterministic{1.0}, 0.7) == Approx(-0.7).epsilon(1e-12));
    const double theta = 0.3;  // uniform on (0,1): E exp(-theta U) = (1-exp(-theta))/theta
    CHECK(lambda_T_neg(Uniform{0.0, 1.0}, theta) ==
          Approx(std::log((1.0 - std::exp(-theta)) / theta)).epsilon(1e-9));
}

TEST_CASE("default grid tops out at 0.95 eta or the user cap") {
    const auto td = make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5});
    const auto g1 = default_theta_grid(td);
    REQUIRE(g1.size() == 32);
    CHECK(g1.front() == Approx(0.95 / 32).epsilon(1e-12));
    CHECK(g1.back() == Approx(0.95).epsilon(1e-12));
    CHECK(default_theta_grid(td, 0.5).back() == Approx(0.5).epsilon(1e-12));
    CHECK(default_theta_grid(td, 2.0).back() == Approx(0.95).epsilon(1e-12));

    const auto det = make_single_server(Deterministic{1.0}, Deterministic{2.0});
    CHECK(default_theta_grid(det).back() == Approx(8.0).epsilon(1e-12));
    CHECK(default_theta_grid(det, 1.5).back() == Approx(1.5).epsilon(1e-12));
    CHECK(default_theta_grid(det, 1.5, 8).size() == 8);
}

TEST_CASE("samplers are deterministic across thread counts and reruns") {
    const auto m = make_tandem(Exponential{1.0}, Exponential{1.5}, Exponential{0.5});
    const auto rep = analyze_structure(m);
    const auto s1 = sample_S_values(m, 16, 500, 9, 1);
    const auto s4 = sample_S_values(m, 16, 500, 9, 4);
    REQUIRE(s1.size() == s4.size());
    for (size_t r = 0; r < s1.size(); ++r) REQUIRE(s1[r] == s4[r]);

    const auto b1 = sample_block_products(m, rep, 1, 16, 500, 9, 1);
    const auto b4 = sample_block_products(m, rep, 1, 16, 500, 9, 4);
    for (size_t r = 0; r < b1.size(); ++r) REQUIRE(b1[r] == b4[r]);
    const auto b1b = sample_block_products(m, rep, 1, 16, 500, 9, 1);
    for (size_t r = 0; r < b1.size(); ++r) REQUIRE(b1[r] == b1b[r]);
}
