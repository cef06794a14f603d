#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maxplus/mgf.hpp"
#include "maxplus/model.hpp"
#include "maxplus/moments.hpp"
#include "maxplus/structure.hpp"

namespace maxplus {

struct RootResult {
    double theta = 0.0;
    double lo = 0.0, hi = 0.0;  // bracket (or CI band for curve roots)
    bool bracketed = false;     // a sign change was actually found
    bool capped = false;        // no crossing below the cap; theta equals the cap
};

namespace detail {

/// Positive root of g(theta) = lam(theta) + Lambda_T(-theta). g(0) = 0 and
/// g is negative just right of 0 for stable models, so the root sought is
/// the far end of the negative stretch. No crossing below `cap` returns the
/// cap with the capped flag.
inline RootResult positive_root(const std::function<double(double)>& lam, const Law& arrivals,
                                double cap) {
    auto g = [&](double th) { return lam(th) + lambda_T_neg(arrivals, th); };
    RootResult out;
    double hi;
    if (cap < kInf) {
        hi = cap * (1.0 - 1e-12);
        if (g(hi) < 0) {
            out.theta = out.lo = out.hi = cap;
            out.capped = true;
            return out;
        }
    } else {
        hi = 1.0;
        int guard = 0;
        while (g(hi) < 0 && ++guard < 64) hi *= 2.0;
        if (guard >= 64) {
            out.theta = out.lo = out.hi = kInf;
            out.capped = true;
            return out;
        }
    }
    double lo = hi / 2.0;
    while (g(lo) >= 0) {
        lo /= 2.0;
        if (lo < 1e-300) {
            // no negative stretch: the model sits at or beyond criticality
            out.theta = out.lo = out.hi = 0.0;
            return out;
        }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0 ? lo : hi) = mid;
    }
    out.theta = 0.5 * (lo + hi);
    out.lo = lo;
    out.hi = hi;
    out.bracketed = true;
    return out;
}

/// Piecewise-linear interpolant through the finite prefix of an estimated
/// curve (anchored at (0,0)); +inf past the last trusted point.
inline std::function<double(double)> curve_interpolant(const MGFCurve& curve, double shift) {
    std::vector<double> xs{0.0}, ys{0.0};
    for (const auto& pt : curve.points) {
        if (pt.infinite || !std::isfinite(pt.value)) break;
        xs.push_back(pt.theta);
        ys.push_back(pt.value + shift * pt.ci_half);
    }
    return [xs, ys](double th) -> double {
        if (th <= 0) return 0.0;
        auto it = std::upper_bound(xs.begin(), xs.end(), th);
        if (it == xs.end()) return kInf;
        const size_t hi = static_cast<size_t>(it - xs.begin());
        const double w = (th - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
        return ys[hi - 1] + w * (ys[hi] - ys[hi - 1]);
    };
}

}  // namespace detail

inline RootResult theta_from_lambda(const std::function<double(double)>& lam, const Law& arrivals,
                                    double cap = kInf) {
    return detail::positive_root(lam, arrivals, cap);
}

/// Root from an estimated curve; the band [lo, hi] comes from re-solving with
/// the curve shifted by +/- one CI half width (raising the curve lowers the
/// root, so the upper-shifted curve gives lo).
inline RootResult theta_from_curve(const MGFCurve& curve, const Law& arrivals, double cap = kInf) {
    double trusted = 0.0;
    for (const auto& pt : curve.points) {
        if (pt.infinite || !std::isfinite(pt.value)) break;
        trusted = pt.theta;
    }
    const double eff_cap = std::min(cap, trusted > 0 ? trusted : cap);
    RootResult central =
        detail::positive_root(detail::curve_interpolant(curve, 0.0), arrivals, eff_cap);
    const RootResult up =
        detail::positive_root(detail::curve_interpolant(curve, +1.0), arrivals, eff_cap);
    const RootResult dn =
        detail::positive_root(detail::curve_interpolant(curve, -1.0), arrivals, eff_cap);
    central.lo = std::min(up.theta, central.theta);
    central.hi = std::max(dn.theta, central.theta);
    central.capped = central.capped || (cap < kInf && central.theta >= cap) ||
                     (trusted > 0 && trusted < cap && central.theta >= trusted);
    return central;
}

struct ClassResult {
    int cls = 0;                  // topological index, 0-based
    std::vector<int> coords;      // 1-based coordinates
    std::string method;           // "analytic" or "empirical"
    double theta = 0.0;
    double lo = 0.0, hi = 0.0;
    bool capped = false;
};

struct DecayReport {
    double eta = kInf;
    bool umd_ok = false;  // unit max degree: eta provably not binding
    std::vector<std::string> umd_violations;
    std::vector<ClassResult> classes;
    double theta_star = 0.0;
    double theta_lo = 0.0, theta_hi = 0.0;
    std::string binding;  // "eta", "class <k>", or "none"
    std::string method;   // "analytic", "empirical", or "mixed"
};

struct SolveParams {
    std::string method = "auto";  // "auto" | "analytic" | "empirical"
    int n = 64;
    long replicas = 100000;
    int grid_points = 32;
    double theta_cap = 0.0;  // grid cap for empirical curves; <= 0 means auto
    uint64_t seed = 42;
    int threads = 1;
};

/// Per-class decay roots assembled into theta* = min(eta, min_l theta^l),
/// with eta dropped from the minimum when the unit-max-degree conditions
/// certify it cannot bind. "auto" uses closed forms where a class admits one
/// and estimated curves elsewhere.
inline DecayReport solve(const NetworkModel& m, const SolveParams& p = {}) {
    DecayReport rep;
    const StructureReport st = analyze_structure(m);
    const DegreeReport deg = check_unit_max_degree(m);
    rep.eta = eta_of(m);
    rep.umd_ok = deg.ok;
    rep.umd_violations = deg.violations;
    const double cap = deg.ok ? kInf : rep.eta;

    bool any_analytic = false, any_empirical = false;
    for (size_t cls = 0; cls < st.classes.size(); ++cls) {
        ClassResult cr;
        cr.cls = static_cast<int>(cls);
        for (int c : st.classes[cls]) cr.coords.push_back(c + 1);
        const bool want_analytic = p.method != "empirical";
        bool analytic_done = false;
        if (want_analytic &&
            lambda_block_analytic(m, st, static_cast<int>(cls), 0.0).has_value()) {
            auto lam = [&](double th) {
                return *lambda_block_analytic(m, st, static_cast<int>(cls), th);
            };
            const RootResult root = theta_from_lambda(lam, m.arrivals, cap);
            cr.method = "analytic";
            cr.theta = root.theta;
            cr.lo = root.lo;
            cr.hi = root.hi;
            if (root.bracketed) cr.lo = cr.hi = root.theta;  // bisected to tolerance
            cr.capped = root.capped;
            analytic_done = true;
            any_analytic = true;
        }
        if (!analytic_done) {
            if (p.method == "analytic")
                throw std::runtime_error("class " + std::to_string(cls + 1) +
                                         " has no closed-form transform; use the empirical "
                                         "method");
            // the class transform is finite below the block threshold, which
            // can sit far above eta, so the class grid uses its own cap
            const double thr = block_mgf_threshold(m, st.classes[cls]);
            double top;
            if (p.theta_cap > 0 && thr < kInf)
                top = std::min(0.95 * thr, p.theta_cap);
            else if (thr < kInf)
                top = 0.95 * thr;
            else if (p.theta_cap > 0)
                top = p.theta_cap;
            else
                top = 8.0;
            std::vector<double> grid(p.grid_points);
            for (int j = 1; j <= p.grid_points; ++j) grid[j - 1] = top * j / p.grid_points;
            const MGFCurve curve = lambda_block_empirical(m, st, static_cast<int>(cls), grid,
                                                          p.n, p.replicas, p.seed, p.threads);
            const RootResult root = theta_from_curve(curve, m.arrivals, cap);
            cr.method = "empirical";
            cr.theta = root.theta;
            cr.lo = root.lo;
            cr.hi = root.hi;
            cr.capped = root.capped;
            any_empirical = true;
        }
        rep.classes.push_back(std::move(cr));
    }

    double min_class = kInf, min_lo = kInf, min_hi = kInf;
    int argmin = -1;
    for (const auto& cr : rep.classes) {
        if (cr.theta < min_class) {
            min_class = cr.theta;
            argmin = cr.cls;
        }
        min_lo = std::min(min_lo, cr.lo);
        min_hi = std::min(min_hi, cr.hi);
    }
    if (rep.umd_ok) {
        rep.theta_star = min_class;
        rep.theta_lo = min_lo;
        rep.theta_hi = min_hi;
        rep.binding = min_class == kInf ? "none" : "class " + std::to_string(argmin + 1);
    } else if (rep.eta <= min_class) {
        rep.theta_star = rep.eta;
        rep.theta_lo = std::min(rep.eta, min_lo);
        rep.theta_hi = rep.eta;
        rep.binding = "eta";
    } else {
        rep.theta_star = min_class;
        rep.theta_lo = std::min(min_lo, rep.eta);
        rep.theta_hi = std::min(min_hi, rep.eta);
        rep.binding = min_class == kInf ? "none" : "class " + std::to_string(argmin + 1);
    }
    rep.method = any_analytic && any_empirical ? "mixed" : (any_empirical ? "empirical"
                                                                          : "analytic");
    return rep;
}

// --- two-branch routing -------------------------------------------------------

struct RoutingOptimum {
    double p_star = 0.0;
    double theta_star = 0.0;
    bool feasible = true;
    bool closed_form = true;
};

/// Optimal split for two exponential branches fed by Poisson(lambda) arrivals:
/// the branch decay rates mu2 - lambda p and mu3 - lambda (1-p) cross at the
/// optimum. Boundary optima are clamped to p in [0,1].
inline RoutingOptimum optimize_routing(double mu2, double mu3, double lambda) {
    RoutingOptimum out;
    if (!(mu2 > 0) || !(mu3 > 0) || !(lambda > 0))
        throw std::invalid_argument("optimize_routing: rates must be positive");
    if (lambda >= mu2 + mu3) {
        out.feasible = false;
        out.p_star = std::clamp(((mu2 - mu3) / lambda + 1.0) / 2.0, 0.0, 1.0);
        out.theta_star = 0.0;
        return out;
    }
    const double p = ((mu2 - mu3) / lambda + 1.0) / 2.0;
    if (p <= 0.0) {
        out.p_star = 0.0;
        out.theta_star = std::min(mu2, mu3 - lambda);
    } else if (p >= 1.0) {
        out.p_star = 1.0;
        out.theta_star = std::min(mu2 - lambda, mu3);
    } else {
        out.p_star = p;
        out.theta_star = 0.5 * (mu2 + mu3 - lambda);
    }
    return out;
}

/// Golden-section maximization of a unimodal theta(p) on [lo, hi]; numeric
/// fallback for objectives without the closed form.
inline RoutingOptimum optimize_routing_numeric(const std::function<double(double)>& theta_of_p,
                                               double lo = 0.0, double hi = 1.0,
                                               double tol = 1e-10) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = theta_of_p(c), fd = theta_of_p(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = theta_of_p(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = theta_of_p(d);
        }
    }
    RoutingOptimum out;
    out.p_star = 0.5 * (a + b);
    out.theta_star = theta_of_p(out.p_star);
    out.closed_form = false;
    out.feasible = out.theta_star > 0;
    return out;
}

// --- Legendre duality check ---------------------------------------------------

struct LegendreReport {
    double inf_ratio = kInf;  // inf over x of Lambda*(x) / x
    double x_star = 0.0;
    bool applicable = false;
    bool agrees = false;
};

/// Convex-duality cross-check: with g(theta) = lam(theta) + Lambda_T(-theta),
/// inf_{x>0} g*(x)/x recovers sup{theta : g(theta) <= 0}. Needs g finite a
/// little beyond theta*; degenerate transforms (deterministic everything)
/// are reported non-applicable.
inline LegendreReport legendre_cross_check(const std::function<double(double)>& lam,
                                           const Law& arrivals, double theta_star,
                                           double tol = 1e-3) {
    LegendreReport rep;
    auto g = [&](double th) { return lam(th) + lambda_T_neg(arrivals, th); };

    double pole = 1.0;
    int guard = 0;
    while (std::isfinite(g(pole)) && ++guard < 64) pole *= 2.0;
    if (guard >= 64) pole = kInf;
    double theta_max;
    if (pole == kInf) {
        theta_max = std::max(16.0, 16.0 * theta_star);
    } else {
        double lo = pole / 2.0, hi = pole;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (std::isfinite(g(mid)) ? lo : hi) = mid;
        }
        theta_max = lo;
    }
    if (!(theta_star > 0) || !std::isfinite(g(std::min(theta_star * (1 + 1e-9) + 1e-12,
                                                       theta_max)))) {
        rep.applicable = false;
        return rep;
    }

    auto transform = [&](double x) -> double {  // g*(x) by ternary search, g convex
        double a = 0.0, b = theta_max;
        for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, b); ++it) {
            const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
            const double f1 = m1 * x - g(m1), f2 = m2 * x - g(m2);
            if (f1 < f2)
                a = m1;
            else
                b = m2;
        }
        const double th = 0.5 * (a + b);
        return th * x - g(th);
    };
    auto ratio = [&](double x) { return transform(x) / x; };

    const double x_lo = 1e-3, x_hi = 1e3;
    const int grid = 1000;
    double best = kInf, best_x = 0.0;
    for (int i = 0; i <= grid; ++i) {
        const double x = x_lo * std::pow(x_hi / x_lo, static_cast<double>(i) / grid);
        const double f = ratio(x);
        if (f < best) {
            best = f;
            best_x = x;
        }
    }
    if (!std::isfinite(best)) {
        rep.applicable = false;
        return rep;
    }
    {  // golden refinement around the grid minimum
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = best_x / std::pow(x_hi / x_lo, 1.0 / grid);
        double b = best_x * std::pow(x_hi / x_lo, 1.0 / grid);
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = ratio(c), fd = ratio(d);
        for (int it = 0; it < 200 && b - a > 1e-12 * b; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = ratio(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = ratio(d);
            }
        }
        best_x = 0.5 * (a + b);
        best = ratio(best_x);
    }
    rep.applicable = true;
    rep.inf_ratio = best;
    rep.x_star = best_x;
    rep.agrees = std::abs(best - theta_star) <= tol;
    return rep;
}

}  // namespace maxplus
