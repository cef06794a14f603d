#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxplus/decay.hpp"
#include "maxplus/model.hpp"
#include "maxplus/parallel.hpp"
#include "maxplus/recursion.hpp"

namespace maxplus {

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TailFit {
    long replicas = 0;
    long kept = 0;
    long censored = 0;
    double q_lo = 0.95, q_hi = 0.999;
    std::vector<double> level_x;     // quantile abscissae
    std::vector<double> level_logp;  // log(1 - q) at each level
    double theta_hat = 0.0;
    double se = 0.0;
    double margin = 0.0;             // truncation margin actually used
    bool valid = false;
    std::string warning;
};

struct TailParams {
    long replicas = 100000;
    double q_lo = 0.95, q_hi = 0.999;
    int levels = 16;
    double margin = 0.0;  // <= 0: derive from an estimated gamma
    long max_horizon = 1000000;
    uint64_t seed = 42;
    int threads = 1;
};

namespace detail {

/// Linear-interpolation quantile of sorted data (the n-1 basis convention).
inline double quantile_sorted(const std::vector<double>& v, double q) {
    const size_t n = v.size();
    if (n == 1) return v[0];
    const double h = q * static_cast<double>(n - 1);
    const size_t i = std::min(static_cast<size_t>(h), n - 2);
    const double w = h - static_cast<double>(i);
    return v[i] + w * (v[i + 1] - v[i]);
}

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx < 1e-18) throw EstimationError("tail window is degenerate: levels coincide");
    return sxy / sxx;
}

inline double slope_from_sorted(const std::vector<double>& z, double q_lo, double q_hi,
                                int levels, std::vector<double>* out_x,
                                std::vector<double>* out_logp) {
    std::vector<double> xs(levels), ys(levels);
    for (int m = 0; m < levels; ++m) {
        const double q = q_lo + (q_hi - q_lo) * m / (levels - 1);
        xs[m] = quantile_sorted(z, q);
        ys[m] = std::log1p(-q);
    }
    const double slope = ls_slope(xs, ys);
    if (out_x) *out_x = std::move(xs);
    if (out_logp) *out_logp = std::move(ys);
    return slope;
}

}  // namespace detail

/// Monte Carlo daters, quantile levels across the window, least-squares
/// slope of log tail probability against level: theta_hat = -slope, with a
/// bootstrap (200 resamples) standard error. More than 1% censored replicas
/// voids the fit; fewer than 50 exceedances above q_hi is an error.
inline TailFit fit_tail(const NetworkModel& m, const TailParams& p = {}) {
    TailFit fit;
    fit.replicas = p.replicas;
    fit.q_lo = p.q_lo;
    fit.q_hi = p.q_hi;
    if (!(p.q_lo > 0 && p.q_lo < p.q_hi && p.q_hi < 1))
        throw EstimationError("quantile window must satisfy 0 < q_lo < q_hi < 1");
    if (p.levels < 2) throw EstimationError("need at least two levels");

    double margin = p.margin;
    if (!(margin > 0)) {
        const GammaEstimate g = estimate_gamma(m, 1024, 64, p.seed ^ 0x67616d6dULL, p.threads);
        margin = default_margin(g);
    }
    fit.margin = margin;

    std::vector<double> z(p.replicas);
    std::vector<uint8_t> ok(p.replicas);
    parallel_for(p.replicas, p.threads, [&](long r) {
        Stream pair_rng = Stream::keyed(p.seed, static_cast<uint64_t>(r), 0);
        Stream tau_rng = Stream::keyed(p.seed, static_cast<uint64_t>(r), 1);
        CompiledModel cm(m);
        const DaterSample d = sample_Z(cm, m.arrivals, pair_rng, tau_rng, margin, p.max_horizon);
        z[r] = d.z;
        ok[r] = d.converged;
    });

    std::vector<double> kept;
    kept.reserve(p.replicas);
    for (long r = 0; r < p.replicas; ++r)
        if (ok[r]) kept.push_back(z[r]);
    fit.kept = static_cast<long>(kept.size());
    fit.censored = p.replicas - fit.kept;

    if (fit.kept < 2) throw EstimationError("all replicas censored; cannot fit");
    if ((1.0 - p.q_hi) * static_cast<double>(fit.kept) < 50.0)
        throw EstimationError("window error: fewer than 50 exceedances above q_hi");

    std::sort(kept.begin(), kept.end());
    const double slope =
        detail::slope_from_sorted(kept, p.q_lo, p.q_hi, p.levels, &fit.level_x, &fit.level_logp);
    fit.theta_hat = -slope;

    constexpr int kBoot = 200;
    std::vector<double> boot(kBoot);
    parallel_for(kBoot, p.threads, [&](long b) {
        Stream rng = Stream::keyed(p.seed, static_cast<uint64_t>(b), 5);
        std::vector<double> rs(kept.size());
        for (size_t i = 0; i < rs.size(); ++i)
            rs[i] = kept[static_cast<size_t>(rng.next_unit() * kept.size())];
        std::sort(rs.begin(), rs.end());
        boot[b] = -detail::slope_from_sorted(rs, p.q_lo, p.q_hi, p.levels, nullptr, nullptr);
    });
    double bm = 0;
    for (double v : boot) bm += v;
    bm /= kBoot;
    double ss = 0;
    for (double v : boot) ss += (v - bm) * (v - bm);
    fit.se = std::sqrt(ss / (kBoot - 1));

    if (fit.censored > 0.01 * static_cast<double>(p.replicas)) {
        fit.valid = false;
        fit.warning = "more than 1% of replicas hit max_horizon; slope is biased";
    } else {
        fit.valid = true;
    }
    return fit;
}

struct CrossCheck {
    DecayReport solver;
    TailFit fit;
    double discrepancy = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Direct tail slope against the solver's theta*: agreement within
/// max(3 se, 10% of theta*).
inline CrossCheck cross_validate(const NetworkModel& m, const SolveParams& sp = {},
                                 const TailParams& tp = {}) {
    CrossCheck cc;
    cc.solver = solve(m, sp);
    cc.fit = fit_tail(m, tp);
    cc.discrepancy = std::abs(cc.fit.theta_hat - cc.solver.theta_star);
    cc.tolerance = std::max(3.0 * cc.fit.se, 0.1 * cc.solver.theta_star);
    cc.pass = cc.fit.valid && std::isfinite(cc.solver.theta_star) &&
              cc.discrepancy <= cc.tolerance;
    return cc;
}

}  // namespace maxplus
