#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "maxplus/compiled.hpp"
#include "maxplus/model.hpp"
#include "maxplus/moments.hpp"
#include "maxplus/parallel.hpp"
#include "maxplus/structure.hpp"

namespace maxplus {

struct MGFPoint {
    double theta = 0.0;
    double value = 0.0;    // (1/n) log empirical mean of exp(theta X)
    double ci_half = 0.0;  // delta-method 95% half width, same 1/n scale
    bool infinite = false; // heavy-tail heuristic tripped; value is untrustworthy
};

struct MGFCurve {
    std::vector<MGFPoint> points;
    int n = 0;
    long replicas = 0;
};

namespace detail {

/// log of (1/R) sum exp(t * x_r) over x[lo, hi), via the max shift. Also
/// reports the top sample's share of the sum.
inline void log_mean_exp(const std::vector<double>& x, size_t lo, size_t hi, double t,
                         double& lme, double& top_share) {
    double m = -kInf;
    for (size_t r = lo; r < hi; ++r) m = std::max(m, t * x[r]);
    double sum = 0.0;
    for (size_t r = lo; r < hi; ++r) sum += std::exp(t * x[r] - m);
    lme = m + std::log(sum / static_cast<double>(hi - lo));
    top_share = 1.0 / sum;
}

}  // namespace detail

/// Normalized log-MGF estimates over a theta grid from one set of samples of
/// X (the additive functional at horizon n). The one simulation pass serves
/// the whole grid. The INFINITE flag trips when a single sample carries more
/// than 90% of the exponential sum on both the first half of the replicas and
/// the full set, the signature of an effectively infinite transform.
inline MGFCurve curve_from_samples(const std::vector<double>& x, int n,
                                   const std::vector<double>& grid) {
    MGFCurve curve;
    curve.n = n;
    curve.replicas = static_cast<long>(x.size());
    const size_t R = x.size();
    curve.points.reserve(grid.size());
    for (double theta : grid) {
        MGFPoint pt;
        pt.theta = theta;
        double l1, l2, half_lme, share_full, share_half, share2;
        detail::log_mean_exp(x, 0, R, theta, l1, share_full);
        detail::log_mean_exp(x, 0, R / 2, theta, half_lme, share_half);
        detail::log_mean_exp(x, 0, R, 2.0 * theta, l2, share2);
        pt.value = l1 / n;
        const double relvar = (std::exp(l2 - 2.0 * l1) - 1.0) / static_cast<double>(R);
        pt.ci_half = 1.96 * std::sqrt(std::max(relvar, 0.0)) / n;
        pt.infinite = theta > 0 && share_half > 0.9 && share_full > 0.9;
        curve.points.push_back(pt);
    }
    return curve;
}

/// Samples of the diagonal block product entry: X = (M_n (x) ... (x) M_1)
/// restricted to the class, entry (anchor, anchor), anchor being the smallest
/// coordinate of the class.
inline std::vector<double> sample_block_products(const NetworkModel& m,
                                                 const StructureReport& rep, int cls, int n,
                                                 long R, uint64_t seed, int threads) {
    const auto& coords = rep.classes.at(cls);
    NetworkModel sub;
    sub.s = static_cast<int>(coords.size());
    sub.components = m.components;
    sub.arrivals = m.arrivals;
    sub.A.assign(sub.s, std::vector<EntryExpression>(sub.s, EntryExpression::bottom()));
    sub.B.assign(sub.s, EntryExpression::zero());
    for (int i = 0; i < sub.s; ++i)
        for (int j = 0; j < sub.s; ++j) sub.A[i][j] = m.A[coords[i]][coords[j]];
    std::vector<double> x(R);
    parallel_for(R, threads, [&](long r) {
        Stream rng = Stream::keyed(seed, static_cast<uint64_t>(r), 16 + static_cast<uint64_t>(cls));
        CompiledModel cm(sub);
        std::vector<double> col(sub.s, CompiledModel::neg_inf()), tmp(sub.s);
        col[0] = 0.0;
        for (int k = 0; k < n; ++k) {
            cm.draw(rng);
            cm.fold_col(col.data(), tmp.data());
            col.swap(tmp);
        }
        x[r] = col[0];
    });
    return x;
}

inline std::vector<double> sample_S_values(const NetworkModel& m, int n, long R, uint64_t seed,
                                           int threads) {
    std::vector<double> x(R);
    parallel_for(R, threads, [&](long r) {
        Stream rng = Stream::keyed(seed, static_cast<uint64_t>(r), 8);
        CompiledModel cm(m);
        std::vector<double> v(m.s), tmp(m.s);
        cm.draw(rng);
        cm.write_b(v.data());
        for (int k = 1; k <= n; ++k) {
            cm.draw(rng);
            cm.fold_col_with_b(v.data(), tmp.data());
            v.swap(tmp);
        }
        double top = CompiledModel::neg_inf();
        for (double w : v) top = std::max(top, w);
        x[r] = top;
    });
    return x;
}

/// Exact per-class log-MGF rate when the class is a single coordinate whose
/// diagonal entry is a constant or one term; larger blocks have no closed
/// form here.
inline std::optional<double> lambda_block_analytic(const NetworkModel& m,
                                                   const StructureReport& rep, int cls,
                                                   double theta) {
    const auto& coords = rep.classes.at(cls);
    if (coords.size() != 1) return std::nullopt;
    return entry_log_mgf(m, m.A[coords[0]][coords[0]], theta);
}

inline MGFCurve lambda_block_empirical(const NetworkModel& m, const StructureReport& rep, int cls,
                                       const std::vector<double>& grid, int n = 64,
                                       long R = 100000, uint64_t seed = 1, int threads = 1) {
    return curve_from_samples(sample_block_products(m, rep, cls, n, R, seed, threads), n, grid);
}

/// Empirical curve for the network functional S_n; by subadditivity the
/// finite-n value is an upper bound on the limit curve in expectation.
inline MGFCurve lambda_S_empirical(const NetworkModel& m, const std::vector<double>& grid,
                                   int n = 64, long R = 100000, uint64_t seed = 1,
                                   int threads = 1) {
    return curve_from_samples(sample_S_values(m, n, R, seed, threads), n, grid);
}

/// Interarrival transform evaluated on the negative side: Lambda_T(-theta).
inline double lambda_T_neg(const Law& arrivals, double theta) {
    return log_mgf(arrivals, -theta);
}

/// Grid of `points` thetas ending at 0.95 * eta (or at the user cap when eta
/// is infinite; cap <= 0 means "auto"). Zero itself is excluded: the curve
/// value there is identically 0.
inline std::vector<double> default_theta_grid(const NetworkModel& m, double user_cap = 0.0,
                                              int points = 32) {
    const double eta = eta_of(m);
    double top;
    if (user_cap > 0 && eta < kInf)
        top = std::min(0.95 * eta, user_cap);
    else if (eta < kInf)
        top = 0.95 * eta;
    else if (user_cap > 0)
        top = user_cap;
    else
        top = 8.0;
    std::vector<double> grid(points);
    for (int j = 1; j <= points; ++j) grid[j - 1] = top * j / points;
    return grid;
}

}  // namespace maxplus
