#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "maxplus/compiled.hpp"
#include "maxplus/model.hpp"
#include "maxplus/parallel.hpp"
#include "maxplus/rng.hpp"

namespace maxplus {

struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One transition X' = A (x) X (+) B (x) t_next with a freshly drawn pair.
inline std::vector<MaxPlusValue> step(const NetworkModel& m, const std::vector<MaxPlusValue>& x,
                                      double t_next, Stream& rng) {
    if (static_cast<int>(x.size()) != m.s) throw DimensionError("step: state size mismatch");
    const StepSample st = sample_step(m, rng);
    std::vector<MaxPlusValue> out(m.s, MaxPlusValue::bottom());
    for (int i = 0; i < m.s; ++i) {
        MaxPlusValue acc = otimes(st.B.at(i, 0), MaxPlusValue::of(t_next));
        for (int j = 0; j < m.s; ++j) acc = oplus(acc, otimes(st.A.at(i, j), x[j]));
        out[i] = acc;
    }
    return out;
}

struct PathSample {
    int horizon = 0;
    std::vector<double> S;            // S_0 .. S_horizon
    std::vector<StepSample> steps;    // pairs 0..horizon when recorded
};

/// Runs V_0 = B_0, V_{k} = A_k (x) V_{k-1} (+) B_k and records
/// S_k = (+) over coordinates of V_k.
inline PathSample simulate_S(const NetworkModel& m, int n, Stream& rng, bool record = false) {
    CompiledModel cm(m);
    PathSample out;
    out.horizon = n;
    out.S.resize(n + 1);
    std::vector<double> v(m.s), tmp(m.s);
    auto top = [&](const std::vector<double>& w) {
        double best = CompiledModel::neg_inf();
        for (double x : w) best = std::max(best, x);
        return best;
    };
    auto capture = [&] {
        if (!record) return;
        StepSample st{MaxPlusMatrix(m.s, m.s), MaxPlusMatrix(m.s, 1)};
        for (int i = 0; i < m.s; ++i) {
            for (int j = 0; j < m.s; ++j) {
                const double a = cm.a_entry(i, j);
                if (a != CompiledModel::neg_inf()) st.A.at(i, j) = MaxPlusValue::of(a);
            }
            const double b = cm.b_entry(i);
            if (b != CompiledModel::neg_inf()) st.B.at(i, 0) = MaxPlusValue::of(b);
        }
        out.steps.push_back(std::move(st));
    };
    cm.draw(rng);
    capture();
    cm.write_b(v.data());
    out.S[0] = top(v);
    for (int k = 1; k <= n; ++k) {
        cm.draw(rng);
        capture();
        cm.fold_col_with_b(v.data(), tmp.data());
        v.swap(tmp);
        out.S[k] = top(v);
    }
    return out;
}

struct DaterSample {
    double z = 0.0;
    long horizon = 0;
    bool converged = false;
};

/// Backward scheme for the stationary maximal dater: the running value
/// W_n = (r_n (x) B_n) - sum tau pairs each new draw's B against the product
/// of all previous draws' A, and Z is the supremum of the W_n. Stops once the
/// current W has fallen margin * (1 + sqrt(n)) below the running maximum
/// (n >= 64), declares the sample censored at max_horizon, and throws
/// InstabilityError if block averages of W keep climbing the way a
/// supercritical drift does.
inline DaterSample sample_Z(CompiledModel& cm, const Law& arrivals, Stream& pair_rng,
                            Stream& tau_rng, double margin, long max_horizon) {
    const int s = cm.s();
    const FastLaw tau_law = FastLaw::of(arrivals);
    std::vector<double> r(s, 0.0), tmp(s);
    double best = CompiledModel::neg_inf();
    double stau = 0.0;
    constexpr long kBlock = 10000;
    double block_sum = 0.0, prev_mean = kInf, streak_base = 0.0;
    int rising = 0;
    for (long n = 0; n < max_horizon; ++n) {
        cm.draw(pair_rng);
        if (n > 0) stau += tau_law.draw(tau_rng);
        const double w = cm.dot_b(r.data()) - stau;
        if (w > best) best = w;
        if (n >= 64 && w < best - margin * (1.0 + std::sqrt(static_cast<double>(n))))
            return {best, n + 1, true};
        block_sum += w;
        if ((n + 1) % kBlock == 0) {
            const double bm = block_sum / kBlock;
            block_sum = 0.0;
            if (bm > prev_mean) {
                if (rising == 0) streak_base = prev_mean;
                if (++rising >= 8 && bm - streak_base > 10.0 * margin)
                    throw InstabilityError(
                        "trajectory keeps drifting upward; the network looks unstable");
            } else {
                rising = 0;
            }
            prev_mean = bm;
        }
        cm.fold_row(r.data(), tmp.data());
        r.swap(tmp);
    }
    return {best, max_horizon, false};
}

inline DaterSample sample_Z(const NetworkModel& m, Stream& pair_rng, Stream& tau_rng,
                            double margin, long max_horizon = 1000000) {
    CompiledModel cm(m);
    return sample_Z(cm, m.arrivals, pair_rng, tau_rng, margin, max_horizon);
}

struct GammaEstimate {
    double gamma_hat = 0.0;
    double se = 0.0;
    double a = 0.0;  // mean interarrival time per customer, the stability bar
    bool stable = false;
    int horizon = 0;
    int replicas = 0;
};

/// Monte Carlo estimate of the top Lyapunov exponent gamma = lim S_n / n.
inline GammaEstimate estimate_gamma(const NetworkModel& m, int horizon = 1024, int replicas = 64,
                                    uint64_t seed = 1, int threads = 1) {
    std::vector<double> g(replicas);
    parallel_for(replicas, threads, [&](long r) {
        Stream rng = Stream::keyed(seed, static_cast<uint64_t>(r), 2);
        CompiledModel cm(m);
        std::vector<double> v(m.s), tmp(m.s);
        cm.draw(rng);
        cm.write_b(v.data());
        for (int k = 1; k <= horizon; ++k) {
            cm.draw(rng);
            cm.fold_col_with_b(v.data(), tmp.data());
            v.swap(tmp);
        }
        double top = CompiledModel::neg_inf();
        for (double x : v) top = std::max(top, x);
        g[r] = top / horizon;
    });
    GammaEstimate est;
    est.horizon = horizon;
    est.replicas = replicas;
    double sum = 0.0;
    for (double x : g) sum += x;
    est.gamma_hat = sum / replicas;
    double ss = 0.0;
    for (double x : g) ss += (x - est.gamma_hat) * (x - est.gamma_hat);
    est.se = replicas > 1 ? std::sqrt(ss / (replicas - 1) / replicas) : 0.0;
    est.a = mean(m.arrivals);
    est.stable = est.gamma_hat + 2.0 * est.se < est.a;
    return est;
}

/// Default truncation margin for sample_Z: wide when the stability slack
/// a - gamma is thin, never below 30.
inline double default_margin(const GammaEstimate& g) {
    const double slack = std::max(g.a - g.gamma_hat, 1e-6);
    return 30.0 * std::max(1.0, 1.0 / slack);
}

}  // namespace maxplus
