#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "maxplus/rng.hpp"

namespace maxplus {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Deterministic {
    double value;
};
struct Exponential {
    double rate;
};
struct Uniform {
    double lo, hi;
};

using Law = std::variant<Deterministic, Exponential, Uniform>;

inline double mean(const Law& law) {
    struct V {
        double operator()(const Deterministic& d) const { return d.value; }
        double operator()(const Exponential& e) const { return 1.0 / e.rate; }
        double operator()(const Uniform& u) const { return 0.5 * (u.lo + u.hi); }
    };
    return std::visit(V{}, law);
}

inline double sample(const Law& law, Stream& rng) {
    struct V {
        Stream& rng;
        double operator()(const Deterministic& d) const { return d.value; }
        double operator()(const Exponential& e) const { return rng.exponential(e.rate); }
        double operator()(const Uniform& u) const { return rng.uniform(u.lo, u.hi); }
    };
    return std::visit(V{rng}, law);
}

/// Law flattened for tight loops: no variant dispatch per draw.
struct FastLaw {
    uint8_t kind;  // 0 deterministic, 1 exponential, 2 uniform
    double p0, p1;

    static FastLaw of(const Law& law) {
        if (const auto* d = std::get_if<Deterministic>(&law)) return {0, d->value, 0.0};
        if (const auto* e = std::get_if<Exponential>(&law)) return {1, 1.0 / e->rate, 0.0};
        const auto& u = std::get<Uniform>(law);
        return {2, u.lo, u.hi - u.lo};
    }

    double draw(Stream& rng) const {
        switch (kind) {
            case 0: return p0;
            case 1: return -std::log(rng.next_unit()) * p0;
            default: return p0 + p1 * rng.next_unit();
        }
    }

    bool random() const { return kind != 0; }
};

/// log E[exp(theta X)], +inf where the transform diverges. Exact closed
/// forms; the uniform case switches to its series near theta = 0.
inline double log_mgf(const Law& law, double theta) {
    struct V {
        double theta;
        double operator()(const Deterministic& d) const { return theta * d.value; }
        double operator()(const Exponential& e) const {
            if (theta >= e.rate) return kInf;
            return std::log(e.rate / (e.rate - theta));
        }
        double operator()(const Uniform& u) const {
            const double m = 0.5 * theta * (u.hi + u.lo);
            const double d = 0.5 * theta * (u.hi - u.lo);
            if (std::abs(d) < 1e-6) return m + d * d / 6.0;
            return m + std::log(std::sinh(d) / d);
        }
    };
    return std::visit(V{theta}, law);
}

/// Supremum of {theta >= 0 : log_mgf finite}: the rate for exponential
/// laws, +inf for bounded support.
inline double mgf_threshold(const Law& law) {
    struct V {
        double operator()(const Deterministic&) const { return kInf; }
        double operator()(const Exponential& e) const { return e.rate; }
        double operator()(const Uniform&) const { return kInf; }
    };
    return std::visit(V{}, law);
}

}  // namespace maxplus
