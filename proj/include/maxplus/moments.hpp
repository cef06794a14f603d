#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "maxplus/distributions.hpp"
#include "maxplus/model.hpp"

namespace maxplus {

namespace detail {

inline double logaddexp(double a, double b) {
    if (a == kInf || b == kInf) return kInf;
    const double m = a > b ? a : b;
    if (m == -kInf) return -kInf;
    return m + std::log1p(std::exp((a > b ? b : a) - m));
}

}  // namespace detail

/// Exact log E[exp(theta * term)] for a single term (a sum of component
/// variables, multiplicity via repeats). Components are independent;
/// members sharing a coin form a two-point mixture over the coin outcome.
inline double term_log_mgf(const NetworkModel& m, const std::vector<int>& term, double theta) {
    double acc = 0.0;
    struct Group {
        double p;
        double l2 = 0.0, l3 = 0.0;  // log MGFs of the two branch products
    };
    std::map<int, Group> groups;
    for (size_t a = 0; a < term.size();) {
        size_t b = a;
        while (b < term.size() && term[b] == term[a]) ++b;
        const int k = term[a];
        const double mult = static_cast<double>(b - a);
        const auto& spec = m.components[static_cast<size_t>(k)];
        const double lm = log_mgf(spec.law, mult * theta);
        if (!spec.coin) {
            acc += lm;
        } else {
            auto& g = groups.try_emplace(spec.coin->id, Group{spec.coin->p}).first->second;
            (spec.coin->branch == 2 ? g.l2 : g.l3) += lm;
        }
        a = b;
    }
    for (const auto& [cid, g] : groups) {
        (void)cid;
        const double lp2 = g.p > 0 ? std::log(g.p) : -kInf;
        const double lp3 = g.p < 1 ? std::log1p(-g.p) : -kInf;
        acc += detail::logaddexp(lp2 + g.l2, lp3 + g.l3);
    }
    return acc;
}

/// sup{theta >= 0 : term MGF finite}.
inline double term_mgf_threshold(const NetworkModel& m, const std::vector<int>& term) {
    double thr = kInf;
    for (size_t a = 0; a < term.size();) {
        size_t b = a;
        while (b < term.size() && term[b] == term[a]) ++b;
        const int k = term[a];
        const double mult = static_cast<double>(b - a);
        const auto& spec = m.components[static_cast<size_t>(k)];
        const double p_on =
            !spec.coin ? 1.0 : (spec.coin->branch == 2 ? spec.coin->p : 1.0 - spec.coin->p);
        if (p_on > 0) thr = std::min(thr, mgf_threshold(spec.law) / mult);
        a = b;
    }
    return thr;
}

/// Entry MGF threshold: a max of terms is finite exactly when every term is.
inline double entry_mgf_threshold(const NetworkModel& m, const EntryExpression& e) {
    if (e.kind != EntryKind::poly) return kInf;
    double thr = kInf;
    for (const auto& t : e.terms) thr = std::min(thr, term_mgf_threshold(m, t));
    return thr;
}

/// Exact log E[exp(theta * entry)] when the entry is a constant or a single
/// term; maxima of several dependent terms have no closed form here.
inline std::optional<double> entry_log_mgf(const NetworkModel& m, const EntryExpression& e,
                                           double theta) {
    if (e.kind == EntryKind::zero) return 0.0;
    if (e.kind == EntryKind::poly && e.terms.size() == 1)
        return term_log_mgf(m, e.terms[0], theta);
    return std::nullopt;
}

/// Network-level MGF threshold: eta = min over B entries of the entry
/// threshold. Under (LT) this must be positive.
inline double eta_of(const NetworkModel& m) {
    double eta = kInf;
    for (const auto& e : m.B) eta = std::min(eta, entry_mgf_threshold(m, e));
    return eta;
}

/// MGF threshold of a diagonal block: min entry threshold over the listed
/// coordinates. The per-class transform stays finite strictly below this,
/// which can be far above the network-level eta.
inline double block_mgf_threshold(const NetworkModel& m, const std::vector<int>& coords) {
    double thr = kInf;
    for (int i : coords)
        for (int j : coords) thr = std::min(thr, entry_mgf_threshold(m, m.A[i][j]));
    return thr;
}

}  // namespace maxplus
