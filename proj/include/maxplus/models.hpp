#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maxplus/model.hpp"

namespace maxplus {

/// Builders for the bundled network families. Entries reference 1-based
/// component ids through EntryExpression::poly on 0-based indices.

inline NetworkModel make_single_server(Law service, Law arrivals) {
    NetworkModel m;
    m.s = 1;
    m.components = {{service, std::nullopt}};
    m.A = {{EntryExpression::poly({{0}})}};
    m.B = {EntryExpression::poly({{0}})};
    m.arrivals = arrivals;
    return m;
}

/// Two stations in series with independent services.
inline NetworkModel make_tandem(Law s1, Law s2, Law arrivals) {
    NetworkModel m;
    m.s = 2;
    m.components = {{s1, std::nullopt}, {s2, std::nullopt}};
    m.A = {{EntryExpression::poly({{0}}), EntryExpression::bottom()},
           {EntryExpression::poly({{0, 1}}), EntryExpression::poly({{1}})}};
    m.B = {EntryExpression::poly({{0}}), EntryExpression::poly({{0, 1}})};
    m.arrivals = arrivals;
    return m;
}

/// Two stations in series fed the same service draw: one component used
/// twice, the canonical case where eta binds.
inline NetworkModel make_tandem_identical(Law s, Law arrivals) {
    NetworkModel m;
    m.s = 2;
    m.components = {{s, std::nullopt}};
    m.A = {{EntryExpression::poly({{0}}), EntryExpression::bottom()},
           {EntryExpression::poly({{0, 0}}), EntryExpression::poly({{0}})}};
    m.B = {EntryExpression::poly({{0}}), EntryExpression::poly({{0, 0}})};
    m.arrivals = arrivals;
    return m;
}

/// Fork at station 1 into two parallel branches joined (zero service) at
/// coordinate 4.
inline NetworkModel make_fork_join(Law s1, Law s2, Law s3, Law arrivals) {
    NetworkModel m;
    m.s = 4;
    m.components = {{s1, std::nullopt}, {s2, std::nullopt}, {s3, std::nullopt}};
    const auto bot = EntryExpression::bottom();
    m.A = {{EntryExpression::poly({{0}}), bot, bot, bot},
           {EntryExpression::poly({{0, 1}}), EntryExpression::poly({{1}}), bot, bot},
           {EntryExpression::poly({{0, 2}}), bot, EntryExpression::poly({{2}}), bot},
           {EntryExpression::poly({{0, 1}, {0, 2}}), EntryExpression::poly({{1}}),
            EntryExpression::poly({{2}}), EntryExpression::zero()}};
    m.B = {EntryExpression::poly({{0}}), EntryExpression::poly({{0, 1}}),
           EntryExpression::poly({{0, 2}}), EntryExpression::poly({{0, 1}, {0, 2}})};
    m.arrivals = arrivals;
    return m;
}

/// Bernoulli(p) routing to branch 2 (else branch 3) through a zero-service
/// hub, resequenced at coordinate 4. The branch services are coin-modulated
/// clones: the branch not taken does zero work, and both clones share the
/// routing coin, which is exactly why unit max degree fails here.
inline NetworkModel make_resequencing(Law z2, Law z3, double p, Law arrivals) {
    NetworkModel m;
    m.s = 4;
    m.components = {{Deterministic{0.0}, std::nullopt},
                    {z2, CoinRef{1, 2, p}},
                    {z3, CoinRef{1, 3, p}}};
    const auto bot = EntryExpression::bottom();
    m.A = {{EntryExpression::poly({{0}}), bot, bot, bot},
           {EntryExpression::poly({{0, 1}}), EntryExpression::poly({{1}}), bot, bot},
           {EntryExpression::poly({{0, 2}}), bot, EntryExpression::poly({{2}}), bot},
           {EntryExpression::poly({{0, 1}, {0, 2}}), EntryExpression::poly({{1}}),
            EntryExpression::poly({{2}}), EntryExpression::zero()}};
    m.B = {EntryExpression::poly({{0}}), EntryExpression::poly({{0, 1}}),
           EntryExpression::poly({{0, 2}}), EntryExpression::poly({{0, 1}, {0, 2}})};
    m.arrivals = arrivals;
    return m;
}

struct ModelFacts {
    double eta = 0.0;
    double theta_star = 0.0;
    std::string binding;
    int n_classes = 0;
};

/// Closed-form reference facts for the exponential/Poisson parameterizations
/// used by the bundled configs and the self test.
inline ModelFacts facts_single_server(double mu, double lambda) {
    return {mu, mu - lambda, "class", 1};
}

inline ModelFacts facts_tandem(double mu1, double mu2, double lambda) {
    const double mn = mu1 < mu2 ? mu1 : mu2;
    return {mn, mn - lambda, "class", 2};
}

inline ModelFacts facts_tandem_identical(double mu, double lambda) {
    const double eta = 0.5 * mu;
    const double cls = mu - lambda;
    if (eta <= cls) return {eta, eta, "eta", 2};
    return {eta, cls, "class", 2};
}

inline ModelFacts facts_fork_join(double mu1, double mu2, double mu3, double lambda) {
    const double mn = std::min(mu1, std::min(mu2, mu3));
    return {mn, mn - lambda, "class", 4};
}

inline ModelFacts facts_resequencing(double mu2, double mu3, double lambda, double p) {
    const double eta = std::min(mu2, mu3);
    const double th = std::min(mu2 - lambda * p, mu3 - lambda * (1.0 - p));
    return {eta, th, "class", 4};
}

}  // namespace maxplus
