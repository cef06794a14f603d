#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxplus/distributions.hpp"
#include "maxplus/semiring.hpp"

namespace maxplus {

/// Validation failure; `diagnostics` lists every violation with a JSON path.
struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> diags)
        : std::runtime_error(join(diags)), diagnostics(std::move(diags)) {}

    std::vector<std::string> diagnostics;

  private:
    static std::string join(const std::vector<std::string>& d) {
        std::string s = "invalid model:";
        for (const auto& e : d) s += "\n  " + e;
        return s;
    }
};

enum class EntryKind { neg_inf, zero, poly };

/// A matrix entry: bottom, the constant 0, or a max of terms, each term a
/// sum of component variables (stored as 0-based component indices, sorted,
/// repeats meaning multiplicity).
struct EntryExpression {
    EntryKind kind = EntryKind::neg_inf;
    std::vector<std::vector<int>> terms;

    static EntryExpression bottom() { return {EntryKind::neg_inf, {}}; }
    static EntryExpression zero() { return {EntryKind::zero, {}}; }
    static EntryExpression poly(std::vector<std::vector<int>> t) {
        for (auto& term : t) std::sort(term.begin(), term.end());
        return {EntryKind::poly, std::move(t)};
    }
};

struct CoinRef {
    int id;      // coin identifier, shared refs mean the same flip
    int branch;  // 2 or 3: the routing outcome that switches this component on
    double p;    // P(outcome 2)
};

struct ComponentSpec {
    Law law;
    std::optional<CoinRef> coin;
};

struct NetworkModel {
    int s = 0;
    std::vector<ComponentSpec> components;  // component k has index k-1 here
    std::vector<std::vector<EntryExpression>> A;
    std::vector<EntryExpression> B;
    Law arrivals = Exponential{1.0};
};

inline double eval_term(const std::vector<int>& term, const std::vector<double>& sigma) {
    double s = 0.0;
    for (int k : term) s += sigma[static_cast<size_t>(k)];
    return s;
}

inline MaxPlusValue eval_entry(const EntryExpression& e, const std::vector<double>& sigma) {
    switch (e.kind) {
        case EntryKind::neg_inf:
            return MaxPlusValue::bottom();
        case EntryKind::zero:
            return MaxPlusValue::one();
        default: {
            double m = eval_term(e.terms.front(), sigma);
            for (size_t t = 1; t < e.terms.size(); ++t)
                m = std::max(m, eval_term(e.terms[t], sigma));
            return MaxPlusValue::of(m);
        }
    }
}

// --- JSON (de)serialization -------------------------------------------------

namespace detail {

inline std::string dist_type_name(const Law& law) {
    if (std::holds_alternative<Deterministic>(law)) return "deterministic";
    if (std::holds_alternative<Exponential>(law)) return "exponential";
    return "uniform";
}

inline nlohmann::json law_to_json(const Law& law) {
    nlohmann::json j;
    j["type"] = dist_type_name(law);
    if (const auto* d = std::get_if<Deterministic>(&law)) j["value"] = d->value;
    if (const auto* e = std::get_if<Exponential>(&law)) j["rate"] = e->rate;
    if (const auto* u = std::get_if<Uniform>(&law)) {
        j["lo"] = u->lo;
        j["hi"] = u->hi;
    }
    return j;
}

inline Law law_from_json(const nlohmann::json& j, const std::string& path,
                         std::vector<std::string>& errs) {
    auto num = [&](const char* key, double fallback) -> double {
        if (!j.contains(key) || !j[key].is_number()) {
            errs.push_back(path + "." + key + ": missing or non-numeric");
            return fallback;
        }
        return j[key].get<double>();
    };
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        errs.push_back(path + ": expected {\"type\": ...}");
        return Deterministic{1.0};
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "deterministic") {
        double v = num("value", 1.0);
        if (!(v >= 0)) errs.push_back(path + ".value: must be >= 0");
        return Deterministic{v};
    }
    if (type == "exponential") {
        double r = num("rate", 1.0);
        if (!(r > 0)) errs.push_back(path + ".rate: must be > 0");
        return Exponential{r};
    }
    if (type == "uniform") {
        double lo = num("lo", 0.0), hi = num("hi", 1.0);
        if (!(lo >= 0)) errs.push_back(path + ".lo: must be >= 0");
        if (!(hi >= lo)) errs.push_back(path + ".hi: must be >= lo");
        return Uniform{lo, hi};
    }
    errs.push_back(path + ".type: unknown distribution '" + type + "'");
    return Deterministic{1.0};
}

inline nlohmann::json entry_to_json(const EntryExpression& e) {
    if (e.kind == EntryKind::neg_inf) return "-inf";
    if (e.kind == EntryKind::zero) return "0";
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : e.terms) {
        nlohmann::json term = nlohmann::json::array();
        for (int k : t) term.push_back(k + 1);
        terms.push_back(term);
    }
    return nlohmann::json{{"max", terms}};
}

inline EntryExpression entry_from_json(const nlohmann::json& j, int n_components,
                                       const std::string& path, std::vector<std::string>& errs) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "-inf") return EntryExpression::bottom();
        if (s == "0") return EntryExpression::zero();
        errs.push_back(path + ": unknown entry literal '" + s + "'");
        return EntryExpression::bottom();
    }
    if (!j.is_object() || !j.contains("max") || !j["max"].is_array() || j["max"].empty()) {
        errs.push_back(path + ": expected \"-inf\", \"0\", or {\"max\": [[...], ...]}");
        return EntryExpression::bottom();
    }
    std::vector<std::vector<int>> terms;
    for (size_t t = 0; t < j["max"].size(); ++t) {
        const auto& jt = j["max"][t];
        const std::string tpath = path + ".max[" + std::to_string(t) + "]";
        if (!jt.is_array() || jt.empty()) {
            errs.push_back(tpath + ": term must be a non-empty array of component ids");
            continue;
        }
        std::vector<int> term;
        for (const auto& jk : jt) {
            if (!jk.is_number_integer()) {
                errs.push_back(tpath + ": component ids must be integers");
                continue;
            }
            const int id = jk.get<int>();
            if (id < 1 || id > n_components) {
                errs.push_back(tpath + ": component id " + std::to_string(id) +
                               " out of range 1.." + std::to_string(n_components));
                continue;
            }
            term.push_back(id - 1);
        }
        if (!term.empty()) terms.push_back(std::move(term));
    }
    if (terms.empty()) return EntryExpression::bottom();
    return EntryExpression::poly(std::move(terms));
}

}  // namespace detail

inline nlohmann::json model_to_json(const NetworkModel& m) {
    nlohmann::json j;
    j["s"] = m.s;
    j["components"] = nlohmann::json::array();
    for (size_t k = 0; k < m.components.size(); ++k) {
        nlohmann::json c;
        c["id"] = static_cast<int>(k) + 1;
        c["dist"] = detail::law_to_json(m.components[k].law);
        if (m.components[k].coin) {
            c["coin"] = nlohmann::json{{"id", m.components[k].coin->id},
                                       {"branch", m.components[k].coin->branch},
                                       {"p", m.components[k].coin->p}};
        }
        j["components"].push_back(c);
    }
    j["A"] = nlohmann::json::array();
    for (int i = 0; i < m.s; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int jj = 0; jj < m.s; ++jj) row.push_back(detail::entry_to_json(m.A[i][jj]));
        j["A"].push_back(row);
    }
    j["B"] = nlohmann::json::array();
    for (int i = 0; i < m.s; ++i) j["B"].push_back(detail::entry_to_json(m.B[i]));
    j["arrivals"] = detail::law_to_json(m.arrivals);
    return j;
}

/// Parse and validate a model description. Throws ConfigError carrying the
/// full list of violations.
inline NetworkModel parse_model_json(const nlohmann::json& j) {
    std::vector<std::string> errs;
    NetworkModel m;

    if (!j.is_object()) throw ConfigError({"$: expected an object"});

    if (!j.contains("s") || !j["s"].is_number_integer() || j["s"].get<int>() < 1)
        errs.push_back("s: must be an integer >= 1");
    else
        m.s = j["s"].get<int>();

    int K = 0;
    if (!j.contains("components") || !j["components"].is_array() || j["components"].empty()) {
        errs.push_back("components: must be a non-empty array");
    } else {
        K = static_cast<int>(j["components"].size());
        m.components.resize(K);
        std::vector<bool> seen(K, false);
        std::map<int, double> coin_p;
        for (int idx = 0; idx < K; ++idx) {
            const auto& jc = j["components"][idx];
            const std::string path = "components[" + std::to_string(idx) + "]";
            if (!jc.is_object() || !jc.contains("id") || !jc["id"].is_number_integer()) {
                errs.push_back(path + ".id: missing integer id");
                continue;
            }
            const int id = jc["id"].get<int>();
            if (id < 1 || id > K) {
                errs.push_back(path + ".id: ids must be exactly 1.." + std::to_string(K));
                continue;
            }
            if (seen[id - 1]) {
                errs.push_back(path + ".id: duplicate id " + std::to_string(id));
                continue;
            }
            seen[id - 1] = true;
            ComponentSpec& spec = m.components[id - 1];
            if (!jc.contains("dist")) {
                errs.push_back(path + ".dist: missing");
            } else {
                spec.law = detail::law_from_json(jc["dist"], path + ".dist", errs);
            }
            if (jc.contains("coin")) {
                const auto& jq = jc["coin"];
                CoinRef ref{0, 2, 0.5};
                if (!jq.is_object() || !jq.contains("id") || !jq["id"].is_number_integer())
                    errs.push_back(path + ".coin.id: missing integer id");
                else
                    ref.id = jq["id"].get<int>();
                if (!jq.contains("branch") || !jq["branch"].is_number_integer() ||
                    (jq["branch"].get<int>() != 2 && jq["branch"].get<int>() != 3))
                    errs.push_back(path + ".coin.branch: must be 2 or 3");
                else
                    ref.branch = jq["branch"].get<int>();
                if (!jq.contains("p") || !jq["p"].is_number() || jq["p"].get<double>() < 0 ||
                    jq["p"].get<double>() > 1)
                    errs.push_back(path + ".coin.p: must be in [0,1]");
                else
                    ref.p = jq["p"].get<double>();
                auto it = coin_p.find(ref.id);
                if (it == coin_p.end())
                    coin_p[ref.id] = ref.p;
                else if (it->second != ref.p)
                    errs.push_back(path + ".coin.p: inconsistent with earlier reference to coin " +
                                   std::to_string(ref.id));
                spec.coin = ref;
            }
        }
        for (int k = 0; k < K; ++k)
            if (!seen[k]) errs.push_back("components: id " + std::to_string(k + 1) + " missing");
    }

    if (m.s >= 1 && K >= 1) {
        auto parse_row = [&](const nlohmann::json& jr, const std::string& path,
                             std::vector<EntryExpression>& out) {
            out.assign(m.s, EntryExpression::bottom());
            if (!jr.is_array() || static_cast<int>(jr.size()) != m.s) {
                errs.push_back(path + ": expected an array of length " + std::to_string(m.s));
                return;
            }
            for (int c = 0; c < m.s; ++c)
                out[c] = detail::entry_from_json(jr[c], K, path + "[" + std::to_string(c) + "]",
                                                 errs);
        };
        if (!j.contains("A") || !j["A"].is_array() || static_cast<int>(j["A"].size()) != m.s) {
            errs.push_back("A: expected an array of " + std::to_string(m.s) + " rows");
        } else {
            m.A.resize(m.s);
            for (int i = 0; i < m.s; ++i)
                parse_row(j["A"][i], "A[" + std::to_string(i) + "]", m.A[i]);
            for (int i = 0; i < m.s && static_cast<int>(m.A.size()) == m.s; ++i)
                if (static_cast<int>(m.A[i].size()) == m.s &&
                    m.A[i][i].kind == EntryKind::neg_inf)
                    errs.push_back("(ST) A[" + std::to_string(i) + "][" + std::to_string(i) +
                                   "]: diagonal entries must not be -inf");
        }
        if (!j.contains("B")) {
            errs.push_back("B: missing");
        } else {
            parse_row(j["B"], "B", m.B);
        }
    }

    if (!j.contains("arrivals")) {
        errs.push_back("arrivals: missing");
    } else {
        m.arrivals = detail::law_from_json(j["arrivals"], "arrivals", errs);
        if (errs.empty() && !(mean(m.arrivals) > 0))
            errs.push_back("arrivals: mean interarrival time must be positive");
    }

    if (!errs.empty()) throw ConfigError(std::move(errs));
    return m;
}

inline NetworkModel parse_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("$: JSON parse error: ") + e.what()});
    }
    return parse_model_json(j);
}

// --- unit max degree ---------------------------------------------------------

struct DegreeReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Checks the three structural conditions under which the network-level
/// threshold eta provably does not bind: (1) no term uses a component twice,
/// (2) no coin is shared across distinct components, (3) every component
/// appears alone as some diagonal entry of A.
inline DegreeReport check_unit_max_degree(const NetworkModel& m) {
    DegreeReport rep;
    auto flag = [&](std::string v) {
        rep.ok = false;
        rep.violations.push_back(std::move(v));
    };

    auto scan_entry = [&](const EntryExpression& e, const std::string& where) {
        if (e.kind != EntryKind::poly) return;
        for (size_t t = 0; t < e.terms.size(); ++t) {
            const auto& term = e.terms[t];
            for (size_t a = 1; a < term.size(); ++a)
                if (term[a] == term[a - 1]) {
                    flag(where + " term " + std::to_string(t + 1) + " repeats component " +
                         std::to_string(term[a] + 1));
                    break;
                }
        }
    };
    for (int i = 0; i < m.s; ++i)
        for (int jj = 0; jj < m.s; ++jj)
            scan_entry(m.A[i][jj], "A[" + std::to_string(i + 1) + "][" + std::to_string(jj + 1) +
                                       "]");
    for (int i = 0; i < m.s; ++i) scan_entry(m.B[i], "B[" + std::to_string(i + 1) + "]");

    std::map<int, std::set<int>> coin_users;
    for (size_t k = 0; k < m.components.size(); ++k)
        if (m.components[k].coin)
            coin_users[m.components[k].coin->id].insert(static_cast<int>(k) + 1);
    for (const auto& [cid, users] : coin_users)
        if (users.size() > 1) {
            std::string who;
            for (int u : users) who += (who.empty() ? "" : ",") + std::to_string(u);
            flag("coin " + std::to_string(cid) + " shared by components {" + who + "}");
        }

    for (size_t k = 0; k < m.components.size(); ++k) {
        bool found = false;
        for (int i = 0; i < m.s && !found; ++i) {
            const auto& e = m.A[i][i];
            found = e.kind == EntryKind::poly && e.terms.size() == 1 &&
                    e.terms[0].size() == 1 && e.terms[0][0] == static_cast<int>(k);
        }
        if (!found)
            flag("component " + std::to_string(k + 1) +
                 " never appears alone as a diagonal entry of A");
    }
    return rep;
}

}  // namespace maxplus
