#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "maxplus/compiled.hpp"
#include "maxplus/model.hpp"
#include "maxplus/moments.hpp"

namespace maxplus {

/// Support digraph of A: edge i -> j iff A[j][i] is not bottom, so a path
/// i -> j means coordinate j can feel coordinate i through products of
/// realized matrices.
struct Digraph {
    int n = 0;
    std::vector<std::vector<bool>> edge;  // edge[i][j]
};

inline Digraph build_graph(const NetworkModel& m) {
    Digraph g;
    g.n = m.s;
    g.edge.assign(m.s, std::vector<bool>(m.s, false));
    for (int i = 0; i < m.s; ++i)
        for (int j = 0; j < m.s; ++j)
            if (m.A[i][j].kind != EntryKind::neg_inf) g.edge[j][i] = true;
    return g;
}

struct StructureReport {
    std::vector<std::vector<int>> classes;  // communication classes, topological order
    std::vector<int> class_of;              // coordinate -> class index
    std::vector<std::vector<bool>> order;   // order[a][b]: class a reaches class b (reflexive)
    std::vector<int> permutation;           // permutation[new_pos] = old coordinate
    Digraph graph;
};

namespace detail {

/// Iterative Tarjan; returns class_of with arbitrary class numbering.
inline int scc(const Digraph& g, std::vector<int>& class_of) {
    const int n = g.n;
    std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0), stack, call_v, call_w;
    class_of.assign(n, -1);
    int next_index = 0, n_classes = 0;
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call_v.push_back(root);
        call_w.push_back(0);
        while (!call_v.empty()) {
            const int v = call_v.back();
            int& w = call_w.back();
            if (w == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            bool descended = false;
            while (w < n) {
                const int u = w++;
                if (!g.edge[v][u]) continue;
                if (index[u] == -1) {
                    call_v.push_back(u);
                    call_w.push_back(0);
                    descended = true;
                    break;
                }
                if (on_stack[u]) low[v] = std::min(low[v], index[u]);
            }
            if (descended) continue;
            if (low[v] == index[v]) {
                while (true) {
                    const int u = stack.back();
                    stack.pop_back();
                    on_stack[u] = 0;
                    class_of[u] = n_classes;
                    if (u == v) break;
                }
                ++n_classes;
            }
            call_v.pop_back();
            call_w.pop_back();
            if (!call_v.empty()) {
                const int parent = call_v.back();
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return n_classes;
}

}  // namespace detail

/// Communication classes of the support digraph plus a permutation that makes
/// every realized A lower block triangular. Classes are topologically ordered
/// (feeders first), ties broken by smallest member coordinate.
inline StructureReport analyze_structure(const NetworkModel& m) {
    StructureReport rep;
    rep.graph = build_graph(m);
    const int n = rep.graph.n;

    std::vector<int> raw_class;
    const int nc = detail::scc(rep.graph, raw_class);

    std::vector<std::set<int>> succ(nc);
    std::vector<int> indeg(nc, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (rep.graph.edge[i][j] && raw_class[i] != raw_class[j])
                if (succ[raw_class[i]].insert(raw_class[j]).second) ++indeg[raw_class[j]];

    std::vector<int> min_coord(nc, n);
    for (int i = 0; i < n; ++i) min_coord[raw_class[i]] = std::min(min_coord[raw_class[i]], i);

    std::set<std::pair<int, int>> ready;  // (min coordinate, raw class)
    for (int c = 0; c < nc; ++c)
        if (indeg[c] == 0) ready.insert({min_coord[c], c});
    std::vector<int> topo;  // raw class ids in topological order
    while (!ready.empty()) {
        const int c = ready.begin()->second;
        ready.erase(ready.begin());
        topo.push_back(c);
        for (int u : succ[c])
            if (--indeg[u] == 0) ready.insert({min_coord[u], u});
    }

    std::vector<int> rank(nc);
    for (int r = 0; r < nc; ++r) rank[topo[r]] = r;
    rep.class_of.assign(n, -1);
    rep.classes.assign(nc, {});
    for (int i = 0; i < n; ++i) {
        rep.class_of[i] = rank[raw_class[i]];
        rep.classes[rank[raw_class[i]]].push_back(i);
    }
    for (auto& cls : rep.classes) std::sort(cls.begin(), cls.end());

    rep.permutation.clear();
    for (const auto& cls : rep.classes)
        rep.permutation.insert(rep.permutation.end(), cls.begin(), cls.end());

    rep.order.assign(nc, std::vector<bool>(nc, false));
    for (int a = 0; a < nc; ++a) rep.order[a][a] = true;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (rep.graph.edge[i][j]) rep.order[rep.class_of[i]][rep.class_of[j]] = true;
    for (int k = 0; k < nc; ++k)
        for (int a = 0; a < nc; ++a)
            if (rep.order[a][k])
                for (int b = 0; b < nc; ++b)
                    if (rep.order[k][b]) rep.order[a][b] = true;

    return rep;
}

// --- assumption checks --------------------------------------------------------

namespace detail {

using TermSet = std::set<std::vector<int>>;

inline bool multiset_contains(const std::vector<int>& big, const std::vector<int>& small) {
    size_t bi = 0;
    for (int v : small) {
        while (bi < big.size() && big[bi] < v) ++bi;
        if (bi == big.size() || big[bi] != v) return false;
        ++bi;
    }
    return true;
}

/// Drops terms dominated by another term (componentwise multiset inclusion;
/// sound because services are nonnegative).
inline TermSet normalize_terms(TermSet s) {
    TermSet out;
    for (const auto& t : s) {
        bool dominated = false;
        for (const auto& u : s)
            if (u != t && multiset_contains(u, t)) {
                dominated = true;
                break;
            }
        if (!dominated) out.insert(t);
    }
    return out;
}

/// Components that are almost surely zero contribute nothing to a term.
inline std::vector<bool> zero_components(const NetworkModel& m) {
    std::vector<bool> z(m.components.size(), false);
    for (size_t k = 0; k < m.components.size(); ++k) {
        const auto* d = std::get_if<Deterministic>(&m.components[k].law);
        z[k] = d && d->value == 0.0;
    }
    return z;
}

inline TermSet entry_terms(const EntryExpression& e, const std::vector<bool>& strip) {
    if (e.kind == EntryKind::neg_inf) return {};
    if (e.kind == EntryKind::zero) return {std::vector<int>{}};
    TermSet out;
    for (const auto& t : e.terms) {
        std::vector<int> kept;
        for (int k : t)
            if (!strip[static_cast<size_t>(k)]) kept.push_back(k);
        out.insert(std::move(kept));
    }
    return out;
}

}  // namespace detail

struct AssumptionReport {
    bool st_ok = true;
    std::string st_witness;
    bool sp_ok = true;
    bool sp_symbolic = true;  // true if (SP) was settled by expression algebra
    std::string sp_witness;
    bool lt_ok = true;
    double eta = kInf;

    bool ok() const { return st_ok && sp_ok && lt_ok; }
};

/// Checks (ST) non-bottom diagonal, (SP) A (x) 0 = B (+) 0 (symbolically when
/// the expressions settle it, otherwise by exact comparison on sampled draws),
/// and (LT) eta > 0.
inline AssumptionReport check_assumptions(const NetworkModel& m, int samples = 1000,
                                          uint64_t seed = 1) {
    AssumptionReport rep;
    for (int i = 0; i < m.s; ++i)
        if (m.A[i][i].kind == EntryKind::neg_inf) {
            rep.st_ok = false;
            rep.st_witness = "A[" + std::to_string(i + 1) + "][" + std::to_string(i + 1) +
                             "] is -inf";
            break;
        }

    bool symbolic_ok = true;
    const std::vector<bool> strip = detail::zero_components(m);
    for (int i = 0; i < m.s && symbolic_ok; ++i) {
        detail::TermSet lhs;
        for (int j = 0; j < m.s; ++j) {
            auto tj = detail::entry_terms(m.A[i][j], strip);
            lhs.insert(tj.begin(), tj.end());
        }
        detail::TermSet rhs = detail::entry_terms(m.B[i], strip);
        rhs.insert(std::vector<int>{});
        lhs.insert(std::vector<int>{});  // services are >= 0, so A (x) 0 >= 0 rowwise
        symbolic_ok = detail::normalize_terms(lhs) == detail::normalize_terms(rhs);
        if (!symbolic_ok)
            rep.sp_witness = "row " + std::to_string(i + 1) + ": term sets of (A (x) 0) and" +
                             " (B (+) 0) differ";
    }
    if (symbolic_ok) {
        rep.sp_ok = true;
        rep.sp_symbolic = true;
        rep.sp_witness.clear();
    } else {
        rep.sp_symbolic = false;
        rep.sp_ok = true;
        CompiledModel cm(m);
        Stream rng = Stream::keyed(seed, 0x5350);
        for (int it = 0; it < samples && rep.sp_ok; ++it) {
            cm.draw(rng);
            for (int i = 0; i < m.s; ++i) {
                double lhs = CompiledModel::neg_inf();
                for (int j = 0; j < m.s; ++j) lhs = std::max(lhs, cm.a_entry(i, j));
                const double rhs = std::max(cm.b_entry(i), 0.0);
                if (lhs != rhs) {
                    rep.sp_ok = false;
                    rep.sp_witness = "draw " + std::to_string(it) + ", row " +
                                     std::to_string(i + 1) + ": (A (x) 0) = " +
                                     std::to_string(lhs) + " but (B (+) 0) = " +
                                     std::to_string(rhs);
                    break;
                }
            }
        }
    }

    rep.eta = eta_of(m);
    rep.lt_ok = rep.eta > 0;
    return rep;
}

}  // namespace maxplus
