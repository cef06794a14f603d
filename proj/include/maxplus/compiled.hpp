#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "maxplus/model.hpp"
#include "maxplus/rng.hpp"

namespace maxplus {

/// Flattened model for simulation loops. Distinct matrix entries sharing an
/// expression are evaluated once per step; inside the loop extended reals are
/// plain doubles with IEEE -inf (no +inf ever enters, so no NaN can form).
/// The draw order is fixed: coins ascending by id, then components ascending;
/// deterministic components and switched-off coin components consume no draws.
class CompiledModel {
  public:
    explicit CompiledModel(const NetworkModel& m) : s_(m.s), K_(static_cast<int>(m.components.size())) {
        std::map<int, int> coin_slot;
        for (const auto& c : m.components)
            if (c.coin && !coin_slot.count(c.coin->id)) {
                int slot = static_cast<int>(coin_slot.size());
                coin_slot[c.coin->id] = slot;
            }
        coin_p_.resize(coin_slot.size());
        coin_of_.assign(K_, -1);
        branch_of_.assign(K_, 0);
        laws_.reserve(K_);
        for (int k = 0; k < K_; ++k) {
            const auto& c = m.components[k];
            laws_.push_back(FastLaw::of(c.law));
            if (c.coin) {
                coin_of_[k] = coin_slot[c.coin->id];
                branch_of_[k] = c.coin->branch;
                coin_p_[coin_of_[k]] = c.coin->p;
            }
        }

        // coin-free deterministic members fold into a per-term constant
        auto foldable = [&](int k) { return !laws_[k].random() && coin_of_[k] < 0; };
        std::map<std::vector<std::vector<int>>, int> seen;
        auto intern = [&](const EntryExpression& e) -> int {
            if (e.kind == EntryKind::neg_inf) return -1;
            std::vector<std::vector<int>> key =
                e.kind == EntryKind::zero ? std::vector<std::vector<int>>{{}} : e.terms;
            auto it = seen.find(key);
            if (it != seen.end()) return it->second;
            const int id = static_cast<int>(expr_off_.size()) - 1;
            for (const auto& term : key) {
                double base = 0.0;
                for (int c : term) {
                    if (foldable(c))
                        base += laws_[c].p0;
                    else
                        members_.push_back(c);
                }
                term_base_.push_back(base);
                term_off_.push_back(static_cast<int>(members_.size()));
            }
            expr_off_.push_back(static_cast<int>(term_off_.size()) - 1);
            seen[key] = id;
            return id;
        };

        expr_off_.push_back(0);
        term_off_.push_back(0);
        acol_off_.assign(s_ + 1, 0);
        for (int j = 0; j < s_; ++j) {
            for (int i = 0; i < s_; ++i) {
                const int e = intern(m.A[i][j]);
                if (e >= 0) {
                    acol_row_.push_back(i);
                    acol_expr_.push_back(e);
                }
            }
            acol_off_[j + 1] = static_cast<int>(acol_row_.size());
        }
        b_expr_.assign(s_, -1);
        for (int i = 0; i < s_; ++i) b_expr_[i] = intern(m.B[i]);

        sigma_.assign(K_, 0.0);
        coin2_.assign(coin_p_.size(), 0);
        val_.assign(n_exprs(), 0.0);
    }

    int s() const { return s_; }
    int n_components() const { return K_; }
    int n_exprs() const { return static_cast<int>(expr_off_.size()) - 1; }

    static constexpr double neg_inf() { return -std::numeric_limits<double>::infinity(); }

    /// Draws one step's service vector into sigma_ and evaluates every
    /// distinct entry expression into val_.
    void draw(Stream& rng) {
        for (size_t c = 0; c < coin_p_.size(); ++c) coin2_[c] = rng.next_unit() < coin_p_[c];
        for (int k = 0; k < K_; ++k) {
            const int c = coin_of_[k];
            if (c >= 0 && coin2_[c] != (branch_of_[k] == 2)) {
                sigma_[k] = 0.0;
                continue;
            }
            sigma_[k] = laws_[k].draw(rng);
        }
        const int ne = n_exprs();
        for (int e = 0; e < ne; ++e) {
            double best = neg_inf();
            for (int t = expr_off_[e]; t < expr_off_[e + 1]; ++t) {
                double acc = term_base_[t];
                for (int q = term_off_[t]; q < term_off_[t + 1]; ++q) acc += sigma_[members_[q]];
                if (acc > best) best = acc;
            }
            val_[e] = best;
        }
    }

    double a_entry(int i, int j) const {
        for (int q = acol_off_[j]; q < acol_off_[j + 1]; ++q)
            if (acol_row_[q] == i) return val_[acol_expr_[q]];
        return neg_inf();
    }
    double b_entry(int i) const { return b_expr_[i] >= 0 ? val_[b_expr_[i]] : neg_inf(); }

    /// row' = row (x) A for the current draw, writing into `out` (size s).
    void fold_row(const double* row, double* out) const {
        for (int j = 0; j < s_; ++j) {
            double best = neg_inf();
            for (int q = acol_off_[j]; q < acol_off_[j + 1]; ++q) {
                const double v = row[acol_row_[q]] + val_[acol_expr_[q]];
                if (v > best) best = v;
            }
            out[j] = best;
        }
    }

    /// col' = A (x) col for the current draw, writing into `out` (size s).
    void fold_col(const double* col, double* out) const {
        for (int i = 0; i < s_; ++i) out[i] = neg_inf();
        for (int j = 0; j < s_; ++j) {
            const double c = col[j];
            if (c == neg_inf()) continue;
            for (int q = acol_off_[j]; q < acol_off_[j + 1]; ++q) {
                const double v = c + val_[acol_expr_[q]];
                if (v > out[acol_row_[q]]) out[acol_row_[q]] = v;
            }
        }
    }

    /// max_i (row[i] + B[i]) for the current draw.
    double dot_b(const double* row) const {
        double best = neg_inf();
        for (int i = 0; i < s_; ++i)
            if (b_expr_[i] >= 0) {
                const double v = row[i] + val_[b_expr_[i]];
                if (v > best) best = v;
            }
        return best;
    }

    /// col' = A (x) col (+) B for the current draw.
    void fold_col_with_b(const double* col, double* out) const {
        fold_col(col, out);
        for (int i = 0; i < s_; ++i)
            if (b_expr_[i] >= 0 && val_[b_expr_[i]] > out[i]) out[i] = val_[b_expr_[i]];
    }

    void write_b(double* out) const {
        for (int i = 0; i < s_; ++i) out[i] = b_entry(i);
    }

    const std::vector<double>& sigma() const { return sigma_; }

  private:
    int s_, K_;
    std::vector<double> coin_p_;
    std::vector<int> coin_of_, branch_of_;
    std::vector<FastLaw> laws_;
    std::vector<int> expr_off_, term_off_, members_;
    std::vector<double> term_base_;
    std::vector<int> acol_off_, acol_row_, acol_expr_;
    std::vector<int> b_expr_;
    // per-draw workspace
    std::vector<double> sigma_;
    std::vector<uint8_t> coin2_;
    std::vector<double> val_;
};

struct StepSample {
    MaxPlusMatrix A;
    MaxPlusMatrix B;  // s x 1
};

/// One i.i.d. (A_n, B_n) realization in matrix form.
inline StepSample sample_step(const NetworkModel& m, Stream& rng) {
    CompiledModel cm(m);
    cm.draw(rng);
    StepSample out{MaxPlusMatrix(m.s, m.s), MaxPlusMatrix(m.s, 1)};
    for (int i = 0; i < m.s; ++i) {
        for (int j = 0; j < m.s; ++j) {
            const double v = cm.a_entry(i, j);
            if (v != CompiledModel::neg_inf()) out.A.at(i, j) = MaxPlusValue::of(v);
        }
        const double b = cm.b_entry(i);
        if (b != CompiledModel::neg_inf()) out.B.at(i, 0) = MaxPlusValue::of(b);
    }
    return out;
}

}  // namespace maxplus
