#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxplus {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Scalar of the (max,plus) semiring: a finite real or the absorbing
/// bottom element. Bottom is a distinguished state, not an IEEE encoding,
/// so oplus/otimes never touch floating-point infinities.
class MaxPlusValue {
  public:
    constexpr MaxPlusValue() : finite_(false), v_(0.0) {}

    static constexpr MaxPlusValue bottom() { return MaxPlusValue(); }
    static constexpr MaxPlusValue of(double x) { return MaxPlusValue(true, x); }
    /// Multiplicative identity (the real 0).
    static constexpr MaxPlusValue one() { return of(0.0); }

    constexpr bool is_bottom() const { return !finite_; }
    constexpr bool is_finite() const { return finite_; }

    constexpr double value() const {
        assert(finite_ && "value() on bottom");
        return v_;
    }

    /// max; bottom is neutral.
    friend constexpr MaxPlusValue oplus(MaxPlusValue a, MaxPlusValue b) {
        if (a.is_bottom()) return b;
        if (b.is_bottom()) return a;
        return of(a.v_ > b.v_ ? a.v_ : b.v_);
    }

    /// plus; bottom is absorbing.
    friend constexpr MaxPlusValue otimes(MaxPlusValue a, MaxPlusValue b) {
        if (a.is_bottom() || b.is_bottom()) return bottom();
        return of(a.v_ + b.v_);
    }

    friend constexpr bool operator==(MaxPlusValue a, MaxPlusValue b) {
        if (a.finite_ != b.finite_) return false;
        return !a.finite_ || a.v_ == b.v_;
    }
    friend constexpr bool operator!=(MaxPlusValue a, MaxPlusValue b) { return !(a == b); }
    /// Total order with bottom as the least element.
    friend constexpr bool operator<(MaxPlusValue a, MaxPlusValue b) {
        if (a.is_bottom()) return b.is_finite();
        if (b.is_bottom()) return false;
        return a.v_ < b.v_;
    }
    friend constexpr bool operator<=(MaxPlusValue a, MaxPlusValue b) { return a < b || a == b; }

  private:
    constexpr MaxPlusValue(bool finite, double v) : finite_(finite), v_(v) {}

    bool finite_;
    double v_;
};

/// Dense matrix over the (max,plus) semiring. Column vectors are s x 1.
class MaxPlusMatrix {
  public:
    MaxPlusMatrix(int rows, int cols)
        : rows_(rows), cols_(cols), e_(static_cast<size_t>(rows) * cols, MaxPlusValue::bottom()) {
        if (rows < 1 || cols < 1) throw DimensionError("matrix dimensions must be positive");
    }

    /// E: one() on the diagonal, bottom elsewhere.
    static MaxPlusMatrix identity(int n) {
        MaxPlusMatrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = MaxPlusValue::one();
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    MaxPlusValue& at(int i, int j) { return e_[static_cast<size_t>(i) * cols_ + j]; }
    const MaxPlusValue& at(int i, int j) const { return e_[static_cast<size_t>(i) * cols_ + j]; }

    friend MaxPlusMatrix oplus(const MaxPlusMatrix& a, const MaxPlusMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionError("oplus: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
        MaxPlusMatrix r(a.rows_, a.cols_);
        for (size_t k = 0; k < a.e_.size(); ++k) r.e_[k] = oplus(a.e_[k], b.e_[k]);
        return r;
    }

    friend MaxPlusMatrix otimes(const MaxPlusMatrix& a, const MaxPlusMatrix& b) {
        if (a.cols_ != b.rows_)
            throw DimensionError("otimes: inner dimension mismatch " + a.shape_str() + " vs " +
                                 b.shape_str());
        MaxPlusMatrix r(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int j = 0; j < b.cols_; ++j) {
                MaxPlusValue acc = MaxPlusValue::bottom();
                for (int k = 0; k < a.cols_; ++k)
                    acc = oplus(acc, otimes(a.at(i, k), b.at(k, j)));
                r.at(i, j) = acc;
            }
        return r;
    }

    friend bool operator==(const MaxPlusMatrix& a, const MaxPlusMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.e_ == b.e_;
    }
    friend bool operator!=(const MaxPlusMatrix& a, const MaxPlusMatrix& b) { return !(a == b); }

  private:
    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    int rows_, cols_;
    std::vector<MaxPlusValue> e_;
};

/// Descending-index product A_to (x) A_{to-1} (x) ... (x) A_from over the
/// 1-based window [from, to] of `mats` (mats[k-1] is A_k). Empty windows
/// (from > to) give E.
inline MaxPlusMatrix product_range(const std::vector<MaxPlusMatrix>& mats, int from, int to) {
    if (mats.empty()) throw DimensionError("product_range: empty matrix sequence");
    const int n = mats.front().rows();
    if (from > to) return MaxPlusMatrix::identity(n);
    if (from < 1 || to > static_cast<int>(mats.size()))
        throw DimensionError("product_range: window out of bounds");
    MaxPlusMatrix acc = mats[static_cast<size_t>(to) - 1];
    for (int k = to - 1; k >= from; --k) acc = otimes(acc, mats[static_cast<size_t>(k) - 1]);
    return acc;
}

}  // namespace maxplus
