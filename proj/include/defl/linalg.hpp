#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "defl/scalar.hpp"

namespace defl {

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0)) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product dimension mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        if (is_zero(a(i, k))) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a(i, k) * b(k, j);
      }
    return c;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix difference dimension mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
    return c;
  }

  std::vector<T> operator*(const std::vector<T>& v) const {
    if (v.size() != cols_) throw std::invalid_argument("matrix-vector dimension mismatch");
    std::vector<T> r(rows_, T(0));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& x : data_) m = std::max(m, magnitude(x));
    return m;
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> m(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m(i, j) = scalar_cast<U>((*this)(i, j));
    return m;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

template <class T>
using EigenMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
EigenMatrix<T> to_eigen(const Matrix<T>& m) {
  EigenMatrix<T> e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

struct RankResult {
  std::size_t rank = 0;
  std::vector<std::size_t> row_perm, col_perm;
  double tol_used = 0;
  // Smallest kept and largest dropped singular value relative to the largest
  // (float domain); 0 where there is none.
  double smallest_kept = 0, largest_dropped = 0;
};

namespace detail {

inline std::vector<std::size_t> complete_perm(std::vector<std::size_t> head, std::size_t n) {
  std::vector<bool> used(n, false);
  for (auto i : head) used[i] = true;
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) head.push_back(i);
  return head;
}

template <class T>
std::vector<double> singular_values(const Matrix<T>& m) {
  Eigen::BDCSVD<EigenMatrix<T>> svd(to_eigen(m));
  auto s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

}  // namespace detail

// Rank at relative tolerance tol, with permutations placing a well
// conditioned rank×rank block in the top-left corner.
template <class K>
RankResult numerical_rank(const Matrix<K>& m, double tol) {
  if (m.empty()) throw std::invalid_argument("rank of an empty matrix");
  RankResult res;
  res.tol_used = tol;
  if constexpr (is_exact_v<K>) {
    // Complete pivoting; largest magnitude wins, ties to the lowest index.
    Matrix<K> a = m;
    std::vector<std::size_t> rows(m.rows()), cols(m.cols());
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::size_t r = 0;
    for (; r < std::min(m.rows(), m.cols()); ++r) {
      std::size_t bi = 0, bj = 0;
      double best = 0;
      bool found = false;
      for (std::size_t j = r; j < m.cols(); ++j)
        for (std::size_t i = r; i < m.rows(); ++i) {
          const K& x = a(rows[i], cols[j]);
          if (is_zero(x)) continue;
          double mg = magnitude(x);
          if (!found || mg > best || (mg == best && (cols[j] < cols[bj] || (cols[j] == cols[bj] && rows[i] < rows[bi])))) {
            best = mg, bi = i, bj = j, found = true;
          }
        }
      if (!found) break;
      std::swap(rows[r], rows[bi]);
      std::swap(cols[r], cols[bj]);
      const K piv = a(rows[r], cols[r]);
      for (std::size_t i = r + 1; i < m.rows(); ++i) {
        K f = a(rows[i], cols[r]);
        if (is_zero(f)) continue;
        f /= piv;
        for (std::size_t j = r; j < m.cols(); ++j) a(rows[i], cols[j]) -= f * a(rows[r], cols[j]);
      }
    }
    res.rank = r;
    res.row_perm = rows;
    res.col_perm = cols;
  } else {
    auto sv = detail::singular_values(m);
    double smax = sv.empty() ? 0.0 : sv.front();
    double thresh = tol * (smax > tol ? smax : 1.0);
    std::size_t r = 0;
    while (r < sv.size() && sv[r] > thresh) ++r;
    res.rank = r;
    if (smax > 0) {
      res.smallest_kept = r ? sv[r - 1] / smax : 0.0;
      res.largest_dropped = r < sv.size() ? sv[r] / smax : 0.0;
    }
    Eigen::ColPivHouseholderQR<EigenMatrix<K>> qr(to_eigen(m));
    std::vector<std::size_t> cols;
    for (Eigen::Index j = 0; j < qr.colsPermutation().indices().size(); ++j) cols.push_back(qr.colsPermutation().indices()(j));
    std::vector<std::size_t> rows;
    if (r > 0) {
      EigenMatrix<K> sel(r, m.rows());
      for (std::size_t k = 0; k < r; ++k)
        for (std::size_t i = 0; i < m.rows(); ++i) sel(k, i) = m(i, cols[k]);
      Eigen::ColPivHouseholderQR<EigenMatrix<K>> qr2(sel);
      for (std::size_t k = 0; k < r; ++k) rows.push_back(qr2.colsPermutation().indices()(k));
    }
    cols.resize(r);
    res.row_perm = detail::complete_perm(rows, m.rows());
    res.col_perm = detail::complete_perm(cols, m.cols());
  }
  return res;
}

template <class K>
struct EchelonResult {
  Matrix<K> reduced;
  std::vector<std::size_t> pivots;
};

// Reduced row echelon form. A column becomes a pivot when some remaining row
// has an entry above tol times the largest entry of that row in the input.
template <class K>
EchelonResult<K> row_echelon(const Matrix<K>& m, double tol) {
  Matrix<K> a = m;
  std::vector<double> scale(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) scale[i] = std::max(scale[i], magnitude(m(i, j)));
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t best = r;
    double bestmag = -1;
    for (std::size_t i = r; i < m.rows(); ++i) {
      double mg = magnitude(a(i, c));
      if (is_zero(a(i, c)) || mg <= tol * scale[i]) continue;
      if (mg > bestmag) bestmag = mg, best = i;
      if constexpr (is_exact_v<K>) break;
    }
    if (bestmag < 0) continue;
    for (std::size_t j = 0; j < m.cols(); ++j) std::swap(a(r, j), a(best, j));
    std::swap(scale[r], scale[best]);
    K inv = K(1) / a(r, c);
    for (std::size_t j = c; j < m.cols(); ++j) a(r, j) *= inv;
    a(r, c) = K(1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || is_zero(a(i, c))) continue;
      K f = a(i, c);
      for (std::size_t j = c; j < m.cols(); ++j) a(i, j) -= f * a(r, j);
      a(i, c) = K(0);
    }
    pivots.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) a(i, j) = K(0);
  return {std::move(a), std::move(pivots)};
}

// Basis of {v : Mv ≈ 0}: orthonormal for floats, reduced echelon for exact.
template <class K>
std::vector<std::vector<K>> null_space(const Matrix<K>& m, double tol) {
  std::vector<std::vector<K>> basis;
  if constexpr (is_exact_v<K>) {
    auto [r, piv] = row_echelon(m, 0.0);
    std::vector<bool> is_piv(m.cols(), false);
    for (auto p : piv) is_piv[p] = true;
    for (std::size_t f = 0; f < m.cols(); ++f) {
      if (is_piv[f]) continue;
      std::vector<K> v(m.cols(), K(0));
      v[f] = K(1);
      for (std::size_t k = 0; k < piv.size(); ++k) v[piv[k]] = -r(k, f);
      basis.push_back(std::move(v));
    }
  } else {
    if (m.rows() == 0) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        std::vector<K> v(m.cols(), K(0));
        v[j] = K(1);
        basis.push_back(v);
      }
      return basis;
    }
    Eigen::BDCSVD<EigenMatrix<K>> svd(to_eigen(m), Eigen::ComputeFullV);
    auto s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    double thresh = tol * (smax > tol ? smax : 1.0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > thresh) ++r;
    const auto& V = svd.matrixV();
    for (Eigen::Index j = r; j < V.cols(); ++j) {
      std::vector<K> v(m.cols());
      for (Eigen::Index i = 0; i < V.rows(); ++i) v[i] = V(i, j);
      basis.push_back(std::move(v));
    }
  }
  return basis;
}

// Determinant. Field entries use elimination; ring entries (polynomials)
// use division-free cofactor expansion over column subsets.
template <class T>
T det(const Matrix<T>& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  if constexpr (Scalar<T>) {
    if (n == 0) return T(1);
    Matrix<T> a = m;
    T d(1);
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t p = c;
      double best = -1;
      for (std::size_t i = c; i < n; ++i) {
        if (is_zero(a(i, c))) continue;
        double mg = magnitude(a(i, c));
        if (mg > best) best = mg, p = i;
        if constexpr (is_exact_v<T>) break;
      }
      if (best < 0) return T(0);
      if (p != c) {
        for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
        d = -d;
      }
      d *= a(c, c);
      for (std::size_t i = c + 1; i < n; ++i) {
        if (is_zero(a(i, c))) continue;
        T f = a(i, c) / a(c, c);
        for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
      }
    }
    return d;
  } else {
    if (n == 0) throw std::invalid_argument("empty ring determinant needs a unit");
    if (n > 20) throw std::invalid_argument("cofactor expansion limited to 20x20");
    // minors[mask] = det of the top popcount(mask) rows restricted to mask.
    std::map<unsigned, T> cur;
    for (std::size_t j = 0; j < n; ++j) cur.emplace(1u << j, m(0, j));
    for (std::size_t i = 1; i < n; ++i) {
      std::map<unsigned, T> next;
      for (const auto& [mask, val] : cur) {
        if (val.is_zero()) continue;
        int sign_count = 0;  // set bits above column j, for the cofactor sign
        for (int j = int(n) - 1; j >= 0; --j) {
          if (mask & (1u << j)) {
            ++sign_count;
            continue;
          }
          if (m(i, j).is_zero()) continue;
          T term = val * m(i, j);
          if (sign_count % 2) term = -term;
          auto [it, fresh] = next.emplace(mask | (1u << j), term);
          if (!fresh) it->second += term;
        }
      }
      cur = std::move(next);
    }
    auto it = cur.find((1u << n) - 1);
    if (it == cur.end()) return T(m(0, 0).nvars());
    return it->second;
  }
}


// Incremental sparse row echelon form over an exact field. Rows are reduced
// against existing pivot rows as they arrive, so rank is known at any time.
template <class K>
class SparseEchelon {
 public:
  using Row = std::vector<std::pair<std::uint32_t, K>>;  // ascending column

  explicit SparseEchelon(std::size_t cols) : pivot_row_(cols, -1) {}

  std::size_t cols() const { return pivot_row_.size(); }
  std::size_t rank() const { return rows_.size(); }

  // Returns true when the row was independent of those already present.
  bool add(Row row) {
    while (!row.empty()) {
      auto c = row.front().first;
      int p = pivot_row_[c];
      if (p < 0) {
        K inv = K(1) / row.front().second;
        for (auto& e : row) e.second *= inv;
        pivot_row_[c] = int(rows_.size());
        rows_.push_back(std::move(row));
        return true;
      }
      K f = row.front().second;
      row = axpy(row, f, rows_[p]);
    }
    return false;
  }

  std::vector<std::size_t> pivots() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < pivot_row_.size(); ++c)
      if (pivot_row_[c] >= 0) out.push_back(c);
    return out;
  }

  // Null space basis indexed by free column: v_f = e_f − Σ_p R[p][f] e_p.
  std::vector<std::pair<std::size_t, Row>> kernel() {
    reduce();
    std::vector<std::pair<std::size_t, Row>> out;
    std::vector<Row> by_free(cols());
    for (std::size_t c = cols(); c-- > 0;) {
      int p = pivot_row_[c];
      if (p < 0) continue;
      for (const auto& [col, v] : rows_[p])
        if (col != c) by_free[col].push_back({std::uint32_t(c), K(-v)});
    }
    for (std::size_t f = 0; f < cols(); ++f) {
      if (pivot_row_[f] >= 0) continue;
      Row v = std::move(by_free[f]);
      v.push_back({std::uint32_t(f), K(1)});
      std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      out.push_back({f, std::move(v)});
    }
    return out;
  }

 private:
  // a − f·b
  static Row axpy(const Row& a, const K& f, const Row& b) {
    Row r;
    r.reserve(a.size() + b.size());
    auto i = a.begin(), ie = a.end();
    auto j = b.begin(), je = b.end();
    while (i != ie || j != je) {
      if (j == je || (i != ie && i->first < j->first)) {
        r.push_back(*i++);
      } else if (i == ie || j->first < i->first) {
        r.push_back({j->first, K(-(f * j->second))});
        ++j;
      } else {
        K v = i->second - f * j->second;
        if (!is_zero(v)) r.push_back({i->first, std::move(v)});
        ++i, ++j;
      }
    }
    return r;
  }

  // Back substitution: clear every pivot column from the other pivot rows.
  void reduce() {
    for (std::size_t c = cols(); c-- > 0;) {
      int p = pivot_row_[c];
      if (p < 0) continue;
      Row& row = rows_[p];
      for (;;) {
        std::size_t k = 1;
        while (k < row.size() && pivot_row_[row[k].first] < 0) ++k;
        if (k >= row.size()) break;
        K f = row[k].second;
        row = axpy(row, f, rows_[pivot_row_[row[k].first]]);
      }
    }
  }

  std::vector<int> pivot_row_;
  std::vector<Row> rows_;
};

}  // namespace defl
