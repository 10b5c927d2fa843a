#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "defl/deflate1.hpp"
#include "defl/deflate_mu.hpp"
#include "defl/dual.hpp"
#include "defl/linalg.hpp"
#include "defl/poly.hpp"

namespace defl {

// A polynomial system flattened for repeated numeric evaluation of values
// and Jacobians.
template <class N>
class CompiledSystem {
 public:
  CompiledSystem() = default;
  template <class K>
  explicit CompiledSystem(const std::vector<Polynomial<K>>& polys, std::size_t nvars) : nvars_(nvars) {
    for (const auto& p : polys) {
      if (p.nvars() != nvars) throw std::invalid_argument("polynomial ring does not match");
      Poly q;
      for (const auto& t : p.terms()) {
        Term tm;
        tm.coeff = scalar_cast<N>(t.coeff);
        for (auto f : t.exp.factors()) tm.factors.push_back({f.var, f.pow});
        q.push_back(std::move(tm));
      }
      polys_.push_back(std::move(q));
    }
  }

  std::size_t size() const { return polys_.size(); }
  std::size_t nvars() const { return nvars_; }

  std::vector<N> values(const std::vector<N>& x) const {
    std::vector<N> out(polys_.size(), N(0));
    for (std::size_t i = 0; i < polys_.size(); ++i)
      for (const auto& t : polys_[i]) {
        N m = t.coeff;
        for (auto [v, p] : t.factors) m *= ipow(x[v], p);
        out[i] += m;
      }
    return out;
  }

  // Σ |c|·|x^α| per polynomial: the size of the terms that cancel in values(x).
  std::vector<double> scales(const std::vector<N>& x) const {
    std::vector<double> out(polys_.size(), 0.0);
    for (std::size_t i = 0; i < polys_.size(); ++i)
      for (const auto& t : polys_[i]) {
        double m = magnitude(t.coeff);
        for (auto [v, p] : t.factors) m *= std::pow(magnitude(x[v]), double(p));
        out[i] += m;
      }
    return out;
  }

  // Calls sink(row, col, value) for every structurally nonzero entry;
  // repeated (row, col) pairs must be summed by the caller.
  template <class Sink>
  void jacobian_entries(const std::vector<N>& x, Sink&& sink) const {
    std::vector<N> pre, suf, pw;
    for (std::size_t i = 0; i < polys_.size(); ++i)
      for (const auto& t : polys_[i]) {
        const std::size_t k = t.factors.size();
        pw.resize(k);
        pre.assign(k + 1, N(1));
        suf.assign(k + 1, N(1));
        for (std::size_t a = 0; a < k; ++a) pw[a] = ipow(x[t.factors[a].first], t.factors[a].second);
        for (std::size_t a = 0; a < k; ++a) pre[a + 1] = pre[a] * pw[a];
        for (std::size_t a = k; a-- > 0;) suf[a] = suf[a + 1] * pw[a];
        for (std::size_t a = 0; a < k; ++a) {
          auto [v, p] = t.factors[a];
          N d = t.coeff * N(double(p)) * ipow(x[v], p - 1) * pre[a] * suf[a + 1];
          sink(i, v, d);
        }
      }
  }

  Matrix<N> jacobian(const std::vector<N>& x) const {
    Matrix<N> J(polys_.size(), nvars_);
    jacobian_entries(x, [&](std::size_t i, std::size_t j, const N& v) { J(i, j) += v; });
    return J;
  }

 private:
  struct Term {
    N coeff;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> factors;
  };
  using Poly = std::vector<Term>;

  static N ipow(const N& x, unsigned p) {
    N r(1);
    for (unsigned k = 0; k < p; ++k) r *= x;
    return r;
  }

  std::size_t nvars_ = 0;
  std::vector<Poly> polys_;
};

// Uniform doubles on [−1, 1] from a seeded 64-bit Mersenne twister, mapped
// through the top 53 bits so the stream is identical on every platform.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : rng_(seed) {}
  double next() { return double(rng_() >> 11) * 0x1.0p-52 - 1.0; }

 private:
  std::mt19937_64 rng_;
};

template <class N>
struct SquareSystem {
  CompiledSystem<N> source;
  Matrix<double> combo;  // m × M; empty means identity
  std::uint64_t seed = 0;

  std::size_t size() const { return source.nvars(); }

  std::vector<N> values(const std::vector<N>& x) const {
    auto F = source.values(x);
    if (combo.empty()) return F;
    std::vector<N> out(combo.rows(), N(0));
    for (std::size_t i = 0; i < combo.rows(); ++i)
      for (std::size_t k = 0; k < combo.cols(); ++k) out[i] += combo(i, k) * F[k];
    return out;
  }

  Matrix<N> jacobian(const std::vector<N>& x) const {
    if (combo.empty()) return source.jacobian(x);
    Matrix<N> J(combo.rows(), source.nvars());
    source.jacobian_entries(x, [&](std::size_t k, std::size_t j, const N& v) {
      for (std::size_t i = 0; i < combo.rows(); ++i) J(i, j) += combo(i, k) * v;
    });
    return J;
  }
};

template <class N>
SquareSystem<N> randomize_square(CompiledSystem<N> sys, std::uint64_t seed, bool keep_if_square = false) {
  const std::size_t m = sys.nvars(), M = sys.size();
  if (M < m) throw std::invalid_argument("fewer equations than unknowns");
  SquareSystem<N> sq;
  sq.seed = seed;
  if (!(keep_if_square && M == m)) {
    UniformStream u(seed);
    sq.combo = Matrix<double>(m, M);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < M; ++k) sq.combo(i, k) = u.next();
  }
  sq.source = std::move(sys);
  return sq;
}

template <class N>
struct NewtonIterate {
  std::vector<N> point;
  double residual = 0;  // max-norm of the source system at point
  double step = 0;      // max-norm of the step that produced point (0 for the start)
};

template <class N>
struct NewtonTrace {
  std::vector<NewtonIterate<N>> iterates;
  bool converged = false;
  bool quadratic_flag = false;
  bool singular = false;
  double order_estimate = 0;
  std::string message;

  std::size_t steps() const { return iterates.empty() ? 0 : iterates.size() - 1; }
  const std::vector<N>& last() const { return iterates.back().point; }
};

namespace detail {

template <class N>
double max_norm(const std::vector<N>& v) {
  double m = 0;
  for (const auto& x : v) m = std::max(m, magnitude(x));
  return m;
}

// Solves A x = b in place by LU with partial pivoting. Returns false when a
// pivot falls below tol times the largest pivot.
template <class N>
bool lu_solve(Matrix<N> a, std::vector<N>& b, double tol) {
  const std::size_t n = a.rows();
  double pmax = 0;
  std::vector<double> piv(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (magnitude(a(i, c)) > magnitude(a(p, c))) p = i;
    if (p != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
      std::swap(b[p], b[c]);
    }
    piv[c] = magnitude(a(c, c));
    pmax = std::max(pmax, piv[c]);
    if (piv[c] == 0) return false;
    for (std::size_t i = c + 1; i < n; ++i) {
      N f = a(i, c) / a(c, c);
      if (is_zero(f)) continue;
      for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
      b[i] -= f * b[c];
    }
  }
  for (double p : piv)
    if (p <= tol * pmax) return false;
  for (std::size_t c = n; c-- > 0;) {
    N s = b[c];
    for (std::size_t j = c + 1; j < n; ++j) s -= a(c, j) * b[j];
    b[c] = s / a(c, c);
  }
  return true;
}

// Fitted convergence order over the last three step norms above the noise
// floor: log(s3/s2) / log(s2/s1).
template <class N>
void diagnose(NewtonTrace<N>& tr) {
  std::vector<double> s;
  for (std::size_t k = 1; k < tr.iterates.size(); ++k) {
    double scale = std::max(1.0, max_norm(tr.iterates[k].point));
    if (tr.iterates[k].step > 100 * std::numeric_limits<double>::epsilon() * scale) s.push_back(tr.iterates[k].step);
  }
  if (s.size() < 3) return;
  double s1 = s[s.size() - 3], s2 = s[s.size() - 2], s3 = s[s.size() - 1];
  if (!(s2 < s1 && s3 < s2)) return;
  tr.order_estimate = std::log(s3 / s2) / std::log(s2 / s1);
  tr.quadratic_flag = tr.order_estimate >= 1.5;
}

}  // namespace detail

struct NewtonOptions {
  double step_tol = 1e-12;  // relative to max(1, |x|)
  double rank_tol = 1e-8;
  std::size_t max_iter = 50;
};

template <class N>
NewtonTrace<N> newton_iterate(const SquareSystem<N>& sq, std::vector<N> x, const NewtonOptions& opt) {
  NewtonTrace<N> tr;
  if (x.size() != sq.size()) throw std::invalid_argument("start point has wrong length");
  tr.iterates.push_back({x, detail::max_norm(sq.source.values(x)), 0.0});
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    auto F = sq.values(x);
    for (auto& v : F) v = -v;
    if (!detail::lu_solve(sq.jacobian(x), F, opt.rank_tol)) {
      tr.singular = true;
      tr.message = "singular Jacobian at iterate " + std::to_string(it);
      break;
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += F[i];
    double step = detail::max_norm(F);
    tr.iterates.push_back({x, detail::max_norm(sq.source.values(x)), step});
    if (!std::isfinite(step)) {
      tr.message = "iteration diverged";
      break;
    }
    if (step <= opt.step_tol * std::max(1.0, detail::max_norm(x))) {
      tr.converged = true;
      break;
    }
  }
  if (!tr.converged && tr.message.empty()) tr.message = "no convergence in " + std::to_string(opt.max_iter) + " steps";
  detail::diagnose(tr);
  return tr;
}

// Gauss–Newton on the full overdetermined system: each step is the minimum
// norm least-squares solution of J Δ = −F.
template <class N>
NewtonTrace<N> gauss_newton_iterate(const CompiledSystem<N>& sys, std::vector<N> x, const NewtonOptions& opt) {
  NewtonTrace<N> tr;
  if (x.size() != sys.nvars()) throw std::invalid_argument("start point has wrong length");
  tr.iterates.push_back({x, detail::max_norm(sys.values(x)), 0.0});
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    auto F = sys.values(x);
    auto J = to_eigen(sys.jacobian(x));
    Eigen::Matrix<N, Eigen::Dynamic, 1> rhs(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) rhs(i) = -F[i];
    Eigen::BDCSVD<EigenMatrix<N>> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    auto sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= opt.rank_tol * sv(0)) {
      tr.singular = true;
      tr.message = "rank-deficient Jacobian at iterate " + std::to_string(it);
      break;
    }
    Eigen::Matrix<N, Eigen::Dynamic, 1> dx = svd.solve(rhs);
    double step = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += dx(i);
      step = std::max(step, magnitude(dx(i)));
    }
    tr.iterates.push_back({x, detail::max_norm(sys.values(x)), step});
    if (!std::isfinite(step)) {
      tr.message = "iteration diverged";
      break;
    }
    if (step <= opt.step_tol * std::max(1.0, detail::max_norm(x))) {
      tr.converged = true;
      break;
    }
  }
  if (!tr.converged && tr.message.empty()) tr.message = "no convergence in " + std::to_string(opt.max_iter) + " steps";
  detail::diagnose(tr);
  return tr;
}

struct SimpleCheck {
  bool simple = false;
  double residual = 0;
  std::size_t rank = 0, cols = 0;
  double smallest_kept = 0, largest_dropped = 0;
};

// Residuals are relative to the term sizes of each polynomial and Jacobian
// rows are equilibrated, so systems with large deflation coefficients are
// judged on the same footing as the input.
template <class N>
SimpleCheck verify_simple(const CompiledSystem<N>& sys, const std::vector<N>& x, double tol) {
  SimpleCheck c;
  c.cols = sys.nvars();
  if (sys.size() == 0) return c;
  auto F = sys.values(x);
  auto sc = sys.scales(x);
  for (std::size_t i = 0; i < F.size(); ++i) c.residual = std::max(c.residual, magnitude(F[i]) / std::max(1.0, sc[i]));
  auto J = sys.jacobian(x);
  for (std::size_t i = 0; i < J.rows(); ++i) {
    double m = 0;
    for (std::size_t j = 0; j < J.cols(); ++j) m = std::max(m, magnitude(J(i, j)));
    if (m > 0)
      for (std::size_t j = 0; j < J.cols(); ++j) J(i, j) /= N(m);
  }
  auto r = numerical_rank(J, tol);
  c.rank = r.rank;
  c.smallest_kept = r.smallest_kept;
  c.largest_dropped = r.largest_dropped;
  c.simple = c.residual <= tol && c.rank == c.cols;
  return c;
}

// Exact fields are checked exactly: the residual is zero or not and the
// rank is the exact rank of the Jacobian.
template <class K>
SimpleCheck verify_simple(const PolySystem<K>& sys, const std::vector<K>& x, double tol) {
  using N = numeric_t<K>;
  if constexpr (is_exact_v<K>) {
    SimpleCheck c;
    c.cols = sys.nvars();
    if (sys.polys.empty()) return c;
    bool zero = true;
    for (const auto& p : sys.polys) {
      K v = p.eval(x);
      if (!is_zero(v)) {
        zero = false;
        c.residual = std::max(c.residual, magnitude(v));
      }
    }
    auto r = numerical_rank(jacobian_at(sys, x), tol);
    c.rank = r.rank;
    c.simple = zero && c.rank == c.cols;
    return c;
  } else {
    std::vector<N> xn;
    for (const auto& v : x) xn.push_back(scalar_cast<N>(v));
    return verify_simple(CompiledSystem<N>(sys.polys, sys.nvars()), xn, tol);
  }
}

template <class N>
struct RefineResult {
  std::vector<N> point;  // refined ξ
  std::vector<N> mu;     // refined parameters, in pm.mu_vars order
  NewtonTrace<N> trace;
  std::vector<std::uint64_t> seeds_tried;
  // ν_{α_i, γ} for γ outside E⁺ with |γ| ≤ nil index, rebuilt from the
  // refined multiplication matrices.
  std::vector<std::pair<std::pair<std::size_t, Exponent>, N>> nu_rest;
};

enum class NewtonMode { square, least_squares };

// Newton on the extended system from (ξ̃, ν̃). Square mode uses random
// combinations and retries with fresh seeds when the Jacobian is singular.
template <class K>
RefineResult<numeric_t<K>> refine_with_structure(const ExtendedSystem<K>& ext, const std::vector<numeric_t<K>>& start, const NewtonOptions& opt, std::uint64_t seed, NewtonMode mode = NewtonMode::square, int nil_index = -1) {
  using N = numeric_t<K>;
  if (ext.n == 0) throw std::invalid_argument("refinement needs the point as variables");
  CompiledSystem<N> sys(ext.system.polys, ext.system.nvars());
  RefineResult<N> res;
  if (mode == NewtonMode::least_squares) {
    res.trace = gauss_newton_iterate(sys, start, opt);
  } else {
    // Unit-size coefficients before mixing, so large polynomials do not
    // dominate the random combination.
    std::vector<Polynomial<K>> scaled;
    for (const auto& p : ext.system.polys) scaled.push_back(p.is_zero() ? p : scalar_cast<K>(1.0 / p.max_abs_coeff()) * p);
    CompiledSystem<N> eq(scaled, ext.system.nvars());
    for (int attempt = 0; attempt < 4; ++attempt) {
      std::uint64_t s = seed + std::uint64_t(attempt);
      res.seeds_tried.push_back(s);
      res.trace = newton_iterate(randomize_square(eq, s), start, opt);
      if (!res.trace.singular) break;
    }
  }
  const auto& x = res.trace.last();
  res.point.assign(x.begin(), x.begin() + ext.n);
  res.mu.assign(x.begin() + ext.n, x.end());
  if (nil_index > 0) {
    auto M = evaluate_matrices(ext.pm, res.mu);
    std::vector<Exponent> Eplus = ext.pm.E;
    for (const auto& a : ext.pm.E)
      for (std::size_t j = 0; j < ext.n; ++j) Eplus.push_back(a + Exponent::unit(j));
    for (const auto& g : exponents_up_to(ext.n, unsigned(nil_index))) {
      if (std::find(Eplus.begin(), Eplus.end(), g) != Eplus.end()) continue;
      for (std::size_t i = 0; i < ext.pm.delta(); ++i) {
        N v = nu_from_matrices(M, g, i);
        if (!is_zero(v)) res.nu_rest.push_back({{i, g}, v});
      }
    }
  }
  return res;
}

}  // namespace defl
