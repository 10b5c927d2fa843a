#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "defl/linalg.hpp"
#include "defl/poly.hpp"

namespace defl {

// Σ_β c_β (1/β!) ∂^β evaluated at a point. The coefficient map is stored as
// a polynomial in n variables standing for the ∂'s.
template <class K>
struct DualFunctional {
  Polynomial<K> coeffs;

  int order() const { return coeffs.degree(); }
  K coeff(const Exponent& beta) const { return coeffs.coeff(beta); }

  K apply(const Polynomial<K>& p, const std::vector<K>& xi) const {
    auto t = p.taylor(xi, unsigned(std::max(order(), 0)));
    K acc(0);
    for (const auto& term : coeffs.terms()) acc += term.coeff * t.coeff(term.exp);
    return acc;
  }

  std::string to_string(const std::vector<std::string>& names) const {
    std::vector<std::string> d;
    for (const auto& n : names) d.push_back("d" + n);
    return coeffs.to_string(d);
  }
};

template <class K>
struct MultiplicityStructure {
  std::size_t nvars = 0;
  std::vector<K> point;
  std::vector<Exponent> E;
  std::vector<DualFunctional<K>> dual;
  std::size_t delta = 0;
  int nil_index = 0;
  std::vector<std::size_t> kernel_dims;  // dim ker Mac_d for d = 1, 2, ...
  double tol = 0;

  K nu(std::size_t i, const Exponent& beta) const { return dual.at(i).coeff(beta); }
  std::size_t index_of(const Exponent& a) const {
    auto it = std::find(E.begin(), E.end(), a);
    return it == E.end() ? E.size() : std::size_t(it - E.begin());
  }
};

// Taylor coefficients of (x−ξ)^β f_i at ξ, rows (β, i) for |β| < d and
// columns |α| ≤ d in degree-ascending order. Row (β, i), column α holds the
// coefficient of y^{α−β} in f_i(ξ + y); this equals ∂^α(x^β f_i)(ξ) up to
// nonzero row and column scalings, so the kernel dimension is unchanged and
// kernel vectors are coefficients of (1/α!)∂^α.
template <class K>
Matrix<K> macaulay_matrix(const PolySystem<K>& f, const std::vector<K>& xi, unsigned d) {
  if (d < 1) throw std::invalid_argument("Macaulay degree must be positive");
  const std::size_t n = f.nvars();
  if (xi.size() != n) throw std::invalid_argument("point has wrong length");
  auto cols = exponents_up_to(n, d);
  auto shifts = exponents_up_to(n, d - 1);
  std::unordered_map<Exponent, std::size_t, ExponentHash> col_of;
  for (std::size_t c = 0; c < cols.size(); ++c) col_of[cols[c]] = c;
  Matrix<K> m(shifts.size() * f.polys.size(), cols.size());
  std::size_t row = 0;
  std::vector<Polynomial<K>> taylor;
  for (const auto& p : f.polys) taylor.push_back(p.taylor(xi, d));
  for (const auto& beta : shifts)
    for (const auto& t : taylor) {
      for (const auto& term : t.terms()) {
        if (term.exp.degree() + beta.degree() > d) continue;
        m(row, col_of.at(term.exp + beta)) = term.coeff;
      }
      ++row;
    }
  return m;
}

namespace detail {

// Kernel of Mac_d as dual functionals, echelonized so that each leading
// monomial appears in no other functional.
template <class K>
struct KernelAtDegree {
  std::size_t dim = 0;
  std::vector<Exponent> leading;
  std::vector<DualFunctional<K>> basis;
};

template <class K>
KernelAtDegree<K> kernel_at_degree(const std::vector<Polynomial<K>>& taylor, std::size_t n, unsigned d, double tol, bool want_basis) {
  auto cols = exponents_up_to(n, d);  // ascending in degree, descending lex within
  // Column order fully ascending in the monomial order.
  std::vector<Exponent> asc;
  for (unsigned k = 0; k <= d; ++k) {
    auto level = exponents_of_degree(n, k);
    asc.insert(asc.end(), level.rbegin(), level.rend());
  }
  std::unordered_map<Exponent, std::uint32_t, ExponentHash> pos;
  for (std::size_t c = 0; c < asc.size(); ++c) pos[asc[c]] = std::uint32_t(c);
  auto shifts = exponents_up_to(n, d - 1);
  KernelAtDegree<K> out;

  if constexpr (is_exact_v<K>) {
    SparseEchelon<K> ech(asc.size());
    for (const auto& beta : shifts)
      for (const auto& t : taylor) {
        typename SparseEchelon<K>::Row row;
        for (const auto& term : t.terms()) {
          if (term.exp.degree() + beta.degree() > d) continue;
          row.push_back({pos.at(term.exp + beta), term.coeff});
        }
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        ech.add(std::move(row));
      }
    out.dim = asc.size() - ech.rank();
    if (!want_basis) return out;
    for (auto& [free, vec] : ech.kernel()) {
      std::vector<typename Polynomial<K>::Term> terms;
      for (auto& [c, v] : vec) terms.push_back({asc[c], v});
      out.leading.push_back(asc[free]);
      out.basis.push_back({Polynomial<K>::from_terms(n, std::move(terms))});
    }
  } else {
    Matrix<K> m(shifts.size() * taylor.size(), asc.size());
    std::size_t row = 0;
    for (const auto& beta : shifts)
      for (const auto& t : taylor) {
        for (const auto& term : t.terms()) {
          if (term.exp.degree() + beta.degree() > d) continue;
          m(row, pos.at(term.exp + beta)) = term.coeff;
        }
        ++row;
      }
    auto ker = null_space(m, tol);
    out.dim = ker.size();
    if (!want_basis) return out;
    // Echelonize with columns in descending monomial order: pivots are the
    // leading monomials.
    Matrix<K> kt(ker.size(), asc.size());
    for (std::size_t i = 0; i < ker.size(); ++i)
      for (std::size_t c = 0; c < asc.size(); ++c) kt(i, asc.size() - 1 - c) = ker[i][c];
    auto [r, piv] = row_echelon(kt, tol);
    if (piv.size() != ker.size()) throw NumericError("kernel echelon form lost rank");
    for (std::size_t i = 0; i < piv.size(); ++i) {
      double rowmax = 0;
      for (std::size_t c = 0; c < asc.size(); ++c) rowmax = std::max(rowmax, magnitude(r(i, c)));
      std::vector<typename Polynomial<K>::Term> terms;
      for (std::size_t c = 0; c < asc.size(); ++c) {
        const K& v = r(i, c);
        if (magnitude(v) <= tol * rowmax) continue;
        terms.push_back({asc[asc.size() - 1 - c], v});
      }
      out.leading.push_back(asc[asc.size() - 1 - piv[i]]);
      out.basis.push_back({Polynomial<K>::from_terms(n, std::move(terms))});
    }
  }
  // Sort by leading monomial, ascending.
  std::vector<std::size_t> idx(out.leading.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return out.leading[a] < out.leading[b]; });
  KernelAtDegree<K> sorted;
  sorted.dim = out.dim;
  for (auto i : idx) {
    sorted.leading.push_back(out.leading[i]);
    sorted.basis.push_back(std::move(out.basis[i]));
  }
  return sorted;
}

}  // namespace detail

// True when every nonzero α in E has some α − e_i in E.
inline bool connected_to_one(const std::vector<Exponent>& E) {
  std::set<std::vector<std::pair<unsigned, unsigned>>> seen;
  auto key = [](const Exponent& e) {
    std::vector<std::pair<unsigned, unsigned>> k;
    for (auto f : e.factors()) k.push_back({f.var, f.pow});
    return k;
  };
  for (const auto& e : E) seen.insert(key(e));
  for (const auto& e : E) {
    if (e.is_one()) continue;
    bool ok = false;
    for (auto f : e.factors())
      if (seen.count(key(e - Exponent::unit(f.var)))) ok = true;
    if (!ok) return false;
  }
  return true;
}

// Closed under taking any divisor.
inline bool subtraction_closed(const std::vector<Exponent>& E) {
  for (const auto& e : E)
    for (auto f : e.factors()) {
      auto d = e - Exponent::unit(f.var);
      if (std::find(E.begin(), E.end(), d) == E.end()) return false;
    }
  return true;
}

template <class K>
bool vanishes_at(const PolySystem<K>& f, const std::vector<K>& xi, double tol) {
  for (const auto& p : f.polys) {
    K v = p.eval(xi);
    if constexpr (is_exact_v<K>) {
      if (!is_zero(v)) return false;
    } else {
      if (magnitude(v) > tol * std::max(1.0, p.max_abs_coeff())) return false;
    }
  }
  return true;
}

namespace detail {

// Local expansions of f at ξ up to degree d. For floats, coefficients below
// the rounding level of evaluating p near ξ are dropped and each expansion
// is scaled to unit max coefficient, so systems mixing huge and small
// coefficients are judged on the same footing.
template <class K>
std::vector<Polynomial<K>> local_expansions(const PolySystem<K>& f, const std::vector<K>& xi, unsigned d) {
  std::vector<Polynomial<K>> out;
  for (const auto& p : f.polys) {
    auto t = p.taylor(xi, d);
    if constexpr (!is_exact_v<K>) {
      double scale = 0;
      for (const auto& term : p.terms()) {
        double m = magnitude(term.coeff);
        for (auto fct : term.exp.factors()) m *= std::pow(std::max(1.0, magnitude(xi[fct.var])), double(fct.pow));
        scale += m;
      }
      const double noise = std::numeric_limits<double>::epsilon() * scale * std::ldexp(1.0, int(p.degree()));
      std::vector<typename Polynomial<K>::Term> kept;
      double big = 0;
      for (const auto& term : t.terms())
        if (magnitude(term.coeff) > noise) {
          kept.push_back(term);
          big = std::max(big, magnitude(term.coeff));
        }
      for (auto& term : kept) term.coeff /= K(big);
      t = Polynomial<K>::from_terms(p.nvars(), std::move(kept));
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

template <class K>
MultiplicityStructure<K> dual_space(const PolySystem<K>& f, const std::vector<K>& xi, double tol, unsigned d_max = 32) {
  const std::size_t n = f.nvars();
  if (xi.size() != n) throw std::invalid_argument("point has wrong length");
  if (!vanishes_at(f, xi, tol)) throw NumericError("point is not a root of the system at the given tolerance");
  MultiplicityStructure<K> ms;
  ms.nvars = n;
  ms.point = xi;
  ms.tol = tol;
  std::size_t prev = 1;  // D_0 = span{1}
  unsigned order = 0;
  for (unsigned d = 1;; ++d) {
    if (d > d_max) throw NumericError("dual space still growing at degree " + std::to_string(d_max) + "; root not isolated or tolerance too loose");
    auto k = detail::kernel_at_degree(detail::local_expansions(f, xi, d), n, d, tol, false);
    ms.kernel_dims.push_back(k.dim);
    if (k.dim == prev) {
      order = d - 1;
      break;
    }
    if (k.dim < prev) throw NumericError("kernel dimension decreased; tolerance inconsistent");
    prev = k.dim;
  }
  if (order == 0) {
    ms.E = {Exponent()};
    ms.dual = {{Polynomial<K>::constant(n, K(1))}};
  } else {
    auto k = detail::kernel_at_degree(detail::local_expansions(f, xi, order), n, order, tol, true);
    ms.E = std::move(k.leading);
    ms.dual = std::move(k.basis);
  }
  ms.delta = ms.E.size();
  ms.nil_index = ms.dual.back().order();
  if (!ms.E.front().is_one() || !connected_to_one(ms.E)) throw NumericError("primal exponents not connected to 1; tolerance inconsistent");
  return ms;
}

template <class K>
std::size_t breadth(const MultiplicityStructure<K>& ms) {
  return std::size_t(std::count_if(ms.dual.begin(), ms.dual.end(), [](const auto& l) { return l.order() == 1; }));
}

// M_j(i, k) = ν_{α_i, α_k + e_j}: multiplication by x_j − ξ_j on the local
// ring in the basis (x−ξ)^{α_k}.
template <class K>
std::vector<Matrix<K>> multiplication_matrices(const MultiplicityStructure<K>& ms) {
  std::vector<Matrix<K>> M;
  for (std::size_t j = 0; j < ms.nvars; ++j) {
    Matrix<K> m(ms.delta, ms.delta);
    for (std::size_t i = 0; i < ms.delta; ++i)
      for (std::size_t k = 0; k < ms.delta; ++k) m(i, k) = ms.dual[i].coeff(ms.E[k] + Exponent::unit(j));
    M.push_back(std::move(m));
  }
  return M;
}

// (M_1^{γ_1} ··· M_n^{γ_n} e_0)[i].
template <class K>
K nu_from_matrices(const std::vector<Matrix<K>>& M, const Exponent& gamma, std::size_t i) {
  std::vector<K> v(M.front().rows(), K(0));
  v[0] = K(1);
  for (std::size_t j = M.size(); j-- > 0;)
    for (unsigned p = 0; p < gamma[j]; ++p) v = M[j] * v;
  return v.at(i);
}

template <class K>
K nu_outside_Eplus(const MultiplicityStructure<K>& ms, const Exponent& gamma, std::size_t i) {
  if (int(gamma.degree()) > ms.nil_index) return K(0);
  return nu_from_matrices(multiplication_matrices(ms), gamma, i);
}

// [Λ_i((x−ξ)^{α_j})], with (x−ξ)^α expanded in x first.
template <class K>
Matrix<K> orthogonality_matrix(const MultiplicityStructure<K>& ms) {
  const std::size_t n = ms.nvars;
  std::vector<Polynomial<K>> basis;
  for (const auto& a : ms.E) {
    auto p = Polynomial<K>::constant(n, K(1));
    for (auto f : a.factors()) {
      auto lin = Polynomial<K>::variable(n, f.var) - Polynomial<K>::constant(n, ms.point[f.var]);
      p *= lin.pow(f.pow);
    }
    basis.push_back(std::move(p));
  }
  Matrix<K> o(ms.delta, ms.delta);
  for (std::size_t i = 0; i < ms.delta; ++i)
    for (std::size_t j = 0; j < ms.delta; ++j) o(i, j) = ms.dual[i].apply(basis[j], ms.point);
  return o;
}

}  // namespace defl
