#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "defl/dual.hpp"
#include "defl/poly.hpp"

namespace defl {

struct MuVariable {
  Exponent alpha;   // row monomial α_i
  Exponent target;  // α_k + e_j
  friend bool operator==(const MuVariable&, const MuVariable&) = default;
};

// Entry (α_i, α_k) of M_j with target t = α_k + e_j.
//  orthogonal: 1 when t = α_i, 0 for other t in E, a parameter for t outside
//              E with |α_i| > |α_k| (E from an orthogonal primal-dual pair).
//  triangular: 1 when t = α_i; for i > k a parameter when t is outside E or
//              follows α_i in E; 0 otherwise (any E stable under subtraction).
enum class MatrixPattern { orthogonal, triangular };

struct ParamEntry {
  enum Kind : unsigned char { zero, one, mu } kind = zero;
  std::size_t mu_index = 0;
};

struct ParametricMatrixSet {
  std::size_t nvars = 0;
  std::vector<Exponent> E;
  std::vector<MuVariable> mu_vars;
  MatrixPattern pattern = MatrixPattern::orthogonal;
  // matrices[j][i * δ + k] is entry (i, k) of M_j; the usual displayed form
  // is its transpose.
  std::vector<std::vector<ParamEntry>> matrices;

  std::size_t delta() const { return E.size(); }
  const ParamEntry& entry(std::size_t j, std::size_t i, std::size_t k) const { return matrices[j][i * E.size() + k]; }
};

inline ParametricMatrixSet build_parametric_matrices(std::vector<Exponent> E, std::size_t nvars, MatrixPattern pattern = MatrixPattern::orthogonal) {
  std::stable_sort(E.begin(), E.end(), [](const Exponent& a, const Exponent& b) { return a.degree() < b.degree(); });
  if (E.empty() || !E.front().is_one()) throw std::invalid_argument("E must contain the zero exponent");
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t k = i + 1; k < E.size(); ++k)
      if (E[i] == E[k]) throw std::invalid_argument("E has repeated exponents");
  for (const auto& a : E)
    if (a.support_end() > nvars) throw std::invalid_argument("E exponent has too many variables");
  if (!subtraction_closed(E)) throw std::invalid_argument("E is not stable under subtraction");
  ParametricMatrixSet pm;
  pm.nvars = nvars;
  pm.E = E;
  pm.pattern = pattern;
  const std::size_t d = E.size();
  pm.matrices.assign(nvars, std::vector<ParamEntry>(d * d));
  std::map<std::pair<std::size_t, std::vector<int>>, std::size_t> seen;
  auto index_in_E = [&](const Exponent& t) {
    auto it = std::find(E.begin(), E.end(), t);
    return it == E.end() ? d : std::size_t(it - E.begin());
  };
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < nvars; ++j) {
        Exponent t = E[k] + Exponent::unit(j);
        std::size_t m = index_in_E(t);
        ParamEntry& e = pm.matrices[j][i * d + k];
        bool param = false;
        if (m == i) {
          e.kind = ParamEntry::one;
        } else if (pattern == MatrixPattern::orthogonal) {
          // ν_{α_i, t} vanishes when |t| exceeds the order of Λ_i = |α_i|.
          param = m == d && E[i].degree() > E[k].degree();
        } else {
          // Only index triangularity is known for a general primal basis.
          param = i > k && (m == d || m > i);
        }
        if (!param) continue;
        auto key = std::make_pair(i, t.dense(nvars));
        auto [it, fresh] = seen.emplace(key, pm.mu_vars.size());
        if (fresh) pm.mu_vars.push_back({E[i], t});
        e.kind = ParamEntry::mu;
        e.mu_index = it->second;
      }
  return pm;
}

inline std::string mu_name(const MuVariable& v, const std::vector<std::string>& names) {
  return "mu[" + v.alpha.to_string(names) + ";" + v.target.to_string(names) + "]";
}

// ν values for the parameters read from an orthogonal dual basis.
template <class K>
std::vector<K> mu_values(const ParametricMatrixSet& pm, const MultiplicityStructure<K>& ms) {
  std::vector<K> v;
  for (const auto& mu : pm.mu_vars) {
    std::size_t i = ms.index_of(mu.alpha);
    if (i == ms.E.size()) throw std::invalid_argument("parameter row is not in the structure's E");
    v.push_back(ms.nu(i, mu.target));
  }
  return v;
}

// Numeric matrices M_j at given parameter values.
template <class K>
std::vector<Matrix<K>> evaluate_matrices(const ParametricMatrixSet& pm, const std::vector<K>& mu) {
  const std::size_t d = pm.delta();
  std::vector<Matrix<K>> M;
  for (std::size_t j = 0; j < pm.nvars; ++j) {
    Matrix<K> m(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const auto& e = pm.entry(j, i, k);
        if (e.kind == ParamEntry::one) m(i, k) = K(1);
        if (e.kind == ParamEntry::mu) m(i, k) = mu.at(e.mu_index);
      }
    M.push_back(std::move(m));
  }
  return M;
}

namespace detail {

// (M_j v) over polynomials in the extended ring; parameter l is variable
// offset + l.
template <class K>
std::vector<Polynomial<K>> apply_param(const ParametricMatrixSet& pm, std::size_t j, const std::vector<Polynomial<K>>& v, std::size_t offset) {
  const std::size_t d = pm.delta();
  const std::size_t nv = v.front().nvars();
  std::vector<Polynomial<K>> out(d, Polynomial<K>(nv));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const auto& e = pm.entry(j, i, k);
      if (e.kind == ParamEntry::zero || v[k].is_zero()) continue;
      if (e.kind == ParamEntry::one)
        out[i] += v[k];
      else
        out[i] += v[k].times_term(Exponent::unit(offset + e.mu_index), K(1));
    }
  return out;
}

inline bool all_zero_vec(const auto& v) {
  for (const auto& p : v)
    if (!p.is_zero()) return false;
  return true;
}

}  // namespace detail

// N(p) = Σ_γ (1/γ!) ∂^γ p(z) · M(μ)^γ e_0 with M^γ = M_1^{γ_1}···M_n^{γ_n}.
// With symbolic_point the result lives in (z, μ); otherwise z is replaced by
// xi and the result lives in μ alone.
template <class K>
std::vector<Polynomial<K>> parametric_normal_form(const Polynomial<K>& p, const ParametricMatrixSet& pm, bool symbolic_point, const std::vector<K>& xi = {}) {
  const std::size_t n = pm.nvars;
  const std::size_t m = pm.mu_vars.size();
  const std::size_t offset = symbolic_point ? n : 0;
  const std::size_t nv = offset + m;
  const std::size_t d = pm.delta();
  if (p.nvars() != n) throw std::invalid_argument("polynomial ring does not match E");
  if (!symbolic_point && xi.size() != n) throw std::invalid_argument("numeric normal form needs the point");
  auto coeff_poly = [&](const Polynomial<K>& q) {
    if (symbolic_point) return q.embed(nv, 0);
    return Polynomial<K>::constant(nv, q.eval(xi));
  };
  std::vector<Polynomial<K>> e0(d, Polynomial<K>(nv));
  e0[0] = Polynomial<K>::constant(nv, K(1));
  std::vector<Polynomial<K>> result(d, Polynomial<K>(nv));
  result[0] = coeff_poly(p);
  // Level-by-level over |γ|: derivative ∂^γ p and vector M^γ e_0, where
  // M^γ e_0 = M_j M^{γ−e_j} e_0 with j the first index in γ.
  std::map<Exponent, std::pair<Polynomial<K>, std::vector<Polynomial<K>>>> level;
  level.emplace(Exponent(), std::make_pair(p, e0));
  while (!level.empty()) {
    std::map<Exponent, std::pair<Polynomial<K>, std::vector<Polynomial<K>>>> next;
    for (const auto& [gamma, dv] : level) {
      std::size_t first = gamma.is_one() ? n : gamma.factors().front().var;
      for (std::size_t j = 0; j < std::min(first + 1, n); ++j) {
        Exponent g2 = gamma + Exponent::unit(j);
        auto dp = dv.first.diff(j);
        if (dp.is_zero()) continue;
        auto v = detail::apply_param(pm, j, dv.second, offset);
        if (detail::all_zero_vec(v)) continue;
        auto c = coeff_poly(g2.template inverse_factorial<K>() * dp);
        for (std::size_t i = 0; i < d; ++i)
          if (!v[i].is_zero()) result[i] += c * v[i];
        next.emplace(std::move(g2), std::make_pair(std::move(dp), std::move(v)));
      }
    }
    level = std::move(next);
  }
  return result;
}

template <class K>
struct Commutator {
  std::size_t a, b, row, col;
  Polynomial<K> poly;
};

// Entries of M_a M_b − M_b M_a, a < b, as polynomials in μ placed at
// variables offset.. in a ring of nv variables.
template <class K>
std::vector<Commutator<K>> commutator_equations(const ParametricMatrixSet& pm, std::size_t offset = 0, std::size_t nv = 0) {
  const std::size_t d = pm.delta();
  if (nv == 0) nv = offset + pm.mu_vars.size();
  auto entry_poly = [&](const ParamEntry& e) {
    if (e.kind == ParamEntry::one) return Polynomial<K>::constant(nv, K(1));
    if (e.kind == ParamEntry::mu) return Polynomial<K>::variable(nv, offset + e.mu_index);
    return Polynomial<K>(nv);
  };
  auto product = [&](std::size_t a, std::size_t b, std::size_t i, std::size_t k) {
    Polynomial<K> s(nv);
    for (std::size_t l = 0; l < d; ++l) {
      const auto& x = pm.entry(a, i, l);
      const auto& y = pm.entry(b, l, k);
      if (x.kind == ParamEntry::zero || y.kind == ParamEntry::zero) continue;
      s += entry_poly(x) * entry_poly(y);
    }
    return s;
  };
  std::vector<Commutator<K>> out;
  for (std::size_t a = 0; a < pm.nvars; ++a)
    for (std::size_t b = a + 1; b < pm.nvars; ++b)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          auto c = product(a, b, i, k) - product(b, a, i, k);
          if (!c.is_zero()) out.push_back({a, b, i, k, std::move(c)});
        }
  return out;
}

struct Origin {
  enum Kind { normal_form, commutator } kind;
  std::size_t a = 0, b = 0, row = 0, col = 0;  // normal_form: (poly a, row); commutator: (a, b, row, col)
  std::string to_string() const {
    if (kind == normal_form) return "N(f" + std::to_string(a + 1) + ")[" + std::to_string(row) + "]";
    return "[M" + std::to_string(a + 1) + ",M" + std::to_string(b + 1) + "](" + std::to_string(row) + "," + std::to_string(col) + ")";
  }
};

template <class K>
struct ExtendedSystem {
  PolySystem<K> system;  // variables z then μ (or μ only without symbolic point)
  std::vector<Origin> origin;
  ParametricMatrixSet pm;
  std::size_t n = 0;  // original variable count, 0 when z was substituted
  std::size_t raw_count = 0;
  std::size_t normal_form_count = 0, commutator_count = 0;
};

template <class K>
ExtendedSystem<K> build_extended_system(const PolySystem<K>& f, const ParametricMatrixSet& pm, bool symbolic_point = true) {
  const std::size_t n = f.nvars();
  if (pm.nvars != n) throw std::invalid_argument("E does not match the system");
  ExtendedSystem<K> ext;
  ext.pm = pm;
  ext.n = symbolic_point ? n : 0;
  const std::size_t offset = ext.n;
  const std::size_t d = pm.delta();
  if (symbolic_point) ext.system.varnames = f.varnames;
  for (const auto& v : pm.mu_vars) ext.system.varnames.push_back(mu_name(v, f.varnames));
  const std::size_t nv = ext.system.varnames.size();
  for (std::size_t k = 0; k < f.polys.size(); ++k) {
    auto nf = parametric_normal_form(f.polys[k], pm, symbolic_point, f.point);
    for (std::size_t r = 0; r < d; ++r) {
      if (nf[r].is_zero()) continue;
      ext.system.polys.push_back(std::move(nf[r]));
      ext.origin.push_back({Origin::normal_form, k, 0, r, 0});
    }
  }
  ext.normal_form_count = ext.system.polys.size();
  for (auto& c : commutator_equations<K>(pm, offset, nv)) {
    ext.system.polys.push_back(std::move(c.poly));
    ext.origin.push_back({Origin::commutator, c.a, c.b, c.row, c.col});
  }
  ext.commutator_count = ext.system.polys.size() - ext.normal_form_count;
  ext.raw_count = f.polys.size() * d + n * (n - 1) / 2 * (d >= 2 ? (d - 1) * (d - 2) / 2 : 0);
  if (ext.system.polys.size() > ext.raw_count) throw std::logic_error("extended system exceeds its size bound");
  return ext;
}

}  // namespace defl
