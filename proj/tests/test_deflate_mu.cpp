#include <gtest/gtest.h>

#include "defl/deflate_mu.hpp"
#include "defl/newton.hpp"
#include "support.hpp"

using namespace defl;
using defl::test::load_as;
using defl::test::qpoly;
using defl::test::qsystem;
using Q = Rational;
using P = Polynomial<Q>;

namespace {

std::size_t idx(const std::vector<Exponent>& E, const Exponent& a) { return std::size_t(std::find(E.begin(), E.end(), a) - E.begin()); }

std::size_t mu_of(const ParametricMatrixSet& pm, const Exponent& alpha, const Exponent& target) {
  for (std::size_t l = 0; l < pm.mu_vars.size(); ++l)
    if (pm.mu_vars[l].alpha == alpha && pm.mu_vars[l].target == target) return l;
  return pm.mu_vars.size();
}

// M_j as a matrix of polynomials in the μ variables.
Matrix<P> symbolic(const ParametricMatrixSet& pm, std::size_t j) {
  const std::size_t d = pm.delta(), nv = pm.mu_vars.size();
  Matrix<P> m(d, d, P(nv));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const auto& e = pm.entry(j, i, k);
      if (e.kind == ParamEntry::one) m(i, k) = P::constant(nv, Q(1));
      if (e.kind == ParamEntry::mu) m(i, k) = P::variable(nv, e.mu_index);
    }
  return m;
}

Matrix<P> mul(const Matrix<P>& a, const Matrix<P>& b) {
  Matrix<P> c(a.rows(), b.cols(), P(a(0, 0).nvars()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

template <class K>
void check_true_structure(const PolySystem<K>& f, double tol) {
  auto ms = dual_space(f, f.point, tol);
  auto pm = build_parametric_matrices(ms.E, f.nvars());
  auto ext = build_extended_system(f, pm);
  using N = numeric_t<K>;
  std::vector<N> x;
  for (const auto& v : f.point) x.push_back(scalar_cast<N>(v));
  for (const auto& v : mu_values(pm, ms)) x.push_back(scalar_cast<N>(v));
  CompiledSystem<N> cs(ext.system.polys, ext.system.nvars());
  for (const auto& r : cs.values(x)) EXPECT_LE(magnitude(r), tol);
  auto chk = verify_simple(cs, x, 1e-8);
  EXPECT_EQ(chk.rank, ext.system.nvars());
  const std::size_t N0 = f.polys.size(), n = f.nvars(), d = ms.delta;
  EXPECT_LE(ext.system.polys.size(), N0 * d + n * (n - 1) * (d - 1) * (d >= 2 ? d - 2 : 0) / 4);
  EXPECT_LE(pm.mu_vars.size(), n * d * (d - 1) / 2);
  // products of o+1 matrices vanish identically
  std::vector<Matrix<P>> M;
  for (std::size_t j = 0; j < n; ++j) M.push_back(symbolic(pm, j));
  std::vector<Matrix<P>> level = M;
  for (int k = 1; k <= ms.nil_index; ++k) {
    std::vector<Matrix<P>> next;
    for (const auto& a : level)
      for (const auto& b : M) next.push_back(mul(a, b));
    level = std::move(next);
  }
  for (const auto& m : level)
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t k = 0; k < m.cols(); ++k) EXPECT_TRUE(m(i, k).is_zero());
}

}  // namespace

TEST(ParametricMatrices, DoubleRoot) {
  auto pm = build_parametric_matrices({{0, 0}, {0, 1}}, 2);
  ASSERT_EQ(pm.mu_vars.size(), 1u);
  EXPECT_EQ(pm.mu_vars[0].alpha, (Exponent{0, 1}));
  EXPECT_EQ(pm.mu_vars[0].target, (Exponent{1, 0}));
  // M1ᵗ = [[0, μ], [0, 0]], M2ᵗ = [[0, 1], [0, 0]]
  EXPECT_EQ(pm.entry(0, 1, 0).kind, ParamEntry::mu);
  EXPECT_EQ(pm.entry(1, 1, 0).kind, ParamEntry::one);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(pm.entry(j, 0, 0).kind, ParamEntry::zero);
    EXPECT_EQ(pm.entry(j, 0, 1).kind, ParamEntry::zero);
    EXPECT_EQ(pm.entry(j, 1, 1).kind, ParamEntry::zero);
  }
}

TEST(ParametricMatrices, TripleRootUserBasis) {
  auto pm = build_parametric_matrices({{0, 0}, {1, 0}, {0, 1}}, 2, MatrixPattern::triangular);
  ASSERT_EQ(pm.mu_vars.size(), 3u);
  const std::size_t mu1 = mu_of(pm, {0, 1}, {2, 0}), mu2 = mu_of(pm, {1, 0}, {0, 1}), mu3 = mu_of(pm, {0, 1}, {1, 1});
  ASSERT_LT(mu1, 3u);
  ASSERT_LT(mu2, 3u);
  ASSERT_LT(mu3, 3u);
  // M1ᵗ = [[0,1,0],[0,0,μ1],[0,0,0]], M2ᵗ = [[0,μ2,1],[0,0,μ3],[0,0,0]]
  EXPECT_EQ(pm.entry(0, 1, 0).kind, ParamEntry::one);
  EXPECT_EQ(pm.entry(0, 2, 1).mu_index, mu1);
  EXPECT_EQ(pm.entry(0, 2, 0).kind, ParamEntry::zero);
  EXPECT_EQ(pm.entry(1, 1, 0).mu_index, mu2);
  EXPECT_EQ(pm.entry(1, 2, 0).kind, ParamEntry::one);
  EXPECT_EQ(pm.entry(1, 2, 1).mu_index, mu3);
  auto comm = commutator_equations<Q>(pm);
  ASSERT_EQ(comm.size(), 1u);
  auto want = P::variable(3, mu1) * P::variable(3, mu2) - P::variable(3, mu3);
  EXPECT_TRUE(comm[0].poly == want || comm[0].poly == -want);
}

TEST(ParametricMatrices, CaprasseShape) {
  const std::size_t n = 4;
  std::vector<Exponent> E{{0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {2, 0, 0, 0}};
  auto pm = build_parametric_matrices(E, n);
  EXPECT_EQ(pm.mu_vars.size(), 12u);
  const Exponent x1sq{2, 0, 0, 0};
  for (const Exponent& t : {Exponent{0, 0, 2, 0}, Exponent{0, 0, 1, 1}, Exponent{0, 0, 0, 2}}) EXPECT_EQ(mu_of(pm, x1sq, t), pm.mu_vars.size());
  const auto& F = pm.E;
  const std::size_t one = idx(F, E[0]), a1 = idx(F, E[1]), a2 = idx(F, E[2]), a3 = idx(F, E[3]);
  // M1ᵗ: 1 → x1, x1 → x1², x2 → μ_{x1², x1x2}
  EXPECT_EQ(pm.entry(0, a1, one).kind, ParamEntry::one);
  EXPECT_EQ(pm.entry(0, a3, a1).kind, ParamEntry::one);
  EXPECT_EQ(pm.entry(0, a3, a2).mu_index, mu_of(pm, x1sq, {1, 1, 0, 0}));
  EXPECT_EQ(pm.entry(0, a2, a1).kind, ParamEntry::zero);
  // M3ᵗ first row: μ_{x1,x3}, μ_{x2,x3}, μ_{x1²,x3}
  EXPECT_EQ(pm.entry(2, a1, one).mu_index, mu_of(pm, {1, 0, 0, 0}, {0, 0, 1, 0}));
  EXPECT_EQ(pm.entry(2, a2, one).mu_index, mu_of(pm, {0, 1, 0, 0}, {0, 0, 1, 0}));
  EXPECT_EQ(pm.entry(2, a3, one).mu_index, mu_of(pm, x1sq, {0, 0, 1, 0}));
  EXPECT_EQ(pm.entry(2, a2, a1).kind, ParamEntry::zero);
}

TEST(ParametricMatrices, CaprasseCommutator23) {
  std::vector<Exponent> E{{0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {2, 0, 0, 0}};
  auto pm = build_parametric_matrices(E, 4);
  std::vector<Commutator<Q>> c23;
  for (auto& c : commutator_equations<Q>(pm))
    if (c.a == 1 && c.b == 2) c23.push_back(c);
  ASSERT_EQ(c23.size(), 1u);
  const std::size_t nv = pm.mu_vars.size();
  auto mu = [&](Exponent a, Exponent t) { return P::variable(nv, mu_of(pm, a, t)); };
  const Exponent x1{1, 0, 0, 0}, x2{0, 1, 0, 0}, x1sq{2, 0, 0, 0};
  // Both products carry the same sign: the entry vanishes at the Caprasse ν.
  auto want = mu(x1sq, {0, 1, 1, 0}) - mu(x1, {0, 0, 1, 0}) * mu(x1sq, {1, 1, 0, 0}) - mu(x2, {0, 0, 1, 0}) * mu(x1sq, {0, 2, 0, 0});
  EXPECT_TRUE(c23[0].poly == want || c23[0].poly == -want);
}

TEST(ParametricMatrices, RejectsBadE) {
  EXPECT_THROW(build_parametric_matrices({{0, 0}, {0, 2}}, 2), std::invalid_argument);
  EXPECT_THROW(build_parametric_matrices({{1, 0}}, 2), std::invalid_argument);
  auto pm = build_parametric_matrices({{1, 0}, {0, 0}}, 2);
  EXPECT_EQ(pm.E.front(), (Exponent{0, 0}));
}

TEST(NormalForm, DoubleRoot) {
  auto f = qsystem(defl::test::double_root);
  auto pm = build_parametric_matrices({{0, 0}, {0, 1}}, 2);
  auto ext = build_extended_system(f, pm);
  const std::string v = "z1 z2 m";
  ASSERT_EQ(ext.system.polys.size(), 4u);
  EXPECT_EQ(ext.system.polys[0], qpoly(v, "z1 + z2^2"));
  EXPECT_EQ(ext.system.polys[1], qpoly(v, "m + 2*z2"));
  EXPECT_EQ(ext.system.polys[2], qpoly(v, "z1^2 + z2^2"));
  EXPECT_EQ(ext.system.polys[3], qpoly(v, "2*m*z1 + 2*z2"));
  EXPECT_EQ(ext.commutator_count, 0u);
  EXPECT_TRUE(verify_simple(ext.system, {Q(0), Q(0), Q(0)}, 1e-8).simple);
}

TEST(NormalForm, TripleRootGenerators) {
  auto f = qsystem(defl::test::triple_root);
  auto pm = build_parametric_matrices({{0, 0}, {1, 0}, {0, 1}}, 2, MatrixPattern::triangular);
  auto ext = build_extended_system(f, pm);
  // construction order: mu[x1;x2] = μ2, mu[x2;x1^2] = μ1, mu[x2;x1*x2] = μ3
  const std::string v = "x1 x2 m2 m1 m3";
  std::vector<P> want{qpoly(v, "x1 - x2 + x1^2"), qpoly(v, "1 + 2*x1 - m2"), qpoly(v, "-1 + m1"), qpoly(v, "x1 - x2 + x2^2"), qpoly(v, "1 + (-1 + 2*x2)*m2"), qpoly(v, "-1 + 2*x2 + m2*m3"), qpoly(v, "m1*m2 - m3")};
  for (const auto& w : want) {
    bool found = false;
    for (const auto& p : ext.system.polys) found = found || p == w || p == -w;
    EXPECT_TRUE(found) << w.to_string({"x1", "x2", "m2", "m1", "m3"});
  }
  EXPECT_EQ(ext.system.polys.size(), 7u);
  EXPECT_EQ(ext.normal_form_count, 6u);
}

TEST(NormalForm, FirstRowIsInputAndCaprasseRow) {
  auto f = load_as<Complex>("caprasse.sys");
  std::vector<Exponent> E{{0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {2, 0, 0, 0}};
  auto pm = build_parametric_matrices(E, 4);
  const std::size_t nv = 4 + pm.mu_vars.size();
  for (const auto& p : f.polys) EXPECT_EQ(parametric_normal_form(p, pm, true)[0], p.embed(nv));
  auto nf = parametric_normal_form(f.polys[0], pm, true);
  const auto& row = nf[idx(pm.E, {2, 0, 0, 0})];
  const std::size_t m = 4 + mu_of(pm, {2, 0, 0, 0}, {0, 0, 1, 0});
  // coefficient of μ_{x1²,x3} alone
  std::vector<Polynomial<Complex>::Term> lin;
  int max_mu_degree = 0;
  for (const auto& t : row.terms()) {
    int mu_deg = 0;
    bool only_m = true;
    for (auto fc : t.exp.factors())
      if (fc.var >= 4) {
        mu_deg += int(fc.pow);
        only_m = only_m && fc.var == m && fc.pow == 1;
      }
    max_mu_degree = std::max(max_mu_degree, mu_deg);
    if (mu_deg == 1 && only_m) lin.push_back({t.exp - Exponent::unit(m), t.coeff});
  }
  auto coef = Polynomial<Complex>::from_terms(nv, lin);
  auto x = [&](std::size_t i) { return Polynomial<Complex>::variable(nv, i); };
  auto w = x(0).pow(3) - Complex(4) * x(0) * x(1).pow(2) - Complex(4) * x(0);
  EXPECT_EQ(coef, w);
  EXPECT_EQ(max_mu_degree, 2);
}

TEST(NormalForm, SubstitutedPoint) {
  auto f = qsystem(defl::test::double_root);
  auto pm = build_parametric_matrices({{0, 0}, {0, 1}}, 2);
  auto nf = parametric_normal_form(f.polys[0], pm, false, f.point);
  ASSERT_EQ(nf.size(), 2u);
  EXPECT_TRUE(nf[0].is_zero());
  EXPECT_EQ(nf[1], P::variable(1, 0));
}

TEST(ExtendedProperty, TrueStructureIsSimpleRoot) {
  check_true_structure(qsystem(defl::test::double_root), 1e-8);
  check_true_structure(qsystem(defl::test::triple_root), 1e-8);
  check_true_structure(load_as<Complex>("caprasse.sys"), 1e-8);
  check_true_structure(emit_family(2), 1e-8);
  check_true_structure(emit_family(3), 1e-8);
  check_true_structure(load_as<double>("sys3.sys"), 1e-8);
}

TEST(ExtendedProperty, StructurallyCommutingHasNoCommutators) {
  auto pm = build_parametric_matrices({{0, 0, 0}, {0, 0, 1}}, 3);
  EXPECT_TRUE(commutator_equations<Q>(pm).empty());
}
