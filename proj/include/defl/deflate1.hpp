#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "defl/dual.hpp"
#include "defl/linalg.hpp"
#include "defl/poly.hpp"

namespace defl {

enum class Strategy { single, all };

struct BlockPartition {
  std::size_t r = 0;
  std::vector<std::size_t> row_perm, col_perm;  // first r entries select A
  RankResult rank;
};

template <class K>
Matrix<Polynomial<K>> jacobian(const PolySystem<K>& f) {
  Matrix<Polynomial<K>> J(f.polys.size(), f.nvars(), Polynomial<K>(f.nvars()));
  for (std::size_t i = 0; i < f.polys.size(); ++i)
    for (std::size_t j = 0; j < f.nvars(); ++j) J(i, j) = f.polys[i].diff(j);
  return J;
}

template <class K>
Matrix<K> jacobian_at(const PolySystem<K>& f, const std::vector<K>& x) {
  Matrix<K> J(f.polys.size(), f.nvars());
  for (std::size_t i = 0; i < f.polys.size(); ++i)
    for (std::size_t j = 0; j < f.nvars(); ++j) J(i, j) = f.polys[i].diff(j).eval(x);
  return J;
}

template <class K>
BlockPartition block_partition(const PolySystem<K>& f, const std::vector<K>& xi, double tol) {
  BlockPartition b;
  b.rank = numerical_rank(jacobian_at(f, xi), tol);
  b.r = b.rank.rank;
  b.row_perm = b.rank.row_perm;
  b.col_perm = b.rank.col_perm;
  return b;
}

// Λ = Σ_j lambda[j](x) ∂_j.
template <class K>
struct KernelDifferential {
  std::vector<Polynomial<K>> lambda;

  Polynomial<K> apply(const Polynomial<K>& p) const {
    Polynomial<K> acc(p.nvars());
    for (std::size_t j = 0; j < lambda.size(); ++j)
      if (!lambda[j].is_zero()) acc += lambda[j] * p.diff(j);
    return acc;
  }
};

template <class K>
struct KernelDifferentials {
  BlockPartition block;
  std::vector<KernelDifferential<K>> diffs;  // one per column outside A
};

// Cramer form: for a column b outside A, the coefficients are the cofactors
// of the last row of the bordered matrix [[A, B_b], [·, ·]], so that
// Λ_b(f_j) is the bordered minor with row j appended.
template <class K>
KernelDifferentials<K> kernel_differentials(const PolySystem<K>& f, const std::vector<K>& xi, double tol) {
  const std::size_t n = f.nvars();
  KernelDifferentials<K> out;
  out.block = block_partition(f, xi, tol);
  const std::size_t r = out.block.r;
  if (r == n) throw std::domain_error("Jacobian has full column rank: root is already simple");
  auto J = jacobian(f);
  const auto& R = out.block.row_perm;
  const auto& S = out.block.col_perm;
  Polynomial<K> detA = Polynomial<K>::constant(n, K(1));
  if (r > 0) {
    Matrix<Polynomial<K>> A(r, r, Polynomial<K>(n));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < r; ++k) A(i, k) = J(R[i], S[k]);
    detA = det(A);
  }
  for (std::size_t t = r; t < n; ++t) {
    const std::size_t b = S[t];
    KernelDifferential<K> d;
    d.lambda.assign(n, Polynomial<K>(n));
    d.lambda[b] = detA;
    for (std::size_t k = 0; k < r; ++k) {
      // [A | B_b] with column k removed.
      Matrix<Polynomial<K>> minor(r, r, Polynomial<K>(n));
      for (std::size_t i = 0; i < r; ++i) {
        std::size_t c = 0;
        for (std::size_t kk = 0; kk <= r; ++kk) {
          if (kk == k) continue;
          minor(i, c++) = kk < r ? J(R[i], S[kk]) : J(R[i], b);
        }
      }
      auto m = det(minor);
      d.lambda[S[k]] = ((r + k) % 2) ? -m : m;
    }
    out.diffs.push_back(std::move(d));
  }
  return out;
}

// Removes zeros, duplicates and exact scalar multiples, keeping first
// occurrences.
template <class K>
std::vector<Polynomial<K>> prune_polynomials(const std::vector<Polynomial<K>>& existing, std::vector<Polynomial<K>> added) {
  std::vector<Polynomial<K>> seen;
  for (const auto& p : existing)
    if (!p.is_zero()) seen.push_back(p.monic());
  std::vector<Polynomial<K>> kept;
  for (auto& p : added) {
    if (p.is_zero()) continue;
    auto m = p.monic();
    if (std::find(seen.begin(), seen.end(), m) != seen.end()) continue;
    seen.push_back(std::move(m));
    kept.push_back(std::move(p));
  }
  return kept;
}

template <class K>
struct DeflationStep {
  std::size_t rank_before = 0;
  std::size_t corank = 0;
  std::vector<std::size_t> i_set;  // kernel indices used, 0-based
  std::vector<long> weights;       // combination weights on the kernel set
  std::size_t raw_added = 0;
  std::vector<Polynomial<K>> added;
  double residual_added = 0;  // max |added(ξ̃)|
  std::size_t polys_after = 0;
};

// Appends Λ(f_j) for every j outside the block rows, where Λ is the
// weighted sum of the selected kernel differentials.
template <class K>
DeflationStep<K> deflate_once(PolySystem<K>& f, const std::vector<K>& xi, const std::vector<std::size_t>& i_set, const std::vector<long>& weights, double tol, bool combine) {
  auto kd = kernel_differentials(f, xi, tol);
  const std::size_t c = kd.diffs.size();
  if (i_set.empty()) throw std::invalid_argument("empty kernel index set");
  for (auto i : i_set)
    if (i >= c) throw std::invalid_argument("kernel index out of range");
  DeflationStep<K> step;
  step.rank_before = kd.block.r;
  step.corank = c;
  step.i_set = i_set;
  step.weights = weights;
  std::vector<KernelDifferential<K>> use;
  if (combine) {
    KernelDifferential<K> sum;
    sum.lambda.assign(f.nvars(), Polynomial<K>(f.nvars()));
    for (std::size_t t = 0; t < i_set.size(); ++t)
      for (std::size_t j = 0; j < f.nvars(); ++j) sum.lambda[j] += K(double(weights[t])) * kd.diffs[i_set[t]].lambda[j];
    use.push_back(std::move(sum));
  } else {
    for (auto i : i_set) use.push_back(kd.diffs[i]);
  }
  std::vector<bool> in_block(f.polys.size(), false);
  for (std::size_t i = 0; i < kd.block.r; ++i) in_block[kd.block.row_perm[i]] = true;
  std::vector<Polynomial<K>> added;
  for (const auto& d : use)
    for (std::size_t j = 0; j < f.polys.size(); ++j) {
      if (in_block[j]) continue;  // bordered minor with a repeated row
      added.push_back(d.apply(f.polys[j]));
    }
  step.raw_added = use.size() * (f.polys.size() - kd.block.r);
  step.added = prune_polynomials(f.polys, std::move(added));
  for (const auto& p : step.added) {
    step.residual_added = std::max(step.residual_added, magnitude(p.eval(xi)));
    f.polys.push_back(p);
  }
  step.polys_after = f.polys.size();
  return step;
}

template <class K>
struct DeflationReport {
  std::vector<DeflationStep<K>> steps;
  std::vector<PolySystem<K>> systems;  // systems[k] is the input of step k; last is the result
  bool simple = false;
  std::size_t final_rank = 0;
  std::uint64_t seed = 0;
};

template <class K>
std::pair<PolySystem<K>, DeflationReport<K>> deflate_until_simple(PolySystem<K> f, const std::vector<K>& xi, double tol, std::size_t max_iter, Strategy strategy, std::uint64_t seed = 0) {
  DeflationReport<K> rep;
  rep.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t it = 0;; ++it) {
    auto b = block_partition(f, xi, tol);
    rep.final_rank = b.r;
    rep.systems.push_back(f);
    if (b.r == f.nvars()) {
      rep.simple = true;
      break;
    }
    if (it == max_iter) throw NonConvergence("determinantal deflation did not reach a simple root in " + std::to_string(max_iter) + " iterations");
    const std::size_t c = f.nvars() - b.r;
    std::vector<std::size_t> idx(c);
    for (std::size_t i = 0; i < c; ++i) idx[i] = i;
    std::vector<long> w(c, 1);
    if (strategy == Strategy::single && c > 1) {
      // A generic element of the kernel; a coordinate direction may fail
      // to reduce the order when the Jacobian vanishes identically.
      for (auto& x : w) {
        auto v = rng();
        x = long(1 + (v >> 1) % 5) * ((v & 1) ? -1 : 1);
      }
    }
    rep.steps.push_back(deflate_once(f, xi, idx, w, tol, strategy == Strategy::single));
  }
  return {std::move(f), std::move(rep)};
}

}  // namespace defl
