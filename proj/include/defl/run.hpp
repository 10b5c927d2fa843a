#pragma once

#include <chrono>
#include <cstdint>
#include <sstream>
#include <string>

#include <json.hpp>

#include "defl/deflate1.hpp"
#include "defl/deflate_mu.hpp"
#include "defl/dual.hpp"
#include "defl/newton.hpp"
#include "defl/parse.hpp"

namespace defl {

enum class Method { determinantal, mu, dual_only };

struct RunConfig {
  Method method = Method::dual_only;
  double tol = 1e-8;
  std::size_t max_iter = 50;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::single;
  bool symbolic_point = false;
  NewtonMode newton = NewtonMode::square;
};

enum ExitCode { exit_ok = 0, exit_parse = 1, exit_numeric = 2, exit_nonconvergence = 3 };

struct RunOutcome {
  nlohmann::json report;
  int exit_code = exit_ok;
};

namespace detail {

using nlohmann::json;

inline json scalar_json(const Rational& x) { return x.get_str(); }
inline json scalar_json(double x) { return x; }
inline json scalar_json(const Complex& x) { return json{{"re", x.real()}, {"im", x.imag()}}; }

inline json exponent_json(const Exponent& e, std::size_t n) { return e.dense(n); }

template <class K>
json vector_json(const std::vector<K>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(scalar_json(x));
  return a;
}

template <class N>
json trace_json(const NewtonTrace<N>& tr) {
  json a = json::array();
  for (std::size_t k = 0; k < tr.iterates.size(); ++k) {
    const auto& it = tr.iterates[k];
    a.push_back({{"iteration", k}, {"point", vector_json(it.point)}, {"residual", it.residual}, {"step", it.step}});
  }
  return a;
}

template <class K>
json polys_json(const PolySystem<K>& s) {
  json a = json::array();
  for (const auto& p : s.polys) a.push_back(p.to_string(s.varnames));
  return a;
}

template <class K>
json structure_json(const MultiplicityStructure<K>& ms) {
  json r;
  r["multiplicity"] = ms.delta;
  r["nil_index"] = ms.nil_index;
  r["breadth"] = breadth(ms);
  r["kernel_dims"] = ms.kernel_dims;
  json E = json::array();
  for (const auto& a : ms.E) E.push_back(exponent_json(a, ms.nvars));
  r["E"] = E;
  json basis = json::array(), nu = json::array();
  for (std::size_t i = 0; i < ms.delta; ++i) {
    json terms = json::array();
    for (const auto& t : ms.dual[i].coeffs.terms()) {
      terms.push_back({{"exponent", exponent_json(t.exp, ms.nvars)}, {"coefficient", scalar_json(t.coeff)}});
      if (std::find(ms.E.begin(), ms.E.end(), t.exp) == ms.E.end())
        nu.push_back({{"alpha", exponent_json(ms.E[i], ms.nvars)}, {"beta", exponent_json(t.exp, ms.nvars)}, {"value", scalar_json(t.coeff)}});
    }
    basis.push_back(terms);
  }
  r["dual_basis"] = basis;
  r["nu"] = nu;
  return r;
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

template <class K>
RunOutcome run_typed(const RunConfig& cfg, const PolySystem<K>& sys, const LoadedSystem& loaded) {
  using N = numeric_t<K>;
  RunOutcome out;
  json& rep = out.report;
  rep["schema"] = 1;
  rep["field"] = scalar_traits<K>::name;
  rep["vars"] = sys.varnames;
  rep["tol"] = cfg.tol;
  json timings = json::object();
  auto clock = std::chrono::steady_clock::now;
  const std::size_t n = sys.nvars();

  if (cfg.method == Method::dual_only) {
    rep["method"] = "dual-only";
    if (!sys.has_point()) throw std::invalid_argument("dual-only needs a point");
    auto t0 = clock();
    auto ms = dual_space(sys, sys.point, cfg.tol);
    timings["dual"] = ms_since(t0);
    rep.update(structure_json(ms));
    rep["counts"] = {{"polys", sys.polys.size()}, {"vars", n}, {"iterations", 0}};
    rep["status"] = "ok";
  } else if (cfg.method == Method::determinantal) {
    rep["method"] = "determinantal";
    rep["strategy"] = cfg.strategy == Strategy::single ? "single" : "all";
    rep["seed"] = cfg.seed;
    if (!sys.has_point()) throw std::invalid_argument("determinantal deflation needs a point");
    auto t0 = clock();
    auto [g, dr] = deflate_until_simple(sys, sys.point, cfg.tol, cfg.max_iter, cfg.strategy, cfg.seed);
    timings["deflate"] = ms_since(t0);
    json steps = json::array();
    for (const auto& s : dr.steps) {
      json added = json::array();
      for (const auto& p : s.added) added.push_back(p.to_string(sys.varnames));
      steps.push_back({{"rank", s.rank_before}, {"corank", s.corank}, {"weights", s.weights}, {"raw_added", s.raw_added}, {"added", added}, {"residual_added", s.residual_added}, {"polys_after", s.polys_after}});
    }
    rep["steps"] = steps;
    t0 = clock();
    auto chk = verify_simple(g, sys.point, cfg.tol);
    timings["verify"] = ms_since(t0);
    rep["deflated_system"] = polys_json(g);
    rep["counts"] = {{"polys", g.polys.size()}, {"vars", n}, {"iterations", dr.steps.size()}};
    rep["verify"] = {{"simple", chk.simple}, {"residual", chk.residual}, {"rank", chk.rank}, {"cols", chk.cols}};
    rep["status"] = chk.simple ? "simple" : "not-simple";
    out.exit_code = chk.simple ? exit_ok : exit_nonconvergence;
  } else {
    rep["method"] = "mu";
    rep["seed"] = cfg.seed;
    const bool user_E = !loaded.basis.empty();
    std::vector<Exponent> E;
    MultiplicityStructure<K> ms;
    auto t0 = clock();
    if (user_E) {
      E = loaded.basis;
    } else {
      if (!sys.has_point()) throw std::invalid_argument("mu deflation needs a point or a basis line");
      ms = dual_space(sys, sys.point, cfg.tol);
      timings["dual"] = ms_since(t0);
      rep.update(structure_json(ms));
      E = ms.E;
    }
    t0 = clock();
    auto pm = build_parametric_matrices(E, n, user_E ? MatrixPattern::triangular : MatrixPattern::orthogonal);
    auto ext = build_extended_system(sys, pm, true);
    timings["extend"] = ms_since(t0);
    json Ej = json::array();
    for (const auto& a : pm.E) Ej.push_back(exponent_json(a, n));
    rep["E"] = Ej;
    rep["pattern"] = user_E ? "triangular" : "orthogonal";
    json origins = json::array();
    for (const auto& o : ext.origin) origins.push_back(o.to_string());
    rep["deflated_system"] = polys_json(ext.system);
    rep["origins"] = origins;
    rep["mu_count"] = pm.mu_vars.size();
    rep["extended_counts"] = {{"raw", ext.raw_count}, {"pruned", ext.system.polys.size()}, {"normal_form", ext.normal_form_count}, {"commutator", ext.commutator_count}};
    rep["counts"] = {{"polys", ext.system.polys.size()}, {"vars", ext.system.nvars()}, {"iterations", 0}};
    if (cfg.symbolic_point && !sys.has_point()) {
      rep["status"] = "generators";
    } else {
      if (!sys.has_point()) throw std::invalid_argument("refinement needs a point");
      std::vector<N> start;
      if (!loaded.start.empty()) {
        if (loaded.start.size() != ext.system.nvars()) throw std::invalid_argument("start line must give " + std::to_string(ext.system.nvars()) + " values");
        for (const auto& v : loaded.start) start.push_back(scalar_cast<N>(v));
      } else {
        if (user_E) throw std::invalid_argument("a user basis needs a start line for the parameters");
        for (const auto& v : sys.point) start.push_back(scalar_cast<N>(v));
        for (const auto& v : mu_values(pm, ms)) start.push_back(scalar_cast<N>(v));
      }
      NewtonOptions opt;
      opt.rank_tol = cfg.tol;
      opt.max_iter = cfg.max_iter;
      t0 = clock();
      auto rr = refine_with_structure(ext, start, opt, cfg.seed, cfg.newton, user_E ? -1 : ms.nil_index);
      timings["newton"] = ms_since(t0);
      rep["newton_mode"] = cfg.newton == NewtonMode::square ? "square" : "least-squares";
      rep["seeds_tried"] = rr.seeds_tried;
      rep["newton_trace"] = trace_json(rr.trace);
      rep["quadratic_flag"] = rr.trace.quadratic_flag;
      rep["order_estimate"] = rr.trace.order_estimate;
      rep["refined_point"] = vector_json(rr.point);
      json mus = json::array();
      for (std::size_t l = 0; l < pm.mu_vars.size(); ++l) mus.push_back({{"name", ext.system.varnames[n + l]}, {"value", scalar_json(rr.mu[l])}});
      rep["refined_mu"] = mus;
      json rest = json::array();
      for (const auto& [key, v] : rr.nu_rest) rest.push_back({{"alpha", exponent_json(pm.E[key.first], n)}, {"beta", exponent_json(key.second, n)}, {"value", scalar_json(v)}});
      rep["refined_nu_rest"] = rest;
      t0 = clock();
      auto chk = verify_simple(CompiledSystem<N>(ext.system.polys, ext.system.nvars()), rr.trace.last(), cfg.tol);
      timings["verify"] = ms_since(t0);
      rep["verify"] = {{"simple", chk.simple}, {"residual", chk.residual}, {"rank", chk.rank}, {"cols", chk.cols}};
      rep["counts"]["iterations"] = rr.trace.steps();
      bool ok = rr.trace.converged && chk.simple;
      rep["status"] = ok ? "simple" : (rr.trace.converged ? "not-simple" : "no-convergence");
      out.exit_code = ok ? exit_ok : exit_nonconvergence;
    }
  }
  rep["timings_ms"] = timings;
  return out;
}

}  // namespace detail

inline RunOutcome run(const RunConfig& cfg, const LoadedSystem& loaded) {
  return std::visit([&](const auto& sys) { return detail::run_typed(cfg, sys, loaded); }, loaded.system);
}

// Plain-text rendering of a report.
inline std::string render_text(const nlohmann::json& r) {
  std::ostringstream o;
  auto num = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  o << "method: " << r.value("method", "") << "  field: " << r.value("field", "") << "  status: " << r.value("status", "") << "\n";
  if (r.contains("multiplicity")) o << "multiplicity: " << r["multiplicity"] << "  nil-index: " << r["nil_index"] << "  breadth: " << r["breadth"] << "\n";
  if (r.contains("E")) {
    o << "E:";
    for (const auto& e : r["E"]) o << " " << e.dump();
    o << "\n";
  }
  if (r.contains("nu"))
    for (const auto& e : r["nu"]) o << "  nu " << e["alpha"].dump() << " " << e["beta"].dump() << " = " << num(e["value"]) << "\n";
  if (r.contains("steps")) {
    std::size_t k = 0;
    for (const auto& s : r["steps"]) o << "iteration " << ++k << ": rank " << s["rank"] << ", added " << s["added"].size() << ", polys " << s["polys_after"] << "\n";
  }
  if (r.contains("extended_counts"))
    o << "extended system: " << r["extended_counts"]["pruned"] << " polys (" << r["extended_counts"]["raw"] << " before pruning), " << r["mu_count"] << " parameters\n";
  if (r.contains("deflated_system"))
    for (const auto& p : r["deflated_system"]) o << "  " << p.get<std::string>() << "\n";
  if (r.contains("newton_trace")) {
    for (const auto& it : r["newton_trace"]) {
      o << "  " << it["iteration"] << ":";
      for (const auto& x : it["point"]) o << " " << num(x);
      o << "  |F|=" << it["residual"] << "\n";
    }
    o << "quadratic: " << r["quadratic_flag"] << "\n";
  }
  if (r.contains("counts")) o << "polys: " << r["counts"]["polys"] << "  vars: " << r["counts"]["vars"] << "  iterations: " << r["counts"]["iterations"] << "\n";
  if (r.contains("verify")) o << "simple: " << r["verify"]["simple"] << " (rank " << r["verify"]["rank"] << "/" << r["verify"]["cols"] << ", residual " << r["verify"]["residual"] << ")\n";
  return o.str();
}

}  // namespace defl
