// Command-line front end: deflate a singular root read from a system file.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "defl/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deflate an isolated singular root of a polynomial system"};
  std::string method = "dual-only", input, strategy = "single", output = "text";
  defl::RunConfig cfg;
  int family_n = 0;
  bool least_squares = false;
  app.add_option("--method", method, "determinantal | mu | dual-only")->check(CLI::IsMember({"determinantal", "mu", "dual-only"}));
  app.add_option("--input", input, "system file");
  app.add_option("--tol", cfg.tol, "relative rank tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "seed for random combinations");
  app.add_option("--max-iter", cfg.max_iter, "iteration limit")->check(CLI::Range(std::size_t(1), std::size_t(1) << 30));
  app.add_option("--strategy", strategy, "single | all")->check(CLI::IsMember({"single", "all"}));
  app.add_flag("--symbolic-point", cfg.symbolic_point, "keep the point symbolic in the extended system");
  app.add_flag("--least-squares", least_squares, "Gauss-Newton on the full extended system");
  app.add_option("--family-n", family_n, "use the breadth-two family with n variables")->check(CLI::Range(2, 64));
  app.add_option("--output", output, "text | json")->check(CLI::IsMember({"text", "json"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : defl::exit_parse;
  }
  cfg.method = method == "mu" ? defl::Method::mu : method == "determinantal" ? defl::Method::determinantal : defl::Method::dual_only;
  cfg.strategy = strategy == "all" ? defl::Strategy::all : defl::Strategy::single;
  cfg.newton = least_squares ? defl::NewtonMode::least_squares : defl::NewtonMode::square;

  defl::LoadedSystem sys;
  try {
    if (family_n > 0) {
      sys.system = defl::emit_family(std::size_t(family_n));
    } else {
      if (input.empty()) throw std::invalid_argument("--input or --family-n is required");
      std::ifstream in(input);
      if (!in) throw std::invalid_argument("cannot open " + input);
      std::stringstream buf;
      buf << in.rdbuf();
      sys = defl::parse_system(buf.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return defl::exit_parse;
  }

  try {
    auto res = defl::run(cfg, sys);
    if (output == "json")
      std::cout << res.report.dump(2) << "\n";
    else
      std::cout << defl::render_text(res.report);
    return res.exit_code;
  } catch (const defl::NonConvergence& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return defl::exit_nonconvergence;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return defl::exit_numeric;
  }
}
