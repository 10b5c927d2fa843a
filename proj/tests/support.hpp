#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "defl/parse.hpp"

namespace defl::test {

inline LoadedSystem load_file(const std::string& name) {
  std::ifstream in(std::string(DEFL_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing data file " + name);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_system(buf.str());
}

template <class K>
PolySystem<K> load_as(const std::string& name) {
  return std::get<PolySystem<K>>(load_file(name).system);
}

// Parses one polynomial over Q in the given variables.
inline Polynomial<Rational> qpoly(const std::string& vars, const std::string& expr) {
  auto s = std::get<PolySystem<Rational>>(parse_system("vars " + vars + "\npoly " + expr + "\n").system);
  return s.polys.front();
}

inline PolySystem<Rational> qsystem(const std::string& text) { return std::get<PolySystem<Rational>>(parse_system(text).system); }

inline const char* double_root = "vars x1 x2\npoly x1 + x2^2\npoly x1^2 + x2^2\npoint 0 0\n";
inline const char* triple_root = "vars x1 x2\npoly x1 - x2 + x1^2\npoly x1 - x2 + x2^2\npoint 0 0\n";

}  // namespace defl::test
