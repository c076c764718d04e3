#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lbb/fespace.hpp"
#include "lbb/mesh.hpp"
#include "lbb/stokes.hpp"

namespace lbb {

struct ScenarioOptions {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  double eps = 1e-10;
  double r = 0.15;
  int levels = 0;  // 0 keeps the scenario default
  bool write_vtk = true;
};

/// Named scalar outcomes in insertion order.
struct ScenarioResult {
  std::string name;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> artifacts;

  void set(const std::string& key, double value);
  double get(const std::string& key) const;  // throws std::out_of_range
  bool has(const std::string& key) const;
};

std::vector<std::string> scenario_names();

/// Runs test1 ... test9 or q2q1q1, writing CSV/VTK files under out_dir and a
/// short summary to `log`. Throws std::invalid_argument on unknown names.
ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& opt, std::ostream& log);

/// Thresholds per scenario from an INI file: keys `min_<metric>` and
/// `max_<metric>` inside a section named after the scenario.
class Thresholds {
 public:
  static Thresholds load(const std::filesystem::path& path);
  static Thresholds parse(const std::string& text);
  /// Violations as readable messages; a metric named in the file but absent
  /// from the result is a violation too.
  std::vector<std::string> check(const ScenarioResult& result) const;

 private:
  struct Bound {
    std::string metric;
    bool is_min;
    double value;
  };
  std::vector<std::pair<std::string, std::vector<Bound>>> sections_;
};

/// Structure report with numeric oracle columns appended: for every combo
/// the local nullspace dimension and an agreement flag.
CsvTable oracle_report(const Mesh& mesh, const std::vector<FECombo>& combos, std::vector<std::string>* warnings);

/// Vertex fields of a solution for VTK output (vertex coefficients come
/// first in every dof numbering).
std::vector<Field> vertex_fields(const Mesh& mesh, const StokesSystem& sys, const Solution& sol);

}  // namespace lbb
