#pragma once

#include <string>
#include <vector>

#include "lbb/macroelement.hpp"
#include "lbb/mesh.hpp"

namespace lbb {

/// Axis x: edges with |dx| < h_r count as almost vertical and vertices move
/// in x (target: uniformly x-unstructured). Axis y: the transposed rule.
struct UnstructureConfig {
  double r = 0.15;
  Axis axis = Axis::y;
  double h = 0.0;  // mesh size; <= 0 means max cell diameter of the input
  double h_r() const { return r * h; }
};

struct UniformityReport {
  bool pass = false;
  std::vector<int> offending;     // interior vertices with two or more near-aligned edges
  double min_second_offset = 0.0; // min over macros of the second smallest |offset| / h
};

UniformityReport verify_uniform(const Mesh& mesh, const UnstructureConfig& cfg);

struct UnstructureLog {
  int passes = 0;
  int moves = 0;
  std::vector<std::string> warnings;  // scaled-back moves
};

/// The threshold h_r = r h stays tied to the input mesh size; verify the
/// result with the same h (moves enlarge cells slightly, so a fresh h from
/// the output gives a marginally larger threshold).
/// Vertex post-processing pass over interior vertices in index order,
/// repeated (at most 5 passes) until verify_uniform succeeds. Throws
/// std::runtime_error if it still fails.
Mesh apply_algorithm1(const Mesh& mesh, UnstructureConfig cfg, UnstructureLog* log = nullptr);

}  // namespace lbb
