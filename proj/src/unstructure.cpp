#include "lbb/unstructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbb {

namespace {

constexpr int kMaxPasses = 5;
// offsets equal to h_r up to rounding do not count as near-aligned
constexpr double kStrict = 1.0 - 1e-12;

struct Adjacency {
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> cells;
};

Adjacency adjacency(const Mesh& mesh) {
  Adjacency adj;
  adj.neighbors.resize(mesh.num_vertices());
  adj.cells.resize(mesh.num_vertices());
  for (const auto& e : mesh_edges(mesh)) {
    adj.neighbors[e[0]].push_back(e[1]);
    adj.neighbors[e[1]].push_back(e[0]);
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i < mesh.verts_per_cell(); ++i) adj.cells[mesh.cells[c][i]].push_back(static_cast<int>(c));
  return adj;
}

int axis_index(Axis a) { return a == Axis::x ? 0 : 1; }

void resolve_h(const Mesh& mesh, UnstructureConfig& cfg) {
  if (!(cfg.r > 0.0 && cfg.r < 1.0)) throw std::invalid_argument("unstructuring factor r must lie in (0, 1)");
  if (cfg.axis == Axis::z) throw std::invalid_argument("unstructure: axis must be x or y");
  if (cfg.h <= 0.0) cfg.h = metrics(mesh).h;
}

}  // namespace

UniformityReport verify_uniform(const Mesh& mesh, const UnstructureConfig& in) {
  if (mesh.dim != 2) throw std::invalid_argument("verify_uniform: 2D mesh required");
  UnstructureConfig cfg = in;
  resolve_h(mesh, cfg);
  const int ax = axis_index(cfg.axis);
  const double hr = cfg.h_r();
  const auto adj = adjacency(mesh);
  const auto boundary = boundary_vertex_mask(mesh);
  UniformityReport rep;
  rep.min_second_offset = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (boundary[v] || adj.neighbors[v].size() < 2) continue;
    std::vector<double> off;
    for (int w : adj.neighbors[v]) off.push_back(std::abs(mesh.vertices[w][ax] - mesh.vertices[v][ax]));
    std::sort(off.begin(), off.end());
    rep.min_second_offset = std::min(rep.min_second_offset, off[1] / cfg.h);
    if (off[1] < hr * kStrict) rep.offending.push_back(static_cast<int>(v));
  }
  if (!std::isfinite(rep.min_second_offset)) rep.min_second_offset = 0.0;
  rep.pass = rep.offending.empty();
  return rep;
}

Mesh apply_algorithm1(const Mesh& mesh, UnstructureConfig cfg, UnstructureLog* log) {
  if (mesh.dim != 2 || mesh.kind != CellKind::triangle)
    throw std::invalid_argument("apply_algorithm1: 2D triangle mesh required");
  resolve_h(mesh, cfg);
  const int ax = axis_index(cfg.axis);
  Mesh out = mesh;
  const auto adj = adjacency(mesh);
  const auto boundary = boundary_vertex_mask(mesh);
  std::vector<double> original(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) original[c] = mesh.measure(c);
  UnstructureLog local;
  UnstructureLog& lg = log ? *log : local;

  auto cells_valid = [&](int v) {
    for (int c : adj.cells[v])
      if (out.signed_measure(c) < 1e-3 * original[c]) return false;
    return true;
  };

  for (int pass = 0; pass < kMaxPasses; ++pass) {
    if (verify_uniform(out, cfg).pass) break;
    const double hr = cfg.h_r();
    ++lg.passes;
    for (std::size_t v = 0; v < out.num_vertices(); ++v) {
      if (boundary[v]) continue;
      const auto& nb = adj.neighbors[v];
      for (int guard = 0; guard < 8; ++guard) {
        // first near-aligned edge that has a near-aligned successor
        double di = 0.0;
        bool trigger = false;
        for (std::size_t i = 0; i < nb.size() && !trigger; ++i) {
          const double d = out.vertices[nb[i]][ax] - out.vertices[v][ax];
          if (std::abs(d) >= hr * kStrict) continue;
          for (std::size_t j = i + 1; j < nb.size(); ++j)
            if (std::abs(out.vertices[nb[j]][ax] - out.vertices[v][ax]) < hr * kStrict) {
              trigger = true;
              di = d;
              break;
            }
        }
        if (!trigger) break;
        double shift = di > 0 ? -(hr - di) : (hr + di);
        const double x0 = out.vertices[v][ax];
        int halvings = 0;
        out.vertices[v][ax] = x0 + shift;
        while (!cells_valid(static_cast<int>(v)) && halvings < 30) {
          shift *= 0.5;
          ++halvings;
          out.vertices[v][ax] = x0 + shift;
        }
        if (halvings == 30) out.vertices[v][ax] = x0;
        if (halvings > 0)
          lg.warnings.push_back("vertex " + std::to_string(v) + ": move scaled back " + std::to_string(halvings) +
                                " times to keep cells valid");
        ++lg.moves;
        if (halvings > 0) break;
      }
    }
  }
  if (!verify_uniform(out, cfg).pass)
    throw std::runtime_error("apply_algorithm1: mesh still not uniformly unstructured after " +
                             std::to_string(kMaxPasses) + " passes");
  return out;
}

}  // namespace lbb
