#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lbb/macroelement.hpp"

namespace lbb {

/// Equal-area hexagon around the origin with ring (1,1), (0,2), (-1,1),
/// (-1,-1), (0,-2), (1,-1): no ring vertex shares the center's y, two share
/// its x, and the cotangent sum vanishes.
MacroElement hexagon_macro();

enum class AlignMode { none, one, two };

/// Random star: n_v in [min_n, max_n], angular gaps in [0.1, 0.9 pi], radii
/// in [0.5, 1.5]. `align` forces ring vertices onto the center's line
/// y = y0 (axis y) or x = x0 (axis x).
struct RandomMacroOptions {
  int min_n = 4;
  int max_n = 8;
  AlignMode align = AlignMode::none;
  Axis axis = Axis::y;
};

MacroElement random_macro_2d(std::mt19937_64& rng, const RandomMacroOptions& opt = {});

/// Random even star with no aligned vertex whose cotangent sum (for `axis`)
/// vanishes: one ring vertex is slid along its ray to the root. Retries
/// until a root exists.
MacroElement s_zero_macro_2d(std::mt19937_64& rng, int n_v, Axis axis = Axis::y);

/// Tetrahedral star around the origin built from two poles and two rings of
/// vertices (upper z > 0, lower z < 0). Interior faces containing the z axis
/// appear exactly at angles shared by both rings when the poles are on the
/// axis; `pole_jitter` > 0 moves the poles off the axis. `vertical` rotates
/// the construction so that its z axis becomes the given axis (cyclic shift
/// of coordinates).
struct TetStarSpec {
  std::vector<double> upper_angles;
  std::vector<double> lower_angles;
  double pole_jitter = 0.0;
  Axis vertical = Axis::z;
};

MacroElement tet_star(const TetStarSpec& spec, std::mt19937_64& rng);

enum class StarKind { no_wall, one_wall, two_walls, two_walls_opposite, three_walls, jittered_poles };

std::string to_string(StarKind k);

/// Random spec of the given kind (walls are the shared angles).
TetStarSpec random_star_spec(StarKind kind, std::mt19937_64& rng, Axis vertical = Axis::z);

/// Star split by the plane through the center normal to `normal`.
TetStarSpec split_star_spec(Axis normal, std::mt19937_64& rng);

}  // namespace lbb
