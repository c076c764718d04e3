#include "lbb/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lbb {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

// n sorted angles in [0, 2pi) with every cyclic gap in [lo, hi]
std::vector<double> random_angles(std::mt19937_64& rng, int n, double lo, double hi) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> gaps(n);
    double total = 0.0;
    for (auto& g : gaps) total += (g = uniform(rng, 0.0, 1.0));
    bool ok = true;
    for (auto& g : gaps) {
      g *= kTwoPi / total;
      ok = ok && g >= lo && g <= hi;
    }
    if (!ok) continue;
    std::vector<double> a(n);
    double t = uniform(rng, 0.0, kTwoPi);
    for (int i = 0; i < n; ++i) {
      a[i] = std::fmod(t, kTwoPi);
      t += gaps[i];
    }
    std::sort(a.begin(), a.end());
    return a;
  }
  throw std::runtime_error("random_angles: no admissible configuration");
}

bool max_gap_below_pi(std::vector<double> a) {
  std::sort(a.begin(), a.end());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double next = i + 1 < a.size() ? a[i + 1] : a[0] + kTwoPi;
    if (next - a[i] >= kPi - 1e-3) return false;
  }
  return true;
}

double angle_distance(double x, double y) {
  const double d = std::fmod(std::abs(x - y), kTwoPi);
  return std::min(d, kTwoPi - d);
}

Point rotate_axes(const Point& p, Axis vertical) {
  // cyclic shift taking the construction's z axis to `vertical`
  const int s = (static_cast<int>(vertical) + 1) % 3;
  Point q{};
  for (int k = 0; k < 3; ++k) q[(k + s) % 3] = p[k];
  return q;
}

}  // namespace

MacroElement hexagon_macro() {
  return make_macro_2d({0, 0, 0}, {{1, 1, 0}, {0, 2, 0}, {-1, 1, 0}, {-1, -1, 0}, {0, -2, 0}, {1, -1, 0}});
}

MacroElement random_macro_2d(std::mt19937_64& rng, const RandomMacroOptions& opt) {
  const int ax = opt.axis == Axis::x ? 0 : 1;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int n = std::uniform_int_distribution<int>(opt.min_n, opt.max_n)(rng);
    if (opt.align == AlignMode::two && n < 4) continue;
    auto ang = random_angles(rng, n, 0.1, 0.9 * kPi);
    // aligned directions: angle 0 / pi for axis y, pi/2 / 3pi/2 for axis x
    const double base = ax == 1 ? 0.0 : kPi / 2;
    if (opt.align != AlignMode::none) {
      ang[0] = base;
      if (opt.align == AlignMode::two) ang[n / 2] = base + kPi;
      std::sort(ang.begin(), ang.end());
      bool ok = max_gap_below_pi(ang);
      for (int i = 0; i < n && ok; ++i) ok = angle_distance(ang[i], ang[(i + 1) % n]) > 0.05;
      if (!ok) continue;
    }
    std::vector<Point> ring;
    for (double a : ang) {
      const double r = uniform(rng, 0.5, 1.5);
      Point p{r * std::cos(a), r * std::sin(a), 0.0};
      // snap aligned vertices onto the center's line exactly
      if (opt.align != AlignMode::none && (angle_distance(a, base) < 1e-12 || angle_distance(a, base + kPi) < 1e-12))
        p[ax] = 0.0;
      ring.push_back(p);
    }
    try {
      return make_macro_2d({0, 0, 0}, ring);
    } catch (const std::exception&) {
      continue;
    }
  }
  throw std::runtime_error("random_macro_2d: no admissible configuration");
}

MacroElement s_zero_macro_2d(std::mt19937_64& rng, int n_v, Axis axis) {
  if (n_v < 4 || n_v % 2) throw std::invalid_argument("s_zero_macro_2d: n_v must be even and >= 4");
  const int ax = axis == Axis::x ? 0 : 1;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto ang = random_angles(rng, n_v, 0.1, 0.9 * kPi);
    std::vector<Point> ring;
    bool ok = true;
    for (double a : ang) {
      const double r = uniform(rng, 0.5, 1.5);
      ring.push_back({r * std::cos(a), r * std::sin(a), 0.0});
      ok = ok && std::abs(ring.back()[ax]) > 0.05 * r;
    }
    if (!ok) continue;
    // S is affine in 1/r for the slid vertex: S(r) = A + B / r
    const Point dir = ring[0];
    auto s_at = [&](double t) {
      auto rr = ring;
      for (int k = 0; k < 2; ++k) rr[0][k] = dir[k] * t;
      return s_condition(make_macro_2d({0, 0, 0}, rr), axis);
    };
    try {
      const double s1 = s_at(1.0), s2 = s_at(2.0);
      const double B = 2.0 * (s1 - s2), A = s1 - B;
      if (A == 0.0) continue;
      const double t = -B / A;
      if (!(t > 0.3 && t < 3.0)) continue;
      for (int k = 0; k < 2; ++k) ring[0][k] = dir[k] * t;
      auto m = make_macro_2d({0, 0, 0}, ring);
      if (std::abs(s_condition(m, axis)) / s_scale(m) > 1e-12) continue;
      return m;
    } catch (const std::exception&) {
      continue;
    }
  }
  throw std::runtime_error("s_zero_macro_2d: no admissible configuration");
}

MacroElement tet_star(const TetStarSpec& spec, std::mt19937_64& rng) {
  const auto& U = spec.upper_angles;
  const auto& L = spec.lower_angles;
  if (U.size() < 3 || L.size() < 3) throw std::invalid_argument("tet_star: each ring needs at least 3 vertices");
  if (!std::is_sorted(U.begin(), U.end()) || !std::is_sorted(L.begin(), L.end()))
    throw std::invalid_argument("tet_star: ring angles must be sorted");
  if (!max_gap_below_pi(U) || !max_gap_below_pi(L)) throw std::invalid_argument("tet_star: angular gap >= pi");
  for (int attempt = 0; attempt < 100; ++attempt) {
    Mesh m;
    m.dim = 3;
    m.kind = CellKind::tetrahedron;
    auto add = [&](Point p) {
      m.vertices.push_back(rotate_axes(p, spec.vertical));
      return static_cast<int>(m.vertices.size()) - 1;
    };
    const int q0 = add({0, 0, 0});
    const double j = spec.pole_jitter;
    const int N = add({j * uniform(rng, -1, 1), j * uniform(rng, -1, 1), uniform(rng, 0.8, 1.2)});
    const int S = add({j * uniform(rng, -1, 1), j * uniform(rng, -1, 1), -uniform(rng, 0.8, 1.2)});
    std::vector<int> up, lo;
    for (double a : U) {
      const double r = uniform(rng, 0.6, 1.4);
      up.push_back(add({r * std::cos(a), r * std::sin(a), uniform(rng, 0.3, 0.8)}));
    }
    for (double a : L) {
      const double r = uniform(rng, 0.6, 1.4);
      lo.push_back(add({r * std::cos(a), r * std::sin(a), -uniform(rng, 0.3, 0.8)}));
    }
    const int nu = static_cast<int>(up.size()), nl = static_cast<int>(lo.size());
    std::vector<std::array<int, 3>> surface;
    for (int i = 0; i < nu; ++i) surface.push_back({N, up[i], up[(i + 1) % nu]});
    for (int i = 0; i < nl; ++i) surface.push_back({S, lo[(i + 1) % nl], lo[i]});
    // zipper the band by angle, both rings unrolled from the smaller first angle
    const double start = std::min(U[0], L[0]);
    auto unrolled = [&](const std::vector<double>& a, int k) {
      const int n = static_cast<int>(a.size());
      double t = a[k % n] + kTwoPi * (k / n);
      return t < start ? t + kTwoPi : t;
    };
    int iu = 0, il = 0;
    while (iu < nu || il < nl) {
      const bool advance_u = il == nl || (iu < nu && unrolled(U, iu + 1) <= unrolled(L, il + 1));
      if (advance_u) {
        surface.push_back({up[iu % nu], lo[il % nl], up[(iu + 1) % nu]});
        ++iu;
      } else {
        surface.push_back({up[iu % nu], lo[il % nl], lo[(il + 1) % nl]});
        ++il;
      }
    }
    bool valid = true;
    for (const auto& t : surface) {
      m.cells.push_back({q0, t[0], t[1], t[2]});
      if (m.signed_measure(m.cells.size() - 1) <= 1e-6) valid = false;
    }
    if (!valid) continue;
    m.finalize();
    check_conforming(m);
    return macro_at(m, q0);
  }
  throw std::runtime_error("tet_star: could not build a valid star");
}

std::string to_string(StarKind k) {
  switch (k) {
    case StarKind::no_wall: return "no-wall";
    case StarKind::one_wall: return "one-wall";
    case StarKind::two_walls: return "two-walls";
    case StarKind::two_walls_opposite: return "two-walls-opposite";
    case StarKind::three_walls: return "three-walls";
    case StarKind::jittered_poles: return "jittered-poles";
  }
  return "?";
}

TetStarSpec random_star_spec(StarKind kind, std::mt19937_64& rng, Axis vertical) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> walls;
    const double w0 = uniform(rng, 0.0, kTwoPi);
    switch (kind) {
      case StarKind::no_wall:
      case StarKind::jittered_poles: break;
      case StarKind::one_wall: walls = {w0}; break;
      case StarKind::two_walls: walls = {w0, w0 + uniform(rng, 0.6, kPi - 0.4)}; break;
      case StarKind::two_walls_opposite: walls = {w0, w0 + kPi}; break;
      case StarKind::three_walls: walls = {w0, w0 + uniform(rng, 1.6, 2.6), w0 + uniform(rng, 3.7, 4.7)}; break;
    }
    for (auto& w : walls) w = std::fmod(w, kTwoPi);
    auto ring = [&](int n) {
      auto a = walls;
      while (static_cast<int>(a.size()) < n) a.push_back(uniform(rng, 0.0, kTwoPi));
      std::sort(a.begin(), a.end());
      return a;
    };
    TetStarSpec s;
    s.vertical = vertical;
    s.upper_angles = ring(std::uniform_int_distribution<int>(4, 7)(rng));
    s.lower_angles = ring(std::uniform_int_distribution<int>(4, 7)(rng));
    if (kind == StarKind::jittered_poles) {
      s.pole_jitter = 0.2;
      s.lower_angles = s.upper_angles;  // shared angles, but no face contains the axis
    }
    if (!max_gap_below_pi(s.upper_angles) || !max_gap_below_pi(s.lower_angles)) continue;
    // apart from the walls, all angles stay well separated
    std::vector<double> all = s.upper_angles;
    for (double a : s.lower_angles)
      if (std::none_of(walls.begin(), walls.end(), [&](double w) { return angle_distance(w, a) < 1e-12; }) &&
          kind != StarKind::jittered_poles)
        all.push_back(a);
    std::sort(all.begin(), all.end());
    bool ok = true;
    for (std::size_t i = 0; i < all.size() && ok; ++i)
      ok = angle_distance(all[i], all[(i + 1) % all.size()]) > 0.08;
    if (ok) return s;
  }
  throw std::runtime_error("random_star_spec: no admissible configuration");
}

TetStarSpec split_star_spec(Axis normal, std::mt19937_64& rng) {
  // walls at pi/2 and 3pi/2 lie in the construction's plane x = 0; pick
  // the vertical axis so that this plane becomes {normal = 0}
  const Axis vertical = static_cast<Axis>((static_cast<int>(normal) + 2) % 3);
  for (;;) {
    auto s = random_star_spec(StarKind::two_walls_opposite, rng, vertical);
    // rotate so that the first wall sits at pi/2; walls are the shared angles
    std::vector<double> shared;
    for (double a : s.upper_angles)
      if (std::any_of(s.lower_angles.begin(), s.lower_angles.end(),
                      [&](double b) { return angle_distance(a, b) < 1e-12; }))
        shared.push_back(a);
    if (shared.size() != 2) continue;
    const double rot = kPi / 2 - shared[0];
    auto turn = [&](std::vector<double>& v) {
      for (auto& a : v) {
        const bool wall = angle_distance(a, shared[0]) < 1e-12 || angle_distance(a, shared[1]) < 1e-12;
        a = std::fmod(a + rot + 2 * kTwoPi, kTwoPi);
        if (wall) a = angle_distance(a, kPi / 2) < 1e-6 ? kPi / 2 : 3 * kPi / 2;
      }
      std::sort(v.begin(), v.end());
    };
    turn(s.upper_angles);
    turn(s.lower_angles);
    return s;
  }
}

}  // namespace lbb
