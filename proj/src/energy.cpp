#include "hcg/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hcg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool less_msb(std::uint64_t x, std::uint64_t y) { return x < y && x < (x ^ y); }

double pairs(std::size_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m > 0 ? m - 1 : 0); }

}  // namespace

bool morton_less(const Point& a, const Point& b) {
  int best = 0;
  std::uint64_t bx = a.coords[0] ^ b.coords[0];
  for (int i = 1; i < a.dim; ++i) {
    const std::uint64_t x = a.coords[static_cast<std::size_t>(i)] ^ b.coords[static_cast<std::size_t>(i)];
    if (less_msb(bx, x)) {
      best = i;
      bx = x;
    }
  }
  return a.coords[static_cast<std::size_t>(best)] < b.coords[static_cast<std::size_t>(best)];
}

EnergyValue energy_naive(const Configuration& c) {
  const auto& p = c.points;
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const auto k = separation_level(p[i], p[j]);
      if (!k) return kInf;
      h += potential_at_level(c.dim, *k);
    }
  }
  return h;
}

EnergyValue energy_fast(const Configuration& c) {
  const std::size_t n = c.points.size();
  if (n < 2) return 0.0;
  std::vector<Point> pts = c.points;
  std::sort(pts.begin(), pts.end(), morton_less);

  // shared[i] = number of levels (>= 1) on which pts[i] and pts[i+1] share a cube
  std::vector<int> shared(n - 1);
  int depth = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto k = separation_level(pts[i], pts[i + 1]);
    if (!k) return kInf;
    shared[i] = *k - 1;
    depth = std::max(depth, shared[i]);
  }

  double h = potential_min(c.dim) * pairs(n);
  for (int j = 1; j <= depth; ++j) {
    double level_pairs = 0.0;
    std::size_t run = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (shared[i] >= j) {
        ++run;
      } else {
        level_pairs += pairs(run);
        run = 1;
      }
    }
    level_pairs += pairs(run);
    const double inc = c.dim == 3 ? std::ldexp(1.0, j) : 1.0;
    h += inc * level_pairs;
  }
  return h;
}

double energy_delta(const Configuration& c, std::size_t i, const Point& y) {
  const auto& p = c.points;
  if (i >= p.size()) throw std::out_of_range("energy_delta: index out of range");
  if (y == p[i]) return 0.0;
  double before = 0.0, after = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == i) continue;
    const auto kn = separation_level(y, p[j]);
    if (!kn) return kInf;
    after += potential_at_level(c.dim, *kn);
    const auto ko = separation_level(p[i], p[j]);
    before += ko ? potential_at_level(c.dim, *ko) : kInf;
  }
  if (std::isinf(before)) return -kInf;
  return after - before;
}

Point uniform_point_in(const DyadicCube& cube, Stream& rng) {
  std::array<std::uint64_t, kMaxDim> c{};
  const int free_bits = kFracBits - cube.level;
  for (int i = 0; i < cube.dim; ++i) {
    const auto s = static_cast<std::size_t>(i);
    c[s] = free_bits > 0 ? (cube.index[s] << free_bits) | rng.bits(free_bits) : cube.index[s];
  }
  Point p;
  p.dim = cube.dim;
  p.coords = c;
  return p;
}

std::vector<AnnealStage> default_anneal_schedule() {
  std::vector<AnnealStage> s;
  for (double b = 0.25; b <= 64.0; b *= 2.0) s.push_back({b, 20000});
  return s;
}

AnnealResult anneal_min_energy(int d, std::size_t n, const std::vector<AnnealStage>& schedule, Stream& rng) {
  check_dim(d);
  if (n < 2) throw std::invalid_argument("anneal_min_energy needs n >= 2");
  Configuration cur{d, schedule.empty() ? 1.0 : schedule.front().beta, {}};
  const DyadicCube root = unit_cube(d);
  for (std::size_t i = 0; i < n; ++i) cur.points.push_back(uniform_point_in(root, rng));
  double h = energy_fast(cur);
  AnnealResult best{cur, h};

  for (const AnnealStage& stage : schedule) {
    cur.beta = stage.beta;
    for (std::size_t step = 0; step < stage.steps; ++step) {
      const std::size_t i = rng.below(n);
      Point y;
      if (rng.bernoulli(0.5)) {
        y = uniform_point_in(root, rng);
      } else {
        const int lvl = std::min(rng.geometric(0.5), kFracBits);
        y = uniform_point_in(cube_of(cur.points[i], lvl), rng);
      }
      const double delta = energy_delta(cur, i, y);
      if (std::isinf(delta) && delta > 0) continue;
      if (delta <= 0.0 || rng.uniform() < std::exp(-stage.beta * delta)) {
        cur.points[i] = y;
        h += delta;
        if (h < best.energy) {
          best.best = cur;
          best.energy = h;
        }
      }
    }
  }
  best.energy = energy_naive(best.best);
  return best;
}

}  // namespace hcg
