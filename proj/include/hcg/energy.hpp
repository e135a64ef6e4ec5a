#pragma once

// Hamiltonian H_n = sum_{i<j} w(x_i, x_j) of a configuration.

#include <cstddef>
#include <utility>
#include <vector>

#include "hcg/geometry.hpp"
#include "hcg/rng.hpp"

namespace hcg {

/// Sum of pair potentials; +inf iff two points coincide.
using EnergyValue = double;

/// O(n^2) pair loop.
[[nodiscard]] EnergyValue energy_naive(const Configuration& c);

/// Tree accumulation over Morton-sorted points:
///   H = w_min * C(n,2) + sum_{j>=1} inc_j * sum_{D in D_j} C(n_D, 2)
/// with inc_j = 2^j in 3D and 1 in 1D/2D. Stops at the first level where
/// every occupied cube holds at most one point.
[[nodiscard]] EnergyValue energy_fast(const Configuration& c);

/// H(c with x_i replaced by y) - H(c) in O(n). +inf if y hits another point.
[[nodiscard]] double energy_delta(const Configuration& c, std::size_t i, const Point& y);

/// Morton (bit-interleaved) order; coordinate 0 is the most significant
/// bit at each level, matching the lexicographic child order.
[[nodiscard]] bool morton_less(const Point& a, const Point& b);

struct AnnealStage {
  double beta = 1.0;
  std::size_t steps = 0;
};

/// beta doubling from 0.25 to 64, 20000 proposals per stage.
[[nodiscard]] std::vector<AnnealStage> default_anneal_schedule();

struct AnnealResult {
  Configuration best;
  EnergyValue energy = 0.0;
};

/// Metropolis annealing; returns the best configuration seen (an upper
/// estimate of the minimum energy L_n).
[[nodiscard]] AnnealResult anneal_min_energy(int d, std::size_t n, const std::vector<AnnealStage>& schedule,
                                             Stream& rng);

/// Uniform point inside a dyadic cube (fresh random bits below its level).
[[nodiscard]] Point uniform_point_in(const DyadicCube& cube, Stream& rng);

}  // namespace hcg
