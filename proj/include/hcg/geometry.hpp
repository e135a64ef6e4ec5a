#pragma once

// Dyadic-tree geometry of the half-open unit cube [0,1)^d, d in {1,2,3}.
//
// Coordinates are stored as 53-bit fixed-point fractions so that every
// dyadic cube membership question is answered exactly on integers, and the
// conversion to double is lossless.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hcg {

inline constexpr int kFracBits = 53;
inline constexpr std::uint64_t kCoordLimit = std::uint64_t{1} << kFracBits;
inline constexpr int kMaxDim = 3;

/// Thrown when an operation needs more dyadic levels than the fixed-point
/// resolution provides.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for malformed user input (region text, dimensions, parameters).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void check_dim(int d);

struct Point {
  std::array<std::uint64_t, kMaxDim> coords{};
  int dim = 0;

  Point() = default;
  Point(int d, std::array<std::uint64_t, kMaxDim> c);

  /// From doubles in [0,1). Exact for any double, since every double in
  /// [0,1) with at most 53 significant fractional bits maps onto the grid;
  /// values finer than 2^-53 are truncated toward zero.
  static Point from_doubles(std::span<const double> xs);

  [[nodiscard]] double coord(int i) const {
    return static_cast<double>(coords[static_cast<std::size_t>(i)]) * 0x1.0p-53;
  }

  friend bool operator==(const Point&, const Point&) = default;
};

struct Configuration {
  int dim = 0;
  double beta = 0.0;
  std::vector<Point> points;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

struct DyadicCube {
  int level = 0;
  std::array<std::uint64_t, kMaxDim> index{};
  int dim = 0;

  [[nodiscard]] double side() const;
  [[nodiscard]] double volume() const;
  [[nodiscard]] double lo(int i) const;
  [[nodiscard]] double hi(int i) const;
  [[nodiscard]] bool contains(const Point& x) const;
  [[nodiscard]] DyadicCube parent() const;

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
};

[[nodiscard]] DyadicCube unit_cube(int d);

// ---- regions ---------------------------------------------------------------

struct UnitCubeRegion {
  friend bool operator==(const UnitCubeRegion&, const UnitCubeRegion&) = default;
};

struct BoxRegion {
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};
  friend bool operator==(const BoxRegion&, const BoxRegion&) = default;
};

/// Ball intersected with the unit cube.
struct BallRegion {
  std::array<double, kMaxDim> center{};
  double radius = 0.0;
  friend bool operator==(const BallRegion&, const BallRegion&) = default;
};

class Region {
 public:
  using Shape = std::variant<UnitCubeRegion, BoxRegion, BallRegion>;

  static Region unit(int d);
  /// Half-open box prod [lo_i, hi_i); requires 0 <= lo_i < hi_i <= 1.
  static Region box(int d, std::span<const double> lo, std::span<const double> hi);
  /// Requires radius > 0 and center in the closed unit cube.
  static Region ball(int d, std::span<const double> center, double radius);

  /// Grammar: `unit`, `box:lo1,..,lod,hi1,..,hid`, `ball:c1,..,cd,r`.
  static Region parse(std::string_view text, int d);
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] bool contains(const Point& x) const;

  friend bool operator==(const Region&, const Region&) = default;

 private:
  Region(int d, Shape s) : dim_(d), shape_(s) {}
  int dim_ = 0;
  Shape shape_;
};

// ---- operations ------------------------------------------------------------

/// Smallest k >= 1 such that x and y lie in distinct level-k cubes;
/// std::nullopt when x == y (infinite separation).
[[nodiscard]] std::optional<int> separation_level(const Point& x, const Point& y);

/// Pair potential: 2^k in 3D and k in 1D/2D, +inf for coincident points.
[[nodiscard]] double potential(const Point& x, const Point& y);

/// Potential for a known separation level.
[[nodiscard]] inline double potential_at_level(int d, int k) {
  return d == 3 ? static_cast<double>(std::uint64_t{1} << k) : static_cast<double>(k);
}

/// Analytic mean of w(x, .) over the cube: 7/3 in 3D, 2^d/(2^d-1) otherwise.
[[nodiscard]] double potential_mean(int d);

/// Smallest pair potential (separation at level 1).
[[nodiscard]] inline double potential_min(int d) { return d == 3 ? 2.0 : 1.0; }

[[nodiscard]] DyadicCube cube_of(const Point& x, int k);

/// The 2^d children in lexicographic order of index offsets (first
/// coordinate most significant).
[[nodiscard]] std::vector<DyadicCube> children(const DyadicCube& c);
[[nodiscard]] DyadicCube child(const DyadicCube& c, int which);

[[nodiscard]] double region_volume(const Region& u, double tol = 1e-12);

/// Leb(D ∩ U) / Leb(D).
[[nodiscard]] double cube_region_fraction(const DyadicCube& c, const Region& u, double tol = 1e-12);

struct CubeClassification {
  std::vector<DyadicCube> inside;    ///< D ⊆ U with parent not ⊆ U
  std::vector<DyadicCube> boundary;  ///< D meets both U and its complement
};

/// Cubes of level j that are maximal inside U, and those straddling ∂U.
[[nodiscard]] CubeClassification classify_cubes(const Region& u, int j);

/// All levels 0..j at once (entry i is the classification of level i).
[[nodiscard]] std::vector<CubeClassification> classify_levels(const Region& u, int j);

/// V = n^{-1/d} * lambda * U + x. Throws ConfigError if V leaves the unit cube.
[[nodiscard]] Region blowup_region(const Point& x, double lambda, const Region& u, double n);

/// Raw shape version of the blow-up: accepts shapes that are not themselves
/// inside the unit cube (e.g. a unit ball around the origin).
[[nodiscard]] Region blowup_shape(int d, std::span<const double> x, double lambda,
                                  const Region::Shape& u, double n);

}  // namespace hcg
