#include "hcg/geometry.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hcg {

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw ConfigError("dimension must be 1, 2 or 3, got " + std::to_string(d));
}

Point::Point(int d, std::array<std::uint64_t, kMaxDim> c) : coords(c), dim(d) {
  check_dim(d);
  for (int i = 0; i < d; ++i) {
    if (coords[static_cast<std::size_t>(i)] >= kCoordLimit) throw ConfigError("point coordinate outside [0,1)");
  }
  for (int i = d; i < kMaxDim; ++i) coords[static_cast<std::size_t>(i)] = 0;
}

Point Point::from_doubles(std::span<const double> xs) {
  const int d = static_cast<int>(xs.size());
  check_dim(d);
  std::array<std::uint64_t, kMaxDim> c{};
  for (int i = 0; i < d; ++i) {
    const double v = xs[static_cast<std::size_t>(i)];
    if (!(v >= 0.0 && v < 1.0)) throw ConfigError("point coordinate outside [0,1)");
    c[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(std::ldexp(v, kFracBits));
  }
  return Point(d, c);
}

// ---- cubes -----------------------------------------------------------------

double DyadicCube::side() const { return std::ldexp(1.0, -level); }
double DyadicCube::volume() const { return std::ldexp(1.0, -level * dim); }
double DyadicCube::lo(int i) const { return std::ldexp(static_cast<double>(index[static_cast<std::size_t>(i)]), -level); }
double DyadicCube::hi(int i) const {
  return std::ldexp(static_cast<double>(index[static_cast<std::size_t>(i)] + 1), -level);
}

bool DyadicCube::contains(const Point& x) const {
  if (x.dim != dim) return false;
  for (int i = 0; i < dim; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if ((x.coords[s] >> (kFracBits - level)) != index[s]) return false;
  }
  return true;
}

DyadicCube DyadicCube::parent() const {
  if (level == 0) throw std::logic_error("unit cube has no parent");
  DyadicCube p{level - 1, {}, dim};
  for (int i = 0; i < dim; ++i) p.index[static_cast<std::size_t>(i)] = index[static_cast<std::size_t>(i)] >> 1;
  return p;
}

DyadicCube unit_cube(int d) {
  check_dim(d);
  return DyadicCube{0, {}, d};
}

DyadicCube cube_of(const Point& x, int k) {
  if (k < 0) throw std::invalid_argument("negative level");
  if (k > kFracBits) throw ResolutionError("level exceeds 53-bit coordinate resolution");
  DyadicCube c{k, {}, x.dim};
  if (k == 0) return c;
  for (int i = 0; i < x.dim; ++i) {
    const auto s = static_cast<std::size_t>(i);
    c.index[s] = x.coords[s] >> (kFracBits - k);
  }
  return c;
}

DyadicCube child(const DyadicCube& c, int which) {
  if (c.level >= kFracBits) throw ResolutionError("cannot subdivide below 53-bit resolution");
  DyadicCube ch{c.level + 1, {}, c.dim};
  for (int i = 0; i < c.dim; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const std::uint64_t bit = (static_cast<unsigned>(which) >> (c.dim - 1 - i)) & 1U;
    ch.index[s] = (c.index[s] << 1) | bit;
  }
  return ch;
}

std::vector<DyadicCube> children(const DyadicCube& c) {
  const int count = 1 << c.dim;
  std::vector<DyadicCube> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) out.push_back(child(c, t));
  return out;
}

// ---- separation and potential -----------------------------------------------

std::optional<int> separation_level(const Point& x, const Point& y) {
  if (x.dim != y.dim) throw std::invalid_argument("separation_level: dimension mismatch");
  int shared = kFracBits;
  for (int i = 0; i < x.dim; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const std::uint64_t diff = x.coords[s] ^ y.coords[s];
    if (diff != 0) {
      // bits 52..0 hold the fraction; leading shared bits = 52 - msb(diff)
      const int msb = 63 - std::countl_zero(diff);
      shared = std::min(shared, kFracBits - 1 - msb);
    }
  }
  if (shared == kFracBits) return std::nullopt;
  return shared + 1;
}

double potential(const Point& x, const Point& y) {
  const auto k = separation_level(x, y);
  if (!k) return std::numeric_limits<double>::infinity();
  return potential_at_level(x.dim, *k);
}

double potential_mean(int d) {
  check_dim(d);
  if (d == 3) return 7.0 / 3.0;
  const double q = std::ldexp(1.0, d);
  return q / (q - 1.0);
}

// ---- regions -----------------------------------------------------------------

Region Region::unit(int d) {
  check_dim(d);
  return Region(d, UnitCubeRegion{});
}

Region Region::box(int d, std::span<const double> lo, std::span<const double> hi) {
  check_dim(d);
  if (lo.size() != static_cast<std::size_t>(d) || hi.size() != static_cast<std::size_t>(d)) {
    throw ConfigError("box needs d lower and d upper bounds");
  }
  BoxRegion b;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] >= 0.0 && lo[i] < hi[i] && hi[i] <= 1.0)) {
      throw ConfigError("box bounds must satisfy 0 <= lo < hi <= 1");
    }
    b.lo[i] = lo[i];
    b.hi[i] = hi[i];
  }
  for (std::size_t i = lo.size(); i < kMaxDim; ++i) b.hi[i] = 1.0;
  return Region(d, b);
}

Region Region::ball(int d, std::span<const double> center, double radius) {
  check_dim(d);
  if (center.size() != static_cast<std::size_t>(d)) throw ConfigError("ball needs d center coordinates");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be positive");
  BallRegion b;
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (!(center[i] >= 0.0 && center[i] <= 1.0)) throw ConfigError("ball center must lie in the closed unit cube");
    b.center[i] = center[i];
  }
  b.radius = radius;
  return Region(d, b);
}

namespace {

std::vector<double> parse_numbers(std::string_view s) {
  std::vector<double> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const std::string_view tok = s.substr(0, comma);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) {
      throw ConfigError("malformed number '" + std::string(tok) + "' in region text");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
    if (s.empty()) throw ConfigError("trailing comma in region text");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Region Region::parse(std::string_view text, int d) {
  check_dim(d);
  const auto ud = static_cast<std::size_t>(d);
  if (text == "unit") return unit(d);
  if (text.starts_with("box:")) {
    const auto v = parse_numbers(text.substr(4));
    if (v.size() != 2 * ud) throw ConfigError("box region needs 2*d numbers");
    return box(d, std::span(v).first(ud), std::span(v).subspan(ud));
  }
  if (text.starts_with("ball:")) {
    const auto v = parse_numbers(text.substr(5));
    if (v.size() != ud + 1) throw ConfigError("ball region needs d+1 numbers");
    return ball(d, std::span(v).first(ud), v.back());
  }
  throw ConfigError("unknown region '" + std::string(text) + "' (expected unit, box:..., ball:...)");
}

std::string Region::to_string() const {
  std::ostringstream os;
  const auto d = static_cast<std::size_t>(dim_);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UnitCubeRegion>) {
          os << "unit";
        } else if constexpr (std::is_same_v<T, BoxRegion>) {
          os << "box:";
          for (std::size_t i = 0; i < d; ++i) os << format_double(s.lo[i]) << ',';
          for (std::size_t i = 0; i < d; ++i) os << format_double(s.hi[i]) << (i + 1 < d ? "," : "");
        } else {
          os << "ball:";
          for (std::size_t i = 0; i < d; ++i) os << format_double(s.center[i]) << ',';
          os << format_double(s.radius);
        }
      },
      shape_);
  return os.str();
}

bool Region::contains(const Point& x) const {
  if (x.dim != dim_) throw std::invalid_argument("region/point dimension mismatch");
  return std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UnitCubeRegion>) {
          return true;
        } else if constexpr (std::is_same_v<T, BoxRegion>) {
          for (int i = 0; i < dim_; ++i) {
            const double v = x.coord(i);
            const auto k = static_cast<std::size_t>(i);
            if (v < s.lo[k] || v >= s.hi[k]) return false;
          }
          return true;
        } else {
          double r2 = 0.0;
          for (int i = 0; i < dim_; ++i) {
            const double t = x.coord(i) - s.center[static_cast<std::size_t>(i)];
            r2 += t * t;
          }
          return r2 < s.radius * s.radius;
        }
      },
      shape_);
}

// ---- ball/box intersection volumes --------------------------------------------

namespace {

using Bounds = std::array<double, kMaxDim>;

// Antiderivative of sqrt(r^2 - t^2).
double half_chord_integral(double t, double r) {
  t = std::clamp(t, -r, r);
  return 0.5 * (t * std::sqrt(std::max(0.0, r * r - t * t)) + r * r * std::asin(t / r));
}

double chord_integral(double a, double b, double r) {
  if (b <= a) return 0.0;
  return half_chord_integral(b, r) - half_chord_integral(a, r);
}

// Area of the origin-centered disc of radius r intersected with {X <= x, Y <= y}.
double disc_quadrant_area(double x, double y, double r) {
  const double xc = std::clamp(x, -r, r);
  if (y <= -r || xc <= -r) return 0.0;
  if (y >= r) return 2.0 * chord_integral(-r, xc, r);
  const double s = std::sqrt(r * r - y * y);
  double area = 0.0;
  // |t| <= s: chord part below y has length y + h(t)
  const double a = -s;
  const double b = std::min(s, xc);
  if (b > a) area += y * (b - a) + chord_integral(a, b, r);
  if (y >= 0.0) {
    // |t| > s: the whole chord lies below y
    area += 2.0 * chord_integral(-r, std::min(-s, xc), r);
    if (xc > s) area += 2.0 * chord_integral(s, xc, r);
  }
  return area;
}

// Area of disc(center c, radius r) ∩ [lo0,hi0] x [lo1,hi1].
double disc_rect_area(double c0, double c1, double r, double lo0, double hi0, double lo1, double hi1) {
  if (r <= 0.0) return 0.0;
  const double x0 = lo0 - c0, x1 = hi0 - c0, y0 = lo1 - c1, y1 = hi1 - c1;
  const double a = disc_quadrant_area(x1, y1, r) - disc_quadrant_area(x0, y1, r) - disc_quadrant_area(x1, y0, r) +
                   disc_quadrant_area(x0, y0, r);
  return std::clamp(a, 0.0, (hi0 - lo0) * (hi1 - lo1));
}

double ball_box_volume(int d, const Bounds& c, double r, const Bounds& lo, const Bounds& hi, double tol) {
  if (d == 1) {
    return std::max(0.0, std::min(hi[0], c[0] + r) - std::max(lo[0], c[0] - r));
  }
  if (d == 2) return disc_rect_area(c[0], c[1], r, lo[0], hi[0], lo[1], hi[1]);

  // 3D: integrate exact cross-section areas over the first axis, with
  // x = c0 + r sin(theta) removing the square-root edge singularity.
  const double xa = std::max(lo[0], c[0] - r);
  const double xb = std::min(hi[0], c[0] + r);
  if (xb <= xa) return 0.0;
  const double ta = std::asin(std::clamp((xa - c[0]) / r, -1.0, 1.0));
  const double tb = std::asin(std::clamp((xb - c[0]) / r, -1.0, 1.0));

  // Cross-section area is only piecewise smooth in rho: kinks where the
  // circle touches an edge line or a corner of the rectangle.
  std::vector<double> cuts{ta, tb};
  std::vector<double> crit{std::abs(lo[1] - c[1]), std::abs(hi[1] - c[1]), std::abs(lo[2] - c[2]),
                           std::abs(hi[2] - c[2])};
  for (double u : {lo[1], hi[1]}) {
    for (double v : {lo[2], hi[2]}) crit.push_back(std::hypot(u - c[1], v - c[2]));
  }
  for (double rho : crit) {
    if (rho < r) {
      const double t = std::acos(rho / r);
      for (double s : {-t, t}) {
        if (s > ta && s < tb) cuts.push_back(s);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());

  auto integrand = [&](double t) {
    const double rho = r * std::cos(t);
    return disc_rect_area(c[1], c[2], rho, lo[1], hi[1], lo[2], hi[2]) * r * std::cos(t);
  };
  const double box_vol = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
  // the pieces are smooth, so a few levels of bisection suffice; asking for
  // less than ~1e-11 only makes the adaptive rule chase rounding noise
  const double rel_tol = std::clamp(tol / box_vol, 1e-11, 1e-6);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, cuts[i], cuts[i + 1], 4,
                                                                            rel_tol);
  }
  return std::clamp(total, 0.0, box_vol);
}

Bounds cube_lo(const DyadicCube& c) {
  Bounds b{};
  for (int i = 0; i < c.dim; ++i) b[static_cast<std::size_t>(i)] = c.lo(i);
  return b;
}

Bounds cube_hi(const DyadicCube& c) {
  Bounds b{};
  for (int i = 0; i < c.dim; ++i) b[static_cast<std::size_t>(i)] = c.hi(i);
  return b;
}

enum class Overlap { Outside, Inside, Straddle };

// Exact for cubes and boxes; for balls, geometry decides the clear cases and
// the fraction (with a 1e-12 snap) decides the rest.
Overlap classify(const DyadicCube& c, const Region& u) {
  return std::visit(
      [&](const auto& s) -> Overlap {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UnitCubeRegion>) {
          return Overlap::Inside;
        } else if constexpr (std::is_same_v<T, BoxRegion>) {
          bool inside = true;
          for (int i = 0; i < c.dim; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double lo = c.lo(i), hi = c.hi(i);
            if (hi <= s.lo[k] || lo >= s.hi[k]) return Overlap::Outside;
            if (lo < s.lo[k] || hi > s.hi[k]) inside = false;
          }
          return inside ? Overlap::Inside : Overlap::Straddle;
        } else {
          double near2 = 0.0, far2 = 0.0;
          for (int i = 0; i < c.dim; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double lo = c.lo(i), hi = c.hi(i), x = s.center[k];
            const double dn = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
            const double df = std::max(std::abs(x - lo), std::abs(x - hi));
            near2 += dn * dn;
            far2 += df * df;
          }
          const double r2 = s.radius * s.radius;
          if (near2 >= r2) return Overlap::Outside;
          if (far2 <= r2) return Overlap::Inside;
          const double p = cube_region_fraction(c, u, 1e-13);
          if (p <= 1e-12) return Overlap::Outside;
          if (p >= 1.0 - 1e-12) return Overlap::Inside;
          return Overlap::Straddle;
        }
      },
      u.shape());
}

}  // namespace

double region_volume(const Region& u, double tol) {
  const int d = u.dim();
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UnitCubeRegion>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, BoxRegion>) {
          double v = 1.0;
          for (int i = 0; i < d; ++i) v *= s.hi[static_cast<std::size_t>(i)] - s.lo[static_cast<std::size_t>(i)];
          return v;
        } else {
          Bounds lo{}, hi{};
          for (int i = 0; i < d; ++i) hi[static_cast<std::size_t>(i)] = 1.0;
          return ball_box_volume(d, s.center, s.radius, lo, hi, tol);
        }
      },
      u.shape());
}

double cube_region_fraction(const DyadicCube& c, const Region& u, double tol) {
  if (c.dim != u.dim()) throw std::invalid_argument("cube/region dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UnitCubeRegion>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, BoxRegion>) {
          double p = 1.0;
          for (int i = 0; i < c.dim; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double len = std::min(c.hi(i), s.hi[k]) - std::max(c.lo(i), s.lo[k]);
            if (len <= 0.0) return 0.0;
            p *= len / c.side();
          }
          return p;
        } else {
          const double vol = c.volume();
          return std::clamp(ball_box_volume(c.dim, s.center, s.radius, cube_lo(c), cube_hi(c), tol * vol) / vol, 0.0,
                            1.0);
        }
      },
      u.shape());
}

std::vector<CubeClassification> classify_levels(const Region& u, int j) {
  if (j < 0) throw std::invalid_argument("negative level");
  if (j > kFracBits) throw ResolutionError("level exceeds 53-bit coordinate resolution");
  std::vector<CubeClassification> levels(static_cast<std::size_t>(j) + 1);
  const DyadicCube root = unit_cube(u.dim());
  switch (classify(root, u)) {
    case Overlap::Inside: levels[0].inside.push_back(root); break;
    case Overlap::Straddle: levels[0].boundary.push_back(root); break;
    case Overlap::Outside: break;
  }
  for (int lvl = 1; lvl <= j; ++lvl) {
    auto& cur = levels[static_cast<std::size_t>(lvl)];
    for (const DyadicCube& parent : levels[static_cast<std::size_t>(lvl - 1)].boundary) {
      for (int t = 0; t < (1 << u.dim()); ++t) {
        const DyadicCube ch = child(parent, t);
        switch (classify(ch, u)) {
          case Overlap::Inside: cur.inside.push_back(ch); break;
          case Overlap::Straddle: cur.boundary.push_back(ch); break;
          case Overlap::Outside: break;
        }
      }
    }
  }
  return levels;
}

CubeClassification classify_cubes(const Region& u, int j) {
  auto levels = classify_levels(u, j);
  return std::move(levels.back());
}

Region blowup_shape(int d, std::span<const double> x, double lambda, const Region::Shape& u, double n) {
  check_dim(d);
  if (x.size() != static_cast<std::size_t>(d)) throw ConfigError("blow-up center has wrong dimension");
  if (!(lambda > 0.0)) throw ConfigError("blow-up scale lambda must be positive");
  if (!(n > 0.0)) throw ConfigError("particle count must be positive");
  const double root = d == 3 ? std::cbrt(n) : (d == 2 ? std::sqrt(n) : n);
  const double s = lambda / root;
  constexpr double slack = 1e-12;
  const auto ud = static_cast<std::size_t>(d);
  return std::visit(
      [&](const auto& sh) -> Region {
        using T = std::decay_t<decltype(sh)>;
        std::array<double, kMaxDim> lo{}, hi{};
        if constexpr (std::is_same_v<T, BallRegion>) {
          for (std::size_t i = 0; i < ud; ++i) {
            lo[i] = x[i] + s * sh.center[i];
            if (lo[i] - s * sh.radius < -slack || lo[i] + s * sh.radius > 1.0 + slack) {
              throw ConfigError("blown-up ball escapes the unit cube");
            }
          }
          return Region::ball(d, std::span(lo).first(ud), s * sh.radius);
        } else {
          for (std::size_t i = 0; i < ud; ++i) {
            if constexpr (std::is_same_v<T, UnitCubeRegion>) {
              lo[i] = x[i];
              hi[i] = x[i] + s;
            } else {
              lo[i] = x[i] + s * sh.lo[i];
              hi[i] = x[i] + s * sh.hi[i];
            }
            if (lo[i] < -slack || hi[i] > 1.0 + slack) throw ConfigError("blown-up box escapes the unit cube");
            lo[i] = std::max(lo[i], 0.0);
            hi[i] = std::min(hi[i], 1.0);
          }
          bool whole = true;
          for (std::size_t i = 0; i < ud; ++i) whole = whole && lo[i] == 0.0 && hi[i] == 1.0;
          if (whole) return Region::unit(d);
          return Region::box(d, std::span(lo).first(ud), std::span(hi).first(ud));
        }
      },
      u);
}

Region blowup_region(const Point& x, double lambda, const Region& u, double n) {
  if (x.dim != u.dim()) throw std::invalid_argument("blow-up center/region dimension mismatch");
  std::array<double, kMaxDim> xs{};
  for (int i = 0; i < x.dim; ++i) xs[static_cast<std::size_t>(i)] = x.coord(i);
  return blowup_shape(x.dim, std::span(xs).first(static_cast<std::size_t>(x.dim)), lambda, u.shape(), n);
}

}  // namespace hcg
