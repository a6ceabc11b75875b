#include "gpmin/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "gpmin/error.hpp"

namespace gpmin {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ZeroField: return "ZeroField";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NotCommonZero: return "NotCommonZero";
    case ErrorKind::NoCommonZero: return "NoCommonZero";
    case ErrorKind::FlatField: return "FlatField";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

double norm(Point p) { return std::hypot(p.x, p.y); }

const char* to_string(DerivativeMode mode) {
  return mode == DerivativeMode::SpectralPeriodic ? "spectral" : "fd";
}

DerivativeMode parse_mode(const std::string& text) {
  if (text == "spectral" || text == "spectral-periodic") return DerivativeMode::SpectralPeriodic;
  if (text == "fd" || text == "finite-difference-dirichlet") return DerivativeMode::FiniteDifferenceDirichlet;
  throw Error(ErrorKind::InvalidArgument, "unknown derivative mode '" + text + "'");
}

Grid2D::Grid2D(std::size_t n, double half_width, DerivativeMode mode, Point center)
    : n_(n), half_width_(half_width), spacing_(2.0 * half_width / static_cast<double>(n)),
      mode_(mode), center_(center) {
  require(n >= 32 && std::has_single_bit(n), ErrorKind::InvalidArgument,
          "grid size must be a power of two >= 32, got " + std::to_string(n));
  require(half_width > 0.0 && std::isfinite(half_width), ErrorKind::InvalidArgument,
          "grid half-width must be positive");
}

bool Grid2D::contains(Point p) const noexcept {
  return std::abs(p.x - center_.x) <= half_width_ && std::abs(p.y - center_.y) <= half_width_;
}

Field::Field(const Grid2D& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const Grid2D& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  require(values_.size() == grid_.size(), ErrorKind::InvalidArgument, "field size does not match grid");
}

void check_same_grid(const Grid2D& a, const Grid2D& b) {
  if (a == b) return;
  if (a.mode() != b.mode() && a.with_mode(b.mode()) == b)
    throw Error(ErrorKind::ModeMismatch, "fields use different derivative backends");
  throw Error(ErrorKind::GridMismatch, "fields live on different grids");
}

double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_area();
}

double integrate_product(const Field& a, const Field& b) {
  check_same_grid(a.grid(), b.grid());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s * a.grid().cell_area();
}

double integrate_power(const Field& f, int power) {
  double s = 0.0;
  for (double v : f.values()) {
    double p = 1.0;
    for (int e = 0; e < power; ++e) p *= v;
    s += p;
  }
  return s * f.grid().cell_area();
}

double mass(const FieldPair& pair) {
  check_same_grid(pair.u1.grid(), pair.u2.grid());
  return integrate_power(pair.u1, 2) + integrate_power(pair.u2, 2);
}

double l2_distance(const Field& a, const Field& b) {
  check_same_grid(a.grid(), b.grid());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s * a.grid().cell_area());
}

double l2_distance(const FieldPair& a, const FieldPair& b) {
  const double d1 = l2_distance(a.u1, b.u1);
  const double d2 = l2_distance(a.u2, b.u2);
  return std::sqrt(d1 * d1 + d2 * d2);
}

double mass_outside(const FieldPair& pair, Point c, double radius) {
  const Grid2D& g = pair.grid();
  double s = 0.0;
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (norm(g.node(i, j) - c) <= radius) continue;
      const double a = pair.u1.at(i, j);
      const double b = pair.u2.at(i, j);
      s += a * a + b * b;
    }
  return s * g.cell_area();
}

namespace {

// Catmull-Rom weights for offset t in [0, 1).
std::array<double, 4> cubic_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
          0.5 * (t3 - t2)};
}

}  // namespace

double interpolate(const Field& f, Point p) {
  const Grid2D& g = f.grid();
  const double h = g.spacing();
  const double sx = (p.x - g.x(0)) / h;
  const double sy = (p.y - g.y(0)) / h;
  const auto n = static_cast<long>(g.n());
  if (!(sx >= 0.0 && sy >= 0.0 && sx <= static_cast<double>(n - 1) && sy <= static_cast<double>(n - 1)))
    return 0.0;
  const long i0 = std::min(static_cast<long>(std::floor(sx)), n - 2);
  const long j0 = std::min(static_cast<long>(std::floor(sy)), n - 2);
  const auto wx = cubic_weights(sx - static_cast<double>(i0));
  const auto wy = cubic_weights(sy - static_cast<double>(j0));
  double s = 0.0;
  for (int b = 0; b < 4; ++b) {
    const long j = j0 - 1 + b;
    if (j < 0 || j >= n) continue;
    double row = 0.0;
    for (int a = 0; a < 4; ++a) {
      const long i = i0 - 1 + a;
      if (i < 0 || i >= n) continue;
      row += wx[static_cast<std::size_t>(a)] * f.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    s += wy[static_cast<std::size_t>(b)] * row;
  }
  return s;
}

Field resample(const Field& source, const Grid2D& target) {
  return resample(source, target, [](Point p) { return p; });
}

void write_field(std::ostream& out, const Field& f) {
  const Grid2D& g = f.grid();
  std::ostringstream header;
  header.precision(17);
  header << g.n() << ' ' << g.half_width() << ' ' << to_string(g.mode()) << '\n';
  out << header.str();
  static_assert(std::endian::native == std::endian::little, "field dump assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (!out) throw Error(ErrorKind::Io, "failed writing field dump");
}

Field read_field(std::istream& in, Point center) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "missing field dump header");
  std::istringstream header(line);
  std::size_t n = 0;
  double half_width = 0.0;
  std::string mode;
  if (!(header >> n >> half_width >> mode)) throw Error(ErrorKind::Io, "malformed field dump header");
  Grid2D grid(n, half_width, parse_mode(mode), center);
  std::vector<double> values(grid.size());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw Error(ErrorKind::Io, "truncated field dump");
  return Field(grid, std::move(values));
}

}  // namespace gpmin
