#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gpmin {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double norm(Point p);

enum class DerivativeMode { SpectralPeriodic, FiniteDifferenceDirichlet };

const char* to_string(DerivativeMode mode);
DerivativeMode parse_mode(const std::string& text);

/// Uniform n x n grid on the square [cx - L, cx + L) x [cy - L, cy + L).
///
/// Node (i, j) sits at (cx - L + i h, cy - L + j h) with h = 2L/n, so the box
/// center is the node (n/2, n/2). In finite-difference mode the row and column
/// with index 0 carry the homogeneous Dirichlet wall (x = c - L, identified with
/// c + L); every other node is an unknown.
class Grid2D {
 public:
  Grid2D(std::size_t n, double half_width, DerivativeMode mode = DerivativeMode::SpectralPeriodic,
         Point center = {});

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_; }
  double half_width() const noexcept { return half_width_; }
  double spacing() const noexcept { return spacing_; }
  double cell_area() const noexcept { return spacing_ * spacing_; }
  DerivativeMode mode() const noexcept { return mode_; }
  Point center() const noexcept { return center_; }

  double x(std::size_t i) const noexcept { return center_.x - half_width_ + static_cast<double>(i) * spacing_; }
  double y(std::size_t j) const noexcept { return center_.y - half_width_ + static_cast<double>(j) * spacing_; }
  Point node(std::size_t i, std::size_t j) const noexcept { return {x(i), y(j)}; }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * n_ + i; }

  bool contains(Point p) const noexcept;

  Grid2D with_mode(DerivativeMode mode) const { return Grid2D(n_, half_width_, mode, center_); }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t n_;
  double half_width_;
  double spacing_;
  DerivativeMode mode_;
  Point center_;
};

/// Real scalar field sampled on a grid, row-major in (j, i).
class Field {
 public:
  explicit Field(const Grid2D& grid, double fill = 0.0);
  Field(const Grid2D& grid, std::vector<double> values);

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& at(std::size_t i, std::size_t j) noexcept { return values_[grid_.index(i, j)]; }
  double at(std::size_t i, std::size_t j) const noexcept { return values_[grid_.index(i, j)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  template <class F>
  static Field from_function(const Grid2D& grid, F&& f) {
    Field out(grid);
    for (std::size_t j = 0; j < grid.n(); ++j)
      for (std::size_t i = 0; i < grid.n(); ++i) out.at(i, j) = f(grid.node(i, j));
    return out;
  }

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// Nonnegative two-component state (u1, u2) on a common grid.
struct FieldPair {
  Field u1;
  Field u2;

  const Grid2D& grid() const noexcept { return u1.grid(); }
};

/// Throws GridMismatch unless both fields live on the same grid.
void check_same_grid(const Grid2D& a, const Grid2D& b);

/// Rectangle rule: sum of nodal values times h^2.
double integrate(const Field& f);
double integrate_product(const Field& a, const Field& b);
double integrate_power(const Field& f, int power);

/// Joint mass of a pair.
double mass(const FieldPair& pair);

/// L2 distance between two fields / pairs on the same grid.
double l2_distance(const Field& a, const Field& b);
double l2_distance(const FieldPair& a, const FieldPair& b);

/// Mass of |u1|^2 + |u2|^2 at distance > radius from point c.
double mass_outside(const FieldPair& pair, Point c, double radius);

/// Catmull-Rom bicubic evaluation of `f` at an arbitrary point; zero outside the box.
double interpolate(const Field& f, Point p);

/// Resample onto `target`, evaluating the source at `map(target node)`.
template <class Map>
Field resample(const Field& source, const Grid2D& target, Map&& map) {
  return Field::from_function(target, [&](Point p) { return interpolate(source, map(p)); });
}
Field resample(const Field& source, const Grid2D& target);

/// Binary field dump: ASCII header "n L mode\n" followed by n*n little-endian
/// doubles in row-major order.
void write_field(std::ostream& out, const Field& f);
Field read_field(std::istream& in, Point center = {});

}  // namespace gpmin
