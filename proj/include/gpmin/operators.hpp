#pragma once

#include <memory>

#include "gpmin/grid.hpp"

namespace gpmin {

/// Discrete derivative backend for one grid.
///
/// Spectral mode differentiates through the real FFT on the periodic box;
/// finite-difference mode uses the 5-point Laplacian with a homogeneous
/// Dirichlet wall, diagonalized by the type-I sine transform. In both modes
/// kinetic(u) == -integral(u * laplacian(u)) up to round-off.
///
/// Holds transform plans and scratch buffers, so one instance per run; it is
/// not safe to share an instance between threads.
class DiffOperator {
 public:
  explicit DiffOperator(const Grid2D& grid);
  ~DiffOperator();
  DiffOperator(DiffOperator&&) noexcept;
  DiffOperator& operator=(DiffOperator&&) noexcept;
  DiffOperator(const DiffOperator&) = delete;
  DiffOperator& operator=(const DiffOperator&) = delete;

  const Grid2D& grid() const noexcept;

  Field laplacian(const Field& u);

  /// Integral of |grad u|^2.
  double kinetic(const Field& u);

  /// Solves (I + dt (-Laplacian + shift)) out = rhs.
  Field solve_shifted(const Field& rhs, double dt, double shift);

  /// The field x -> u(x - offset).
  Field translate(const Field& u, Point offset);

  /// Zeroes the Dirichlet wall nodes (no-op in spectral mode).
  void apply_boundary(Field& u) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace gpmin
