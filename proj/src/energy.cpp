#include "gpmin/energy.hpp"

#include <cmath>

#include "gpmin/asymptotics.hpp"
#include "gpmin/error.hpp"

namespace gpmin {

namespace {

void check_grids(const FieldPair& u, const Field& v1, const Field& v2, const DiffOperator& ops) {
  check_same_grid(u.u1.grid(), u.u2.grid());
  check_same_grid(u.u1.grid(), v1.grid());
  check_same_grid(u.u1.grid(), v2.grid());
  check_same_grid(u.u1.grid(), ops.grid());
}

struct LocalIntegrals {
  double pot1 = 0.0;
  double pot2 = 0.0;
  double q1 = 0.0;  // int u1^4
  double q2 = 0.0;  // int u2^4
  double x12 = 0.0; // int u1^2 u2^2
};

LocalIntegrals local_integrals(const FieldPair& u, const Field& v1, const Field& v2) {
  LocalIntegrals s;
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    const double a = u.u1[k] * u.u1[k];
    const double b = u.u2[k] * u.u2[k];
    s.pot1 += v1[k] * a;
    s.pot2 += v2[k] * b;
    s.q1 += a * a;
    s.q2 += b * b;
    s.x12 += a * b;
  }
  const double dA = u.grid().cell_area();
  s.pot1 *= dA;
  s.pot2 *= dA;
  s.q1 *= dA;
  s.q2 *= dA;
  s.x12 *= dA;
  return s;
}

}  // namespace

EnergyBreakdown energy(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, DiffOperator& ops) {
  check_grids(u, v1, v2, ops);
  const LocalIntegrals s = local_integrals(u, v1, v2);
  EnergyBreakdown e;
  e.kinetic = ops.kinetic(u.u1) + ops.kinetic(u.u2);
  e.potential_1 = s.pot1;
  e.potential_2 = s.pot2;
  e.quartic_1 = 0.5 * p.a1 * s.q1;
  e.quartic_2 = 0.5 * p.a2 * s.q2;
  e.cross = p.beta * s.x12;
  e.total = e.kinetic + e.potential_1 + e.potential_2 - e.quartic_1 - e.quartic_2 - e.cross;
  return e;
}

double balance_term(const FieldPair& u, const Params& p) {
  require(p.a1 <= p.a_star && p.a2 <= p.a_star, ErrorKind::OutOfRange, "balance term needs a1, a2 <= a*");
  check_same_grid(u.u1.grid(), u.u2.grid());
  const double s1 = std::sqrt(p.a_star - p.a1);
  const double s2 = std::sqrt(p.a_star - p.a2);
  double s = 0.0;
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    const double d = s1 * u.u1[k] * u.u1[k] - s2 * u.u2[k] * u.u2[k];
    s += d * d;
  }
  return 0.5 * s * u.grid().cell_area();
}

double density_square(const FieldPair& u) {
  check_same_grid(u.u1.grid(), u.u2.grid());
  double s = 0.0;
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    const double rho = u.u1[k] * u.u1[k] + u.u2[k] * u.u2[k];
    s += rho * rho;
  }
  return s * u.grid().cell_area();
}

double energy_decomposed(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, DiffOperator& ops) {
  check_grids(u, v1, v2, ops);
  require(p.a1 <= p.a_star && p.a2 <= p.a_star, ErrorKind::OutOfRange, "decomposition needs a1, a2 <= a*");
  const LocalIntegrals s = local_integrals(u, v1, v2);
  const double kinetic = ops.kinetic(u.u1) + ops.kinetic(u.u2);
  const double bstar = beta_star(p.a1, p.a2, p.a_star);
  return kinetic - 0.5 * p.a_star * density_square(u) + s.pot1 + s.pot2 + balance_term(u, p) +
         (bstar - p.beta) * s.x12;
}

double gn_slack(const FieldPair& u, double a_star, DiffOperator& ops) {
  const double n = mass(u);
  require(n > 0.0, ErrorKind::ZeroField, "GN ratio of a zero field");
  const double kinetic = ops.kinetic(u.u1) + ops.kinetic(u.u2);
  return 2.0 / a_star * kinetic * n - density_square(u);
}

Residual el_residual(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, double mu,
                     DiffOperator& ops) {
  check_grids(u, v1, v2, ops);
  Field r1 = ops.laplacian(u.u1);
  Field r2 = ops.laplacian(u.u2);
  double s = 0.0;
  for (std::size_t k = 0; k < r1.size(); ++k) {
    const double a = u.u1[k];
    const double b = u.u2[k];
    r1[k] = -r1[k] + (v1[k] - mu - p.a1 * a * a - p.beta * b * b) * a;
    r2[k] = -r2[k] + (v2[k] - mu - p.a2 * b * b - p.beta * a * a) * b;
    s += r1[k] * r1[k] + r2[k] * r2[k];
  }
  Residual out{std::move(r1), std::move(r2), 0.0};
  ops.apply_boundary(out.r1);
  ops.apply_boundary(out.r2);
  if (u.grid().mode() == DerivativeMode::FiniteDifferenceDirichlet) {
    s = 0.0;
    for (std::size_t k = 0; k < out.r1.size(); ++k) s += out.r1[k] * out.r1[k] + out.r2[k] * out.r2[k];
  }
  out.norm = std::sqrt(s * u.grid().cell_area());
  return out;
}

ChemicalPotential chemical_potential(const FieldPair& u, const Params& p, const Field& v1, const Field& v2,
                                     double e_value, DiffOperator& ops) {
  check_grids(u, v1, v2, ops);
  const LocalIntegrals s = local_integrals(u, v1, v2);
  ChemicalPotential out;
  out.mu = e_value - 0.5 * p.a1 * s.q1 - 0.5 * p.a2 * s.q2 - p.beta * s.x12;
  const double kinetic = -integrate_product(u.u1, ops.laplacian(u.u1)) - integrate_product(u.u2, ops.laplacian(u.u2));
  const double n = mass(u);
  require(n > 0.0, ErrorKind::ZeroField, "chemical potential of a zero field");
  out.mu_rayleigh = (kinetic + s.pot1 + s.pot2 - p.a1 * s.q1 - p.a2 * s.q2 - 2.0 * p.beta * s.x12) / n;
  out.discrepancy = std::abs(out.mu - out.mu_rayleigh);
  return out;
}

double trial_cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double t = r - 1.0;
  return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

FieldPair trial_state(double tau, double theta, Point x0, const Grid2D& grid, const townes::RadialProfile& w,
                      double a_star) {
  require(tau > 0.0, ErrorKind::InvalidArgument, "trial scale must be positive");
  require(theta >= 0.0 && theta <= 1.0, ErrorKind::InvalidArgument, "trial mixing must lie in [0, 1]");
  require(1.0 / tau >= 4.0 * grid.spacing(), ErrorKind::InvalidArgument,
          "trial profile width 1/tau is below four grid spacings");
  const double amp = tau / std::sqrt(a_star);
  Field shape = Field::from_function(grid, [&](Point x) {
    const double r = norm(x - x0);
    return amp * trial_cutoff(r) * w(tau * r);
  });
  FieldPair out{shape, shape};
  const double s1 = std::sqrt(theta);
  const double s2 = std::sqrt(1.0 - theta);
  for (std::size_t k = 0; k < shape.size(); ++k) {
    out.u1[k] *= s1;
    out.u2[k] *= s2;
  }
  const double m = mass(out);
  require(m > 0.0, ErrorKind::ZeroField, "trial state vanishes on the grid");
  const double scale = 1.0 / std::sqrt(m);
  for (std::size_t k = 0; k < shape.size(); ++k) {
    out.u1[k] *= scale;
    out.u2[k] *= scale;
  }
  return out;
}

double trial_energy(double tau, double theta, Point x0, const Params& p, const Field& v1, const Field& v2,
                    const townes::RadialProfile& w, DiffOperator& ops) {
  const FieldPair u = trial_state(tau, theta, x0, ops.grid(), w, p.a_star);
  return energy(u, p, v1, v2, ops).total;
}

}  // namespace gpmin
