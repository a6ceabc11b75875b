#pragma once

#include "gpmin/grid.hpp"
#include "gpmin/operators.hpp"
#include "gpmin/potential.hpp"
#include "gpmin/townes.hpp"

namespace gpmin {

/// Interaction coefficients. a_star is the critical mass of the Townes profile.
struct Params {
  double a1 = 0.0;
  double a2 = 0.0;
  double beta = 0.0;
  double a_star = 0.0;
};

/// Terms of E(u1, u2); total = kinetic + potential_1 + potential_2 - quartic_1 - quartic_2 - cross.
struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential_1 = 0.0;
  double potential_2 = 0.0;
  double quartic_1 = 0.0;  // (a1/2) int u1^4
  double quartic_2 = 0.0;  // (a2/2) int u2^4
  double cross = 0.0;      // beta int u1^2 u2^2
  double total = 0.0;
};

EnergyBreakdown energy(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, DiffOperator& ops);

/// The same functional regrouped around the critical mass:
///   K - (a*/2) int (u1^2+u2^2)^2 + int V1 u1^2 + int V2 u2^2
///   + 1/2 int (sqrt(a*-a1) u1^2 - sqrt(a*-a2) u2^2)^2 + (beta* - beta) int u1^2 u2^2.
/// Requires a1, a2 <= a*.
double energy_decomposed(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, DiffOperator& ops);

/// (1/2) int (sqrt(a*-a1) u1^2 - sqrt(a*-a2) u2^2)^2.
double balance_term(const FieldPair& u, const Params& p);

/// Gagliardo-Nirenberg slack (2/a*) K N - int (u1^2+u2^2)^2 with N the joint mass.
/// Nonnegative up to discretization error; zero for (w sin t, w cos t).
double gn_slack(const FieldPair& u, double a_star, DiffOperator& ops);

/// int (u1^2 + u2^2)^2, the natural scale for gn_slack.
double density_square(const FieldPair& u);

struct Residual {
  Field r1;
  Field r2;
  double norm = 0.0;
};

/// r_i = -Lap u_i + V_i u_i - mu u_i - a_i u_i^3 - beta u_j^2 u_i.
Residual el_residual(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, double mu,
                     DiffOperator& ops);

struct ChemicalPotential {
  double mu = 0.0;           // e - (a1/2) int u1^4 - (a2/2) int u2^4 - beta int u1^2 u2^2
  double mu_rayleigh = 0.0;  // <u, H u> / <u, u>, kinetic through the Laplacian
  double discrepancy = 0.0;  // |mu - mu_rayleigh|
};

ChemicalPotential chemical_potential(const FieldPair& u, const Params& p, const Field& v1, const Field& v2,
                                     double e_value, DiffOperator& ops);

/// Cutoff used by the trial states: 1 on r <= 1, 0 on r >= 2, quintic smoothstep between.
double trial_cutoff(double r);

/// Jointly normalized pair (sqrt(theta), sqrt(1-theta)) A tau/||w|| phi(x-x0) w(tau |x-x0|).
/// Throws InvalidArgument if the profile width 1/tau is below 4 grid spacings.
FieldPair trial_state(double tau, double theta, Point x0, const Grid2D& grid, const townes::RadialProfile& w,
                      double a_star);

double trial_energy(double tau, double theta, Point x0, const Params& p, const Field& v1, const Field& v2,
                    const townes::RadialProfile& w, DiffOperator& ops);

}  // namespace gpmin
