#pragma once

#include <map>
#include <span>
#include <variant>
#include <vector>

#include "gpmin/grid.hpp"

namespace gpmin::townes {

/// Radial ground state of  w'' + w'/r - w + w^3 = 0  on a uniform mesh r_i = i h_r.
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> w;
  std::vector<double> dw;      // w'(r)
  std::vector<double> slopes;  // monotone cubic slopes used for interpolation
  double w0 = 0.0;
  double r_max = 0.0;
  double h_r = 0.0;
  double stitch_radius = 0.0;  // beyond this radius w = c r^{-1/2} e^{-r}
  double tail_coeff = 0.0;     // c

  /// Monotone cubic interpolation of w; zero beyond r_max.
  double operator()(double radius) const;
};

struct CrossedZero {
  double r;
};
struct TurnedUp {
  double r;
};
struct Resolved {
  RadialProfile profile;
};
using ShotOutcome = std::variant<CrossedZero, TurnedUp, Resolved>;

/// Integrate from r = 0 with w(0) = alpha, w'(0) = 0 by fixed-step RK4 and
/// classify the trajectory.
ShotOutcome shoot(double alpha, double r_max = 30.0, double h_r = 1e-3);

/// Bisect the central value between the TurnedUp and CrossedZero classes and
/// return the positive profile with its exponential tail stitched on.
RadialProfile find_ground_state(double tol = 1e-13, double r_max = 30.0, double h_r = 1e-3);

struct TownesConstants {
  double a_star = 0.0;   // ||w||_2^2
  double grad_sq = 0.0;  // ||grad w||_2^2
  double quartic = 0.0;  // ||w||_4^4
  std::map<double, double> moments;  // p -> int |x|^p w^2 dx

  /// Throws OutOfRange if p was not requested.
  double moment(double p) const;
};

TownesConstants constants(const RadialProfile& profile, std::span<const double> moment_exponents = {});

/// The field x -> w(|x - center| / scale).
Field sample_profile(const RadialProfile& profile, const Grid2D& grid, Point center, double scale);

/// Default-resolution profile, computed once per process.
const RadialProfile& ground_state();

}  // namespace gpmin::townes
