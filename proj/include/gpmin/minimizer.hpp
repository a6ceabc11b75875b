#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmin/energy.hpp"
#include "gpmin/grid.hpp"
#include "gpmin/operators.hpp"
#include "gpmin/potential.hpp"
#include "gpmin/townes.hpp"

namespace gpmin {

struct AsymptoticModel;

struct SolverOptions {
  double dt = 1.0;               // initial flow step, adapted by backtracking
  double tol = 1e-7;             // EL residual norm at which a run stops
  std::size_t max_iters = 20000;
  double refine_trigger = 8.0;   // minimum resolved width eps / h
  std::uint64_t seed = 0;
  bool accelerate = true;        // Nesterov momentum with adaptive restart
  std::size_t check_every = 10;  // iterations between residual evaluations

  void validate() const;
};

enum class Status { Converged, NeedsRefinement, NoConvergence, DivergenceSuspected };

const char* to_string(Status s);

struct MinimizeResult {
  FieldPair fields;
  EnergyBreakdown breakdown;
  double e_value = 0.0;
  double mu = 0.0;           // e - interaction terms
  double mu_rayleigh = 0.0;  // <u, H u>, used by the stopping test
  double residual = 0.0;
  std::size_t iters = 0;
  double eps = 0.0;          // (kinetic_1 + kinetic_2)^{-1/2}
  double boundary_mass = 0.0;
  Status status = Status::NoConvergence;
  std::optional<Grid2D> suggested_grid;  // set with NeedsRefinement
};

/// Clamp negative nodes to zero, then divide both components by the joint L2 norm.
FieldPair project(const FieldPair& u);

/// One semi-implicit normalized gradient flow step followed by projection:
///   (I + dt(-Lap + c)) u+ = u + dt (c u + mu u - V u + a u^3 + beta v^2 u)
/// with mu the Rayleigh quotient of u and c = max |V - a u^2 - beta v^2 - mu| over the grid.
/// Throws NonFinite if the step produces non-finite values.
FieldPair flow_step(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, double dt, DiffOperator& ops);

/// Gaussian pair (sqrt(theta), sqrt(1 - theta)) exp(-|x - c|^2 / (2 width^2)), projected.
/// A nonzero `noise` multiplies each node by (1 + noise xi) with xi standard normal from `seed`.
FieldPair gaussian_state(const Grid2D& grid, Point center, double width, double theta, double noise = 0.0,
                         std::uint64_t seed = 0);

/// Where minimize writes one line per solve; null (the default) disables it.
void set_progress_log(std::ostream* out);

/// Normalized gradient flow from `init` (resampled onto `grid` if needed).
MinimizeResult minimize(const Params& p, const PotentialSpec& v1, const PotentialSpec& v2, const Grid2D& grid,
                        const FieldPair& init, const SolverOptions& opts);

/// Grid that resolves width `eps` with at least `trigger` points while keeping the
/// mass beyond half the box negligible. Shrinks the box about `peak` (snapped to a
/// node) and doubles n only if no box size satisfies both.
Grid2D refined_grid(const Grid2D& grid, Point peak, double eps, double trigger);

/// minimize, regridding on NeedsRefinement up to `max_regrids` times.
MinimizeResult minimize_adaptive(const Params& p, const PotentialSpec& v1, const PotentialSpec& v2,
                                 const Grid2D& grid, const FieldPair& init, const SolverOptions& opts,
                                 int max_regrids = 4);

struct Observables {
  double eps = 0.0;
  Point z1;
  Point z2;
  double mass_ratio = 0.0;   // int u1^4 / int u2^4
  double profile_err = 0.0;  // joint L2 error against the rescaled limit profile
  double peak_gap_over_eps = 0.0;
};

/// Sub-grid maximum of a field: argmax node refined by a local quadratic fit.
/// Throws FlatField if the maximum is not isolated.
Point peak(const Field& f);

Observables observables(const FieldPair& u, DiffOperator& ops, const townes::RadialProfile& w, double gamma,
                        double a_star);

struct ContinuationStep {
  double beta = 0.0;
  MinimizeResult result;
  Observables obs;
  std::string error;  // set when observables could not be extracted
};

/// Minimizers along an increasing beta schedule, each warm-started from the last
/// converged state dilated about its peak by the ratio of predicted widths.
/// Failed rows keep their status and the next row restarts from the last good state.
std::vector<ContinuationStep> continuation(const Params& base, const std::vector<double>& betas,
                                           const PotentialSpec& v1, const PotentialSpec& v2, const Grid2D& grid,
                                           const FieldPair& init, const SolverOptions& opts,
                                           const AsymptoticModel& model, const townes::RadialProfile& w);

/// The pair x -> u(c + (x - c) / s) / s on `grid`, projected.
FieldPair dilate(const FieldPair& u, Point c, double s, const Grid2D& grid);

/// L2 distance after translating `b` so its first-component peak matches `a`'s.
double aligned_distance(const FieldPair& a, const FieldPair& b);

void to_json(nlohmann::json& j, const MinimizeResult& r);

}  // namespace gpmin
