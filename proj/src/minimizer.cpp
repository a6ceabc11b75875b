#include "gpmin/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <random>

#include "gpmin/asymptotics.hpp"
#include "gpmin/error.hpp"

namespace gpmin {

void SolverOptions::validate() const {
  require(dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
  require(tol > 0.0, ErrorKind::InvalidArgument, "tol must be positive");
  require(refine_trigger >= 4.0, ErrorKind::InvalidArgument, "refine_trigger must be at least 4");
  require(check_every > 0, ErrorKind::InvalidArgument, "check_every must be positive");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::NeedsRefinement: return "needs_refinement";
    case Status::NoConvergence: return "no_convergence";
    case Status::DivergenceSuspected: return "divergence_suspected";
  }
  return "no_convergence";
}

FieldPair project(const FieldPair& u) {
  check_same_grid(u.u1.grid(), u.u2.grid());
  FieldPair out = u;
  for (std::size_t k = 0; k < out.u1.size(); ++k) {
    out.u1[k] = std::max(out.u1[k], 0.0);
    out.u2[k] = std::max(out.u2[k], 0.0);
  }
  const double m = mass(out);
  require(m > 0.0, ErrorKind::ZeroField, "cannot project a zero pair");
  require(std::isfinite(m), ErrorKind::NonFinite, "non-finite mass in projection");
  const double s = 1.0 / std::sqrt(m);
  for (std::size_t k = 0; k < out.u1.size(); ++k) {
    out.u1[k] *= s;
    out.u2[k] *= s;
  }
  return out;
}

namespace {

double rayleigh_mu(const EnergyBreakdown& e, double m) {
  return (e.kinetic + e.potential_1 + e.potential_2 - 2.0 * (e.quartic_1 + e.quartic_2 + e.cross)) / m;
}

FieldPair step_from(const FieldPair& u, const EnergyBreakdown& eu, const Params& p, const Field& v1, const Field& v2,
                    double dt, DiffOperator& ops) {
  const double mu = rayleigh_mu(eu, mass(u));
  // Every node counts: a potential term above the shift would amplify round-off in the far tail.
  double c = 0.0;
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    const double a = u.u1[k] * u.u1[k];
    const double b = u.u2[k] * u.u2[k];
    c = std::max(c, std::abs(v1[k] - p.a1 * a - p.beta * b - mu));
    c = std::max(c, std::abs(v2[k] - p.a2 * b - p.beta * a - mu));
  }
  Field r1(u.grid());
  Field r2(u.grid());
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    const double x = u.u1[k];
    const double y = u.u2[k];
    r1[k] = x + dt * (c + mu - v1[k] + p.a1 * x * x + p.beta * y * y) * x;
    r2[k] = y + dt * (c + mu - v2[k] + p.a2 * y * y + p.beta * x * x) * y;
  }
  FieldPair out{ops.solve_shifted(r1, dt, c), ops.solve_shifted(r2, dt, c)};
  for (std::size_t k = 0; k < out.u1.size(); ++k)
    require(std::isfinite(out.u1[k]) && std::isfinite(out.u2[k]), ErrorKind::NonFinite,
            "flow step produced non-finite values; reduce dt");
  return project(out);
}

}  // namespace

FieldPair flow_step(const FieldPair& u, const Params& p, const Field& v1, const Field& v2, double dt,
                    DiffOperator& ops) {
  require(dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
  return step_from(u, energy(u, p, v1, v2, ops), p, v1, v2, dt, ops);
}

FieldPair gaussian_state(const Grid2D& grid, Point center, double width, double theta, double noise,
                         std::uint64_t seed) {
  require(width > 0.0, ErrorKind::InvalidArgument, "Gaussian width must be positive");
  require(theta >= 0.0 && theta <= 1.0, ErrorKind::InvalidArgument, "mixing must lie in [0, 1]");
  Field g = Field::from_function(grid, [&](Point x) {
    const Point d = x - center;
    return std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * width * width));
  });
  FieldPair out{g, g};
  const double s1 = std::sqrt(theta);
  const double s2 = std::sqrt(1.0 - theta);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> xi;
  for (std::size_t k = 0; k < g.size(); ++k) {
    out.u1[k] *= s1 * (noise != 0.0 ? 1.0 + noise * xi(rng) : 1.0);
    out.u2[k] *= s2 * (noise != 0.0 ? 1.0 + noise * xi(rng) : 1.0);
  }
  if (grid.mode() == DerivativeMode::FiniteDifferenceDirichlet) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      out.u1.at(i, 0) = out.u1.at(0, i) = 0.0;
      out.u2.at(i, 0) = out.u2.at(0, i) = 0.0;
    }
  }
  return project(out);
}

namespace {

constexpr double kBoundaryMass = 1e-10;
constexpr std::size_t kStallChecks = 100;
// Half-box in units of eps beyond which the rescaled Townes tail carries < 1e-10 of the mass.
constexpr double kBoxPerEps = 26.0;

FieldPair onto(const FieldPair& u, const Grid2D& grid) {
  if (u.grid() == grid) return u;
  FieldPair out{resample(u.u1, grid), resample(u.u2, grid)};
  if (grid.mode() == DerivativeMode::FiniteDifferenceDirichlet) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      out.u1.at(i, 0) = out.u1.at(0, i) = 0.0;
      out.u2.at(i, 0) = out.u2.at(0, i) = 0.0;
    }
  }
  return project(out);
}

Point snap(const Grid2D& g, Point p) {
  const double h = g.spacing();
  const double i = std::round((p.x - g.x(0)) / h);
  const double j = std::round((p.y - g.y(0)) / h);
  return {g.x(0) + i * h, g.y(0) + j * h};
}

}  // namespace

Grid2D refined_grid(const Grid2D& grid, Point peak_point, double eps, double trigger) {
  require(eps > 0.0 && trigger > 0.0, ErrorKind::InvalidArgument, "refinement needs positive eps and trigger");
  std::size_t n = grid.n();
  const double lo = kBoxPerEps * eps;
  while (true) {
    const double hi = static_cast<double>(n) * eps / (2.0 * trigger);
    if (lo <= hi) {
      const double L = grid.half_width();
      const double target = L < lo ? lo : std::max(lo, std::min(0.5 * L, hi));
      return Grid2D(n, target, grid.mode(), snap(grid, peak_point));
    }
    n *= 2;
  }
}

namespace {

std::ostream* progress = nullptr;
std::mutex progress_mutex;

void log_solve(const Params& p, const MinimizeResult& r, double seconds) {
  if (progress == nullptr) return;
  const Grid2D& g = r.fields.grid();
  char buf[256];
  std::snprintf(buf, sizeof buf, "beta=%.6g n=%zu L=%.4g center=(%.4g,%.4g) %s iters=%zu residual=%.3g eps=%.4g e=%.8g %.1fs\n",
                p.beta, g.n(), g.half_width(), g.center().x, g.center().y, to_string(r.status), r.iters, r.residual,
                r.eps, r.e_value, seconds);
  std::lock_guard lock(progress_mutex);
  *progress << buf << std::flush;
}

}  // namespace

void set_progress_log(std::ostream* out) {
  std::lock_guard lock(progress_mutex);
  progress = out;
}

MinimizeResult minimize(const Params& p, const PotentialSpec& v1spec, const PotentialSpec& v2spec,
                        const Grid2D& grid, const FieldPair& init, const SolverOptions& opts) {
  opts.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto v1p = eval_potential(v1spec, grid);
  const auto v2p = eval_potential(v2spec, grid);
  const Field& v1 = *v1p;
  const Field& v2 = *v2p;
  DiffOperator ops(grid);

  FieldPair u = onto(init, grid);
  EnergyBreakdown e = energy(u, p, v1, v2, ops);
  const double k0 = e.kinetic;
  FieldPair u_prev = u;
  double dt = opts.dt;
  const double dt_max = 100.0 * opts.dt;
  std::size_t momentum = 0;
  std::size_t accepted = 0;

  MinimizeResult out{u, e, 0.0, 0.0, 0.0, 0.0, 0, 0.0, 0.0, Status::NoConvergence, std::nullopt};
  out.status = Status::NoConvergence;
  const double h = grid.spacing();
  std::size_t it = 0;
  bool converged = false;
  bool diverging = false;
  double best_residual = std::numeric_limits<double>::infinity();
  std::size_t stalled_checks = 0;

  auto check = [&] {
    const ChemicalPotential cp = chemical_potential(u, p, v1, v2, e.total, ops);
    out.mu = cp.mu;
    out.mu_rayleigh = cp.mu_rayleigh;
    out.residual = el_residual(u, p, v1, v2, cp.mu_rayleigh, ops).norm;
    return out.residual <= opts.tol;
  };

  for (it = 1; it <= opts.max_iters; ++it) {
    const bool extrapolate = opts.accelerate && momentum > 0;
    FieldPair y = u;
    FieldPair candidate = u;
    if (extrapolate) {
      const double m = static_cast<double>(momentum) / (static_cast<double>(momentum) + 3.0);
      for (std::size_t k = 0; k < y.u1.size(); ++k) {
        y.u1[k] += m * (u.u1[k] - u_prev.u1[k]);
        y.u2[k] += m * (u.u2[k] - u_prev.u2[k]);
      }
      y = project(y);
      candidate = step_from(y, energy(y, p, v1, v2, ops), p, v1, v2, dt, ops);
    } else {
      candidate = step_from(u, e, p, v1, v2, dt, ops);
    }
    const EnergyBreakdown ec = energy(candidate, p, v1, v2, ops);
    if (ec.total <= e.total + 1e-12) {
      // Restart on any energy increase, even within round-off, and whenever the step
      // (y -> candidate) opposes the motion (u -> candidate). The second test still
      // works once energy differences drown in round-off.
      double along = 0.0;
      for (std::size_t k = 0; k < y.u1.size(); ++k)
        along += (candidate.u1[k] - y.u1[k]) * (candidate.u1[k] - u.u1[k]) +
                 (candidate.u2[k] - y.u2[k]) * (candidate.u2[k] - u.u2[k]);
      const double noise = 1e-13 * (e.kinetic + e.potential_1 + e.potential_2 + e.quartic_1 + e.quartic_2 + e.cross);
      momentum = ec.total <= e.total + noise && along >= 0.0 ? momentum + 1 : 0;
      u_prev = std::move(u);
      u = std::move(candidate);
      e = ec;
      ++accepted;
      dt = std::min(1.25 * dt, dt_max);
    } else if (extrapolate) {
      momentum = 0;
      continue;
    } else {
      dt *= 0.5;
      if (dt < 1e-12 * opts.dt) {
        converged = check();
        break;
      }
      continue;
    }
    if (accepted % opts.check_every == 0) {
      if (check()) {
        converged = true;
        break;
      }
      // Width below two grid spacings with energy still falling: collapse, not convergence.
      if (e.kinetic * 4.0 * h * h > 1.0) {
        diverging = true;
        break;
      }
      // Give up once the residual has stalled: no 1% gain over kStallChecks checks.
      if (out.residual < 0.99 * best_residual) {
        best_residual = out.residual;
        stalled_checks = 0;
      } else if (++stalled_checks >= kStallChecks) {
        break;
      }
    }
  }
  if (!converged && !diverging) converged = check();

  out.fields = u;
  out.breakdown = e;
  out.e_value = e.total;
  out.iters = std::min(it, opts.max_iters);
  out.eps = 1.0 / std::sqrt(e.kinetic);
  out.boundary_mass = mass_outside(u, grid.center(), grid.half_width() / 2.0);
  if (converged) {
    const bool resolved = out.eps >= opts.refine_trigger * h;
    const bool contained = out.boundary_mass < kBoundaryMass;
    if (resolved && contained) {
      out.status = Status::Converged;
    } else {
      out.status = Status::NeedsRefinement;
      Point z = grid.center();
      try {
        z = peak(integrate_power(u.u1, 2) >= integrate_power(u.u2, 2) ? u.u1 : u.u2);
      } catch (const Error&) {
      }
      out.suggested_grid = refined_grid(grid, z, out.eps, opts.refine_trigger);
    }
  } else if (diverging || e.kinetic > 4.0 * k0) {
    out.status = Status::DivergenceSuspected;
  }
  ChemicalPotential cp = chemical_potential(u, p, v1, v2, e.total, ops);
  out.mu = cp.mu;
  out.mu_rayleigh = cp.mu_rayleigh;
  log_solve(p, out, std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  return out;
}

MinimizeResult minimize_adaptive(const Params& p, const PotentialSpec& v1, const PotentialSpec& v2,
                                 const Grid2D& grid, const FieldPair& init, const SolverOptions& opts,
                                 int max_regrids) {
  MinimizeResult r = minimize(p, v1, v2, grid, init, opts);
  for (int k = 0; k < max_regrids && r.status == Status::NeedsRefinement; ++k)
    r = minimize(p, v1, v2, *r.suggested_grid, r.fields, opts);
  return r;
}

Point peak(const Field& f) {
  const Grid2D& g = f.grid();
  const std::size_t n = g.n();
  std::size_t bi = 0;
  std::size_t bj = 0;
  double best = -std::numeric_limits<double>::infinity();
  // x-major scan so ties resolve to the lexicographically smallest node.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (f.at(i, j) > best) {
        best = f.at(i, j);
        bi = i;
        bj = j;
      }
  require(best > 0.0, ErrorKind::FlatField, "field has no positive maximum");
  const double resolution = 1e-12 * best;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto di = std::min((i + n - bi) % n, (bi + n - i) % n);
      const auto dj = std::min((j + n - bj) % n, (bj + n - j) % n);
      if ((di > 1 || dj > 1) && f.at(i, j) >= best - resolution)
        throw Error(ErrorKind::FlatField, "maximum is not isolated");
    }
  auto at = [&](long di, long dj) {
    const auto ii = static_cast<std::size_t>((static_cast<long>(bi) + di + static_cast<long>(n)) % static_cast<long>(n));
    const auto jj = static_cast<std::size_t>((static_cast<long>(bj) + dj + static_cast<long>(n)) % static_cast<long>(n));
    return f.at(ii, jj);
  };
  const double gx = 0.5 * (at(1, 0) - at(-1, 0));
  const double gy = 0.5 * (at(0, 1) - at(0, -1));
  const double hxx = at(1, 0) - 2.0 * best + at(-1, 0);
  const double hyy = at(0, 1) - 2.0 * best + at(0, -1);
  const double hxy = 0.25 * (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1));
  const double det = hxx * hyy - hxy * hxy;
  require(hxx < 0.0 && det > 0.0, ErrorKind::FlatField, "maximum is not a strict local maximum");
  const double dx = -(hyy * gx - hxy * gy) / det;
  const double dy = -(-hxy * gx + hxx * gy) / det;
  require(std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0, ErrorKind::FlatField, "quadratic fit leaves the cell");
  const double h = g.spacing();
  return {g.x(bi) + dx * h, g.y(bj) + dy * h};
}

Observables observables(const FieldPair& u, DiffOperator& ops, const townes::RadialProfile& w, double gamma_,
                        double a_star) {
  Observables o;
  o.eps = 1.0 / std::sqrt(ops.kinetic(u.u1) + ops.kinetic(u.u2));
  o.z1 = peak(u.u1);
  o.z2 = peak(u.u2);
  o.mass_ratio = integrate_power(u.u1, 4) / integrate_power(u.u2, 4);
  const double s1 = std::sqrt(gamma_) / (o.eps * std::sqrt(a_star));
  const double s2 = std::sqrt(1.0 - gamma_) / (o.eps * std::sqrt(a_star));
  const Field w1 = townes::sample_profile(w, u.grid(), o.z1, o.eps);
  const Field w2 = townes::sample_profile(w, u.grid(), o.z2, o.eps);
  double err = 0.0;
  for (std::size_t k = 0; k < w1.size(); ++k) {
    const double d1 = u.u1[k] - s1 * w1[k];
    const double d2 = u.u2[k] - s2 * w2[k];
    err += d1 * d1 + d2 * d2;
  }
  o.profile_err = std::sqrt(err * u.grid().cell_area());
  o.peak_gap_over_eps = norm(o.z1 - o.z2) / o.eps;
  return o;
}

FieldPair dilate(const FieldPair& u, Point c, double s, const Grid2D& grid) {
  require(s > 0.0, ErrorKind::InvalidArgument, "dilation factor must be positive");
  auto map = [&](Point x) { return c + (1.0 / s) * (x - c); };
  FieldPair out{resample(u.u1, grid, map), resample(u.u2, grid, map)};
  if (grid.mode() == DerivativeMode::FiniteDifferenceDirichlet) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      out.u1.at(i, 0) = out.u1.at(0, i) = 0.0;
      out.u2.at(i, 0) = out.u2.at(0, i) = 0.0;
    }
  }
  return project(out);
}

std::vector<ContinuationStep> continuation(const Params& base, const std::vector<double>& betas,
                                           const PotentialSpec& v1, const PotentialSpec& v2, const Grid2D& grid0,
                                           const FieldPair& init, const SolverOptions& opts,
                                           const AsymptoticModel& model, const townes::RadialProfile& w) {
  require(!betas.empty(), ErrorKind::InvalidArgument, "empty beta schedule");
  for (std::size_t k = 0; k < betas.size(); ++k) {
    require(betas[k] < model.beta_star, ErrorKind::OutOfRange, "schedule must stay below beta*");
    require(k == 0 || betas[k] > betas[k - 1], ErrorKind::InvalidArgument, "schedule must be strictly increasing");
  }
  std::vector<ContinuationStep> out;
  std::optional<MinimizeResult> last;
  double last_beta = 0.0;
  Grid2D grid = grid0;
  for (double beta : betas) {
    Params p = base;
    p.beta = beta;
    std::optional<MinimizeResult> result;
    try {
      FieldPair start = init;
      if (last) {
        grid = last->fields.grid();
        const double s = eps_bar(beta, model) / eps_bar(last_beta, model);
        Point z = grid.center();
        try {
          z = peak(last->fields.u1);
        } catch (const Error&) {
        }
        const double eps_next = last->eps * s;
        if (eps_next < opts.refine_trigger * grid.spacing()) grid = refined_grid(grid, z, eps_next, opts.refine_trigger);
        start = dilate(last->fields, z, s, grid);
      }
      result = minimize_adaptive(p, v1, v2, grid, start, opts);
    } catch (const Error& e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "beta=%.17g: ", beta);
      throw Error(e.kind(), buf + std::string(e.what()));
    }
    ContinuationStep step{beta, std::move(*result), {}, {}};
    if (step.result.status == Status::Converged) {
      DiffOperator ops(step.result.fields.grid());
      try {
        step.obs = observables(step.result.fields, ops, w, model.gamma, model.a_star);
      } catch (const Error& e) {
        step.error = e.what();
      }
      last = step.result;
      last_beta = beta;
    }
    out.push_back(std::move(step));
  }
  return out;
}

double aligned_distance(const FieldPair& a, const FieldPair& b) {
  check_same_grid(a.grid(), b.grid());
  const Point shift = peak(a.u1) - peak(b.u1);
  if (shift.x == 0.0 && shift.y == 0.0) return l2_distance(a, b);
  DiffOperator ops(b.grid());
  const FieldPair moved{ops.translate(b.u1, shift), ops.translate(b.u2, shift)};
  return l2_distance(a, moved);
}

void to_json(nlohmann::json& j, const MinimizeResult& r) {
  const Grid2D& g = r.fields.grid();
  j = {{"status", to_string(r.status)},
       {"e", r.e_value},
       {"mu", r.mu},
       {"mu_rayleigh", r.mu_rayleigh},
       {"residual", r.residual},
       {"iters", r.iters},
       {"eps", r.eps},
       {"boundary_mass", r.boundary_mass},
       {"kinetic", r.breakdown.kinetic},
       {"grid", {{"n", g.n()}, {"L", g.half_width()}, {"mode", to_string(g.mode())},
                 {"center", {g.center().x, g.center().y}}}}};
}

}  // namespace gpmin
