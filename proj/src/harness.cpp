#include "gpmin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <random>

#include "gpmin/error.hpp"

namespace gpmin {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

json spec_json(const PotentialSpec& s) {
  json wells = json::array();
  for (const Well& w : s.wells)
    wells.push_back({{"center", {w.center.x, w.center.y}}, {"exponent", w.exponent}, {"weight", w.weight}});
  return {{"form", to_string(s.form)}, {"wells", wells}};
}

PotentialSpec spec_from(const json& j) {
  PotentialSpec s;
  s.form = parse_form(j.value("form", std::string("product")));
  for (const json& w : j.at("wells")) {
    const auto c = w.value("center", std::vector<double>{0.0, 0.0});
    require(c.size() == 2, ErrorKind::InvalidArgument, "well center needs two coordinates");
    s.wells.push_back(Well{{c[0], c[1]}, w.value("exponent", 2.0), w.value("weight", 1.0)});
  }
  s.validate();
  return s;
}

json config_json(const ExperimentConfig& c, bool with_output) {
  json j = {
      {"a1_frac", c.a1_frac},
      {"a2_frac", c.a2_frac},
      {"beta_schedule", c.beta_schedule},
      {"v1", spec_json(c.v1)},
      {"v2", spec_json(c.v2)},
      {"grid",
       {{"n", c.grid.n},
        {"L", c.grid.half_width},
        {"mode", to_string(c.grid.mode)},
        {"center", {c.grid.center.x, c.grid.center.y}}}},
      {"solver",
       {{"dt", c.solver.dt},
        {"tol", c.solver.tol},
        {"max_iters", c.solver.max_iters},
        {"refine_trigger", c.solver.refine_trigger},
        {"seed", c.solver.seed},
        {"accelerate", c.solver.accelerate},
        {"check_every", c.solver.check_every}}},
      {"fit_window", c.fit_window},
      {"n_starts", c.n_starts},
      {"beta_frac", c.beta_frac},
      {"nonexistence",
       {{"beta_frac_super", c.nonexistence.beta_frac_super},
        {"a1_frac_super", c.nonexistence.a1_frac_super},
        {"beta_frac_sub", c.nonexistence.beta_frac_sub},
        {"tau_min", c.nonexistence.tau_min},
        {"tau_max", c.nonexistence.tau_max},
        {"tau_count", c.nonexistence.tau_count},
        {"n", c.nonexistence.n},
        {"L", c.nonexistence.half_width},
        {"tail", c.nonexistence.tail},
        {"run_flow", c.nonexistence.run_flow},
        {"flow_iters", c.nonexistence.flow_iters}}},
  };
  if (with_output) j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(a1_frac > 0.0 && a2_frac > 0.0, ErrorKind::InvalidArgument, "a1_frac and a2_frac must be positive");
  require(!beta_schedule.empty(), ErrorKind::InvalidArgument, "beta_schedule is empty");
  for (std::size_t k = 0; k < beta_schedule.size(); ++k) {
    require(beta_schedule[k] > 0.0, ErrorKind::InvalidArgument, "beta_schedule entries must be positive");
    require(k == 0 || beta_schedule[k] > beta_schedule[k - 1], ErrorKind::InvalidArgument,
            "beta_schedule must be strictly increasing");
  }
  v1.validate();
  v2.validate();
  solver.validate();
  require(fit_window >= 4, ErrorKind::InvalidArgument, "fit_window must be at least 4");
  require(n_starts >= 1, ErrorKind::InvalidArgument, "n_starts must be at least 1");
  require(nonexistence.tau_min > 0.0 && nonexistence.tau_max > nonexistence.tau_min, ErrorKind::InvalidArgument,
          "tau range must be increasing and positive");
  require(nonexistence.tau_count >= nonexistence.tail + 2, ErrorKind::InvalidArgument,
          "tau_count must exceed the decreasing tail");
  (void)grid.grid();
}

std::string ExperimentConfig::hash() const {
  const std::string text = config_json(*this, false).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void to_json(json& j, const ExperimentConfig& c) { j = config_json(c, true); }

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  c.a1_frac = j.value("a1_frac", c.a1_frac);
  c.a2_frac = j.value("a2_frac", c.a2_frac);
  c.beta_schedule = j.value("beta_schedule", c.beta_schedule);
  if (j.contains("v1")) c.v1 = spec_from(j.at("v1"));
  if (j.contains("v2")) c.v2 = spec_from(j.at("v2"));
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    c.grid.n = g.value("n", c.grid.n);
    c.grid.half_width = g.value("L", c.grid.half_width);
    c.grid.mode = parse_mode(g.value("mode", std::string(to_string(c.grid.mode))));
    const auto ctr = g.value("center", std::vector<double>{0.0, 0.0});
    require(ctr.size() == 2, ErrorKind::InvalidArgument, "grid center needs two coordinates");
    c.grid.center = {ctr[0], ctr[1]};
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    c.solver.dt = s.value("dt", c.solver.dt);
    c.solver.tol = s.value("tol", c.solver.tol);
    c.solver.max_iters = s.value("max_iters", c.solver.max_iters);
    c.solver.refine_trigger = s.value("refine_trigger", c.solver.refine_trigger);
    c.solver.seed = s.value("seed", c.solver.seed);
    c.solver.accelerate = s.value("accelerate", c.solver.accelerate);
    c.solver.check_every = s.value("check_every", c.solver.check_every);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
  c.fit_window = j.value("fit_window", c.fit_window);
  c.n_starts = j.value("n_starts", c.n_starts);
  c.beta_frac = j.value("beta_frac", c.beta_frac);
  if (j.contains("nonexistence")) {
    const json& s = j.at("nonexistence");
    NonexistenceSettings& n = c.nonexistence;
    n.beta_frac_super = s.value("beta_frac_super", n.beta_frac_super);
    n.a1_frac_super = s.value("a1_frac_super", n.a1_frac_super);
    n.beta_frac_sub = s.value("beta_frac_sub", n.beta_frac_sub);
    n.tau_min = s.value("tau_min", n.tau_min);
    n.tau_max = s.value("tau_max", n.tau_max);
    n.tau_count = s.value("tau_count", n.tau_count);
    n.n = s.value("n", n.n);
    n.half_width = s.value("L", n.half_width);
    n.tail = s.value("tail", n.tail);
    n.run_flow = s.value("run_flow", n.run_flow);
    n.flow_iters = s.value("flow_iters", n.flow_iters);
  }
  c.validate();
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- fitting

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y, std::size_t window) {
  require(x.size() == y.size(), ErrorKind::InvalidArgument, "fit needs matching x and y");
  require(window >= 4, ErrorKind::InvalidArgument, "fit window needs at least 4 points");
  require(x.size() >= window, ErrorKind::InvalidArgument, "fewer points than the fit window");
  FitResult f;
  const std::size_t first = x.size() - window;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = first; k < x.size(); ++k) {
    require(x[k] > 0.0 && y[k] > 0.0, ErrorKind::OutOfRange, "log-log fit needs positive data");
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    f.window.push_back(k);
  }
  const double m = static_cast<double>(window);
  const double den = m * sxx - sx * sx;
  require(den > 0.0, ErrorKind::InvalidArgument, "fit abscissae are degenerate");
  f.exponent = (m * sxy - sx * sy) / den;
  const double intercept = (sy - f.exponent * sx) / m;
  f.prefactor = std::exp(intercept);
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean = sy / m;
  for (std::size_t k = first; k < x.size(); ++k) {
    const double ly = std::log(y[k]);
    const double r = ly - (intercept + f.exponent * std::log(x[k]));
    ss_res += r * r;
    ss_tot += (ly - mean) * (ly - mean);
  }
  f.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return f;
}

void to_json(json& j, const FitResult& f) {
  j = {{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r_squared", f.r_squared}, {"window", f.window}};
}

void to_json(json& j, const Check& c) {
  j = {{"name", c.name}, {"value", c.value}, {"target", c.target}, {"tolerance", c.tolerance}, {"pass", c.pass}};
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

// ---------------------------------------------------------------- scans

namespace {

const townes::RadialProfile& profile() { return townes::ground_state(); }

double a_star() {
  static const double value = townes::constants(profile()).a_star;
  return value;
}

const HQuadrature& quadrature() {
  static const HQuadrature q(profile());
  return q;
}

Params base_params(const ExperimentConfig& c) { return Params{c.a1_frac * a_star(), c.a2_frac * a_star(), 0.0, a_star()}; }

ScanRow make_row(const ContinuationStep& s) {
  ScanRow r;
  r.beta = s.beta;
  r.e = s.result.e_value;
  r.eps = s.result.eps;
  r.mu = s.result.mu;
  r.mu_eps2 = s.result.mu * s.result.eps * s.result.eps;
  r.status = to_string(s.result.status);
  if (s.result.status == Status::Converged && s.error.empty()) {
    r.mass_ratio = s.obs.mass_ratio;
    r.profile_err = s.obs.profile_err;
    r.peak_gap_over_eps = s.obs.peak_gap_over_eps;
    r.z1 = s.obs.z1;
    r.z2 = s.obs.z2;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.mass_ratio = r.profile_err = r.peak_gap_over_eps = nan;
    r.z1 = r.z2 = {nan, nan};
    if (!s.error.empty()) r.status = "flat_field";
  }
  return r;
}

bool usable(const ScanRow& r) { return r.status == "converged"; }

double min_separation(const AsymptoticModel& m) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < m.wells.size(); ++a)
    for (std::size_t b = a + 1; b < m.wells.size(); ++b) d = std::min(d, norm(m.wells[a].zero - m.wells[b].zero));
  return d;
}

Check within(const std::string& name, double value, double target, double tol) {
  return Check{name, value, target, tol, std::abs(value - target) <= tol};
}

Check below(const std::string& name, double value, double bound) { return Check{name, value, bound, 0.0, value < bound}; }

json rows_json(const std::vector<ScanRow>& rows) {
  json out = json::array();
  for (const ScanRow& r : rows) out.push_back({{"beta", r.beta}, {"e", r.e}, {"eps", r.eps}, {"status", r.status}});
  return out;
}

}  // namespace

ScanData run_scan(const ExperimentConfig& config) {
  config.validate();
  require(config.a1_frac < 1.0 && config.a2_frac < 1.0, ErrorKind::OutOfRange,
          "continuation needs a1, a2 below the critical mass");
  require(config.beta_schedule.back() < 1.0, ErrorKind::OutOfRange, "continuation needs beta below beta*");
  ScanData out{config, classify(config.v1, config.v2, quadrature(), config.a1_frac * a_star(),
                                config.a2_frac * a_star(), a_star()),
               {}, 0};
  const AsymptoticModel& model = out.model;
  std::vector<double> betas;
  for (double f : config.beta_schedule) betas.push_back(f * model.beta_star);
  const Grid2D grid = config.grid.grid();
  const double width = std::min(grid.half_width() / 4.0, min_separation(model) / 4.0);

  std::vector<std::future<Branch>> jobs;
  for (const WellModel& w : model.wells) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      const FieldPair init = gaussian_state(grid, w.zero, width, model.gamma);
      Branch b{w.zero, continuation(base_params(config), betas, config.v1, config.v2, grid, init, config.solver,
                                    model, profile()),
               {}};
      for (const ContinuationStep& s : b.steps) b.rows.push_back(make_row(s));
      return b;
    }));
  }
  for (auto& j : jobs) out.branches.push_back(j.get());

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.branches.size(); ++k) {
    const auto& rows = out.branches[k].rows;
    if (!rows.empty() && usable(rows.back()) && rows.back().e < best) {
      best = rows.back().e;
      out.selected = k;
    }
  }
  return out;
}

namespace {

std::string branch_stem(const std::string& base, const ScanData& s, std::size_t k) {
  return s.branches.size() == 1 ? base : base + "_well" + std::to_string(k);
}

}  // namespace

Report threshold_report(const ScanData& scan) {
  const AsymptoticModel& m = scan.model;
  const Branch& br = scan.branches.at(scan.selected);
  Report rep{"threshold", {}, json::object(), {}};
  for (std::size_t k = 0; k < scan.branches.size(); ++k)
    rep.tables.emplace_back(branch_stem("threshold", scan, k), scan.branches[k].rows);

  std::vector<double> gap, e;
  std::size_t failed = 0;
  for (const ScanRow& r : br.rows) {
    if (!usable(r)) {
      ++failed;
      continue;
    }
    gap.push_back(m.beta_star - r.beta);
    e.push_back(r.e);
  }
  rep.checks.push_back(Check{"rows_converged", static_cast<double>(failed), 0.0, 0.0, failed == 0});
  std::size_t increases = 0;
  for (std::size_t k = 1; k < e.size(); ++k)
    if (!(e[k] < e[k - 1])) ++increases;
  rep.checks.push_back(Check{"energy_strictly_decreasing", static_cast<double>(increases), 0.0, 0.0,
                             increases == 0 && e.size() == br.rows.size()});
  if (e.size() >= 2) rep.checks.push_back(below("energy_finest_over_coarsest", e.back() / e.front(), 0.2));

  const double coeff = predicted_energy_coefficient(m);
  rep.summary["model"] = m;
  rep.summary["predicted_energy_coefficient"] = coeff;
  rep.summary["selected_branch"] = scan.selected;
  rep.summary["rows"] = rows_json(br.rows);
  if (e.size() >= scan.config.fit_window) {
    const FitResult fit = fit_power_law(gap, e, scan.config.fit_window);
    rep.summary["energy_fit"] = fit;
    rep.checks.push_back(within("energy_exponent", fit.exponent, m.p0 / (m.p0 + 2.0), 0.05));
    rep.checks.push_back(within("energy_prefactor_ratio", fit.prefactor / coeff, 1.0, 0.15));
  } else {
    rep.checks.push_back(Check{"energy_fit_points", static_cast<double>(e.size()),
                               static_cast<double>(scan.config.fit_window), 0.0, false});
  }
  return rep;
}

Report blowup_report(const ScanData& scan) {
  const AsymptoticModel& m = scan.model;
  const Branch& br = scan.branches.at(scan.selected);
  Report rep{"blowup", {}, json::object(), {}};
  for (std::size_t k = 0; k < scan.branches.size(); ++k)
    rep.tables.emplace_back(branch_stem("blowup", scan, k), scan.branches[k].rows);

  std::vector<double> gap, eps;
  json trace = json::array();
  for (const ScanRow& r : br.rows) {
    if (!usable(r)) continue;
    gap.push_back(m.beta_star - r.beta);
    eps.push_back(r.eps);
    const double eb = eps_bar(r.beta, m);
    const Point target = predicted_peak(r.beta, m);
    trace.push_back({{"beta", r.beta},
                     {"eps_bar", eb},
                     {"eps_over_eps_bar", r.eps / eb},
                     {"peak_drift_over_eps_bar", norm(r.z1 - target) / eb}});
  }
  rep.summary["model"] = m;
  rep.summary["selected_branch"] = scan.selected;
  rep.summary["trace"] = trace;
  json finals = json::array();
  for (const Branch& b : scan.branches)
    finals.push_back({{"start", {b.start.x, b.start.y}},
                      {"final_e", b.rows.empty() ? 0.0 : b.rows.back().e},
                      {"final_status", b.rows.empty() ? "" : b.rows.back().status}});
  rep.summary["branches"] = finals;

  if (eps.size() < scan.config.fit_window || !usable(br.rows.back())) {
    rep.checks.push_back(Check{"blowup_fit_points", static_cast<double>(eps.size()),
                               static_cast<double>(scan.config.fit_window), 0.0, false});
    return rep;
  }
  const FitResult fit = fit_power_law(gap, eps, scan.config.fit_window);
  rep.summary["eps_fit"] = fit;
  rep.checks.push_back(within("eps_exponent", fit.exponent, 1.0 / (m.p0 + 2.0), 0.03));

  const ScanRow& last = br.rows.back();
  const double eb = eps_bar(last.beta, m);
  rep.checks.push_back(within("eps_over_eps_bar", last.eps / eb, 1.0, 0.10));
  rep.checks.push_back(within("mu_eps2", last.mu_eps2, predicted_mu_eps2(), 0.10));

  double drift = std::numeric_limits<double>::infinity();
  for (std::size_t j : m.z0) {
    const Point target = m.wells[j].zero + eb * m.wells[j].h.y;
    drift = std::min(drift, std::max(norm(last.z1 - target), norm(last.z2 - target)) / eb);
  }
  rep.checks.push_back(below("peak_distance_to_flattest_zero_over_eps_bar", drift, 2.0));

  const double ratio = mass_ratio_limit(m.a1, m.a2, m.a_star);
  rep.checks.push_back(within("mass_ratio_relative_error", last.mass_ratio / ratio - 1.0, 0.0, 0.05));
  rep.checks.push_back(below("profile_err", last.profile_err, 0.05));
  rep.checks.push_back(below("peak_gap_over_eps", last.peak_gap_over_eps, 0.1));
  return rep;
}

Report run_threshold_scan(const ExperimentConfig& config) { return threshold_report(run_scan(config)); }

Report run_blowup_scan(const ExperimentConfig& config) { return blowup_report(run_scan(config)); }

FieldPair reflect(const FieldPair& u, Point a, Point b, const Grid2D& grid) {
  const Point mid = 0.5 * (a + b);
  const Point d = b - a;
  const double len = norm(d);
  require(len > 0.0, ErrorKind::InvalidArgument, "reflection needs two distinct points");
  const Point nrm = (1.0 / len) * d;
  auto map = [&](Point x) {
    const double s = (x.x - mid.x) * nrm.x + (x.y - mid.y) * nrm.y;
    return x - (2.0 * s) * nrm;
  };
  return FieldPair{resample(u.u1, grid, map), resample(u.u2, grid, map)};
}

Report run_symmetry_breaking(const ExperimentConfig& config) {
  const ScanData scan = run_scan(config);
  const AsymptoticModel& m = scan.model;
  require(m.wells.size() == 2, ErrorKind::InvalidArgument, "symmetry breaking needs exactly two common zeros");
  Report rep{"symmetry", {}, json::object(), {}};
  for (std::size_t k = 0; k < 2; ++k) rep.tables.emplace_back("symmetry_well" + std::to_string(k), scan.branches[k].rows);
  rep.summary["model"] = m;

  const ContinuationStep& sa = scan.branches[0].steps.back();
  const ContinuationStep& sb = scan.branches[1].steps.back();
  const ScanRow& ra = scan.branches[0].rows.back();
  const ScanRow& rb = scan.branches[1].rows.back();
  const bool ok = usable(ra) && usable(rb);
  rep.checks.push_back(Check{"both_runs_converged", ok ? 1.0 : 0.0, 1.0, 0.0, ok});
  if (!ok) return rep;

  const double eb = eps_bar(ra.beta, m);
  auto nearest = [&](Point z) {
    return norm(z - m.wells[0].zero) <= norm(z - m.wells[1].zero) ? std::size_t{0} : std::size_t{1};
  };
  for (std::size_t k = 0; k < 2; ++k) {
    const ScanRow& r = scan.branches[k].rows.back();
    rep.checks.push_back(below("well" + std::to_string(k) + "_run_distance_over_eps_bar",
                               norm(r.z1 - m.wells[k].zero) / eb, 2.0));
  }
  rep.checks.push_back(Check{"distinct_wells", nearest(ra.z1) != nearest(rb.z1) ? 1.0 : 0.0, 1.0, 0.0,
                             nearest(ra.z1) != nearest(rb.z1)});
  const double de = std::abs(ra.e - rb.e) / std::abs(ra.e);
  rep.checks.push_back(below("energy_relative_difference", de, 1e-8));
  const FieldPair mirrored = reflect(sb.result.fields, m.wells[0].zero, m.wells[1].zero, sa.result.fields.grid());
  const double dist = l2_distance(sa.result.fields, mirrored);
  rep.checks.push_back(below("mirror_l2_distance", dist, 1e-4));
  rep.summary["energies"] = {ra.e, rb.e};
  rep.summary["peaks"] = {{ra.z1.x, ra.z1.y}, {rb.z1.x, rb.z1.y}};
  return rep;
}

Report run_uniqueness_probe(const ExperimentConfig& config, std::size_t n_starts) {
  config.validate();
  require(n_starts >= 2, ErrorKind::InvalidArgument, "uniqueness probe needs at least two starts");
  require(config.a1_frac < 1.0 && config.a2_frac < 1.0 && config.beta_frac < 1.0, ErrorKind::OutOfRange,
          "uniqueness probe needs the existence regime");
  const AsymptoticModel m =
      classify(config.v1, config.v2, quadrature(), config.a1_frac * a_star(), config.a2_frac * a_star(), a_star());
  Report rep{"uniqueness", {}, json::object(), {}};
  rep.summary["model"] = m;
  rep.checks.push_back(Check{"z0_singleton", static_cast<double>(m.z0.size()), 1.0, 0.0, m.z0.size() == 1});
  const auto& ev = m.selected_well().h.eigenvalues;
  rep.checks.push_back(Check{"h_hessian_min_eigenvalue", ev[0], 0.0, 0.0, ev[0] > 0.0});

  Params p = base_params(config);
  p.beta = config.beta_frac * m.beta_star;
  const Grid2D grid = config.grid.grid();
  const Point zero = m.selected_well().zero;
  const double L = grid.half_width();

  std::vector<std::future<MinimizeResult>> jobs;
  for (std::size_t s = 0; s < n_starts; ++s) {
    jobs.push_back(std::async(std::launch::async, [&, s] {
      std::mt19937_64 rng(config.solver.seed + s);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const Point offset{(unit(rng) - 0.5) * L / 4.0, (unit(rng) - 0.5) * L / 4.0};
      const double width = L / 8.0 * (1.0 + unit(rng));
      const double theta = 0.2 + 0.6 * unit(rng);
      const FieldPair init = gaussian_state(grid, zero + offset, width, theta, 0.1, rng());
      return minimize_adaptive(p, config.v1, config.v2, grid, init, config.solver);
    }));
  }
  std::vector<MinimizeResult> runs;
  for (auto& j : jobs) runs.push_back(j.get());

  std::size_t converged = 0;
  double emin = std::numeric_limits<double>::infinity(), emax = -emin;
  json starts = json::array();
  for (const MinimizeResult& r : runs) {
    if (r.status == Status::Converged) ++converged;
    emin = std::min(emin, r.e_value);
    emax = std::max(emax, r.e_value);
    starts.push_back(r);
  }
  rep.summary["starts"] = starts;
  rep.summary["beta"] = p.beta;
  rep.checks.push_back(Check{"all_converged", static_cast<double>(converged), static_cast<double>(n_starts), 0.0,
                             converged == n_starts});
  double dmax = 0.0;
  bool same_well = true;
  for (std::size_t a = 0; a < runs.size(); ++a)
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      FieldPair other = runs[b].fields;
      if (!(other.grid() == runs[a].fields.grid()))
        other = project(FieldPair{resample(other.u1, runs[a].fields.grid()), resample(other.u2, runs[a].fields.grid())});
      dmax = std::max(dmax, aligned_distance(runs[a].fields, other));
    }
  for (const MinimizeResult& r : runs) {
    Point z = peak(r.fields.u1);
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.wells.size(); ++j)
      if (norm(z - m.wells[j].zero) < norm(z - m.wells[best].zero)) best = j;
    same_well = same_well && best == m.selected;
  }
  rep.checks.push_back(below("max_pairwise_aligned_l2", dmax, 1e-4));
  rep.checks.push_back(below("energy_spread_relative", (emax - emin) / std::abs(emin), 1e-9));
  rep.checks.push_back(Check{"same_well", same_well ? 1.0 : 0.0, 1.0, 0.0, same_well});
  return rep;
}

std::vector<std::pair<double, double>> trial_energy_curve(const Params& p, const PotentialSpec& v1,
                                                          const PotentialSpec& v2, double theta, Point x0,
                                                          const NonexistenceSettings& s) {
  require(s.tau_count >= 2, ErrorKind::InvalidArgument, "tau grid needs two points");
  const Grid2D grid(s.n, s.half_width, DerivativeMode::SpectralPeriodic, x0);
  const auto f1 = eval_potential(v1, grid);
  const auto f2 = eval_potential(v2, grid);
  DiffOperator ops(grid);
  std::vector<std::pair<double, double>> out;
  const double ratio = std::pow(s.tau_max / s.tau_min, 1.0 / static_cast<double>(s.tau_count - 1));
  for (std::size_t k = 0; k < s.tau_count; ++k) {
    const double tau = k + 1 == s.tau_count ? s.tau_max : s.tau_min * std::pow(ratio, static_cast<double>(k));
    out.emplace_back(tau, trial_energy(tau, theta, x0, p, *f1, *f2, profile(), ops));
  }
  return out;
}

namespace {

Point first_common_zero(const PotentialSpec& v1, const PotentialSpec& v2) {
  const auto z1 = zeros(v1);
  const auto z2 = zeros(v2);
  for (const LocalModel& a : z1)
    for (const LocalModel& b : z2)
      if (a.zero == b.zero) return a.zero;
  throw Error(ErrorKind::NoCommonZero, "V1 and V2 have no common zero");
}

std::size_t strict_decrease_tail(const std::vector<std::pair<double, double>>& curve) {
  std::size_t run = 1;
  for (std::size_t k = curve.size() - 1; k > 0; --k) {
    if (!(curve[k].second < curve[k - 1].second)) break;
    ++run;
  }
  return run;
}

json curve_json(const std::vector<std::pair<double, double>>& c) {
  json out = json::array();
  for (const auto& [t, e] : c) out.push_back({t, e});
  return out;
}

}  // namespace

Report run_nonexistence_probe(const ExperimentConfig& config) {
  config.validate();
  const NonexistenceSettings& s = config.nonexistence;
  const Point x0 = first_common_zero(config.v1, config.v2);
  Report rep{"nonexistence", {}, json::object(), {}};
  const double a1 = config.a1_frac * a_star();
  const double a2 = config.a2_frac * a_star();
  const double bstar = beta_star(a1, a2, a_star());
  const double g = gamma(a1, a2, a_star());

  const Params super{a1, a2, s.beta_frac_super * bstar, a_star()};
  const auto c1 = trial_energy_curve(super, config.v1, config.v2, g, x0, s);
  const Params heavy{s.a1_frac_super * a_star(), a2, 0.0, a_star()};
  const auto c2 = trial_energy_curve(heavy, config.v1, config.v2, 1.0, x0, s);
  const Params sub{a1, a2, s.beta_frac_sub * bstar, a_star()};
  const auto c3 = trial_energy_curve(sub, config.v1, config.v2, g, x0, s);

  rep.summary["x0"] = {x0.x, x0.y};
  rep.summary["beta_super"] = {{"beta", super.beta}, {"theta", g}, {"curve", curve_json(c1)}};
  rep.summary["a1_super"] = {{"a1", heavy.a1}, {"theta", 1.0}, {"curve", curve_json(c2)}};
  rep.summary["beta_sub"] = {{"beta", sub.beta}, {"theta", g}, {"curve", curve_json(c3)}};

  const auto tail1 = static_cast<double>(strict_decrease_tail(c1));
  const auto tail2 = static_cast<double>(strict_decrease_tail(c2));
  const auto tailn = static_cast<double>(s.tail);
  rep.checks.push_back(Check{"beta_super_decreasing_tail", tail1, tailn, 0.0, tail1 >= tailn});
  rep.checks.push_back(Check{"a1_super_decreasing_tail", tail2, tailn, 0.0, tail2 >= tailn});
  const auto argmin = static_cast<std::size_t>(
      std::min_element(c3.begin(), c3.end(), [](const auto& a, const auto& b) { return a.second < b.second; }) -
      c3.begin());
  const bool interior = argmin > 0 && argmin + 1 < c3.size();
  rep.checks.push_back(Check{"beta_sub_interior_minimum", static_cast<double>(argmin), 0.0, 0.0, interior});
  rep.summary["beta_sub"]["argmin_tau"] = c3[argmin].first;

  if (s.run_flow) {
    SolverOptions opts = config.solver;
    opts.max_iters = s.flow_iters;
    const Grid2D grid = config.grid.grid();
    const FieldPair init = gaussian_state(grid, x0, grid.half_width() / 4.0, g);
    const MinimizeResult r = minimize(super, config.v1, config.v2, grid, init, opts);
    rep.summary["flow"] = r;
    const bool diverged = r.status == Status::DivergenceSuspected;
    rep.checks.push_back(Check{"flow_divergence_suspected", diverged ? 1.0 : 0.0, 1.0, 0.0, diverged});
  }
  return rep;
}

// ---------------------------------------------------------------- output

void write_csv(std::ostream& out, const std::vector<ScanRow>& rows, const std::string& hash) {
  out << "beta,e,eps,mu,mu_eps2,mass_ratio,profile_err,peak_gap_over_eps,z1x,z1y,z2x,z2y,status,config_hash\n";
  char buf[512];
  for (const ScanRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,", r.beta,
                  r.e, r.eps, r.mu, r.mu_eps2, r.mass_ratio, r.profile_err, r.peak_gap_over_eps, r.z1.x, r.z1.y,
                  r.z2.x, r.z2.y);
    out << buf << r.status << ',' << hash << '\n';
  }
}

void emit_report(const std::vector<Report>& reports, const ExperimentConfig& config, const fs::path& dir) {
  require(!reports.empty(), ErrorKind::InvalidArgument, "no experiments to report");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, dir.string() + ": " + ec.message());
  const std::string hash = config.hash();

  json summary = {{"config", config}, {"config_hash", hash}, {"experiments", json::array()}};
  bool all = true;
  for (const Report& r : reports) {
    for (const auto& [stem, rows] : r.tables) {
      const fs::path path = dir / (stem + ".csv");
      std::ofstream out(path, std::ios::binary);
      require(out.good(), ErrorKind::Io, "cannot write " + path.string());
      write_csv(out, rows, hash);
      require(out.good(), ErrorKind::Io, "write failed for " + path.string());
    }
    summary["experiments"].push_back(
        {{"name", r.name}, {"summary", r.summary}, {"checks", r.checks}, {"passed", r.passed()}});
    all = all && r.passed();
  }
  summary["passed"] = all;
  const fs::path path = dir / "summary.json";
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << summary.dump(2) << '\n';
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace gpmin
