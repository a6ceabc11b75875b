// Command-line driver for the two-component GP minimization laboratory.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpmin/asymptotics.hpp"
#include "gpmin/error.hpp"
#include "gpmin/harness.hpp"
#include "gpmin/minimizer.hpp"
#include "gpmin/townes.hpp"

using namespace gpmin;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::string output;
  std::optional<std::size_t> n;
  std::optional<double> L;
  std::string mode;
  std::optional<double> a1_frac;
  std::optional<double> a2_frac;
  std::optional<double> beta_frac;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::size_t> starts;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", o.output, "output directory");
  cmd->add_option("--n", o.n, "grid points per axis");
  cmd->add_option("--L", o.L, "box half-width");
  cmd->add_option("--mode", o.mode, "derivative backend: spectral | fd");
  cmd->add_option("--a1-frac", o.a1_frac, "a1 / a*");
  cmd->add_option("--a2-frac", o.a2_frac, "a2 / a*");
  cmd->add_option("--beta-frac", o.beta_frac, "beta / beta* for single-beta runs");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--tol", o.tol, "EL residual tolerance");
  cmd->add_option("--starts", o.starts, "number of uniqueness starts");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.output.empty()) c.output_dir = o.output;
  if (o.n) c.grid.n = *o.n;
  if (o.L) c.grid.half_width = *o.L;
  if (!o.mode.empty()) c.grid.mode = parse_mode(o.mode);
  if (o.a1_frac) c.a1_frac = *o.a1_frac;
  if (o.a2_frac) c.a2_frac = *o.a2_frac;
  if (o.beta_frac) c.beta_frac = *o.beta_frac;
  if (o.seed) c.solver.seed = *o.seed;
  if (o.tol) c.solver.tol = *o.tol;
  if (o.starts) c.n_starts = *o.starts;
  c.validate();
  return c;
}

int finish(const Report& r, const ExperimentConfig& c) {
  emit_report({r}, c, c.output_dir);
  for (const Check& k : r.checks)
    std::printf("%-4s %-44s value=%.6g target=%.6g tol=%.3g\n", k.pass ? "PASS" : "FAIL", k.name.c_str(), k.value,
                k.target, k.tolerance);
  std::printf("report written to %s\n", c.output_dir.c_str());
  return r.passed() ? 0 : 1;
}

int cmd_townes(double h_r, double r_max, const std::string& csv) {
  const townes::RadialProfile w = townes::find_ground_state(1e-13, r_max, h_r);
  const double ps[] = {1.0, 2.0, 4.0};
  const townes::TownesConstants tc = townes::constants(w, ps);
  json j = {{"w0", w.w0},
            {"a_star", tc.a_star},
            {"grad_sq", tc.grad_sq},
            {"quartic", tc.quartic},
            {"grad_sq_over_a_star_minus_1", tc.grad_sq / tc.a_star - 1.0},
            {"quartic_over_2a_star_minus_1", tc.quartic / (2.0 * tc.a_star) - 1.0},
            {"stitch_radius", w.stitch_radius},
            {"moments", {{"1", tc.moment(1.0)}, {"2", tc.moment(2.0)}, {"4", tc.moment(4.0)}}}};
  std::cout << j.dump(2) << '\n';
  if (!csv.empty()) {
    std::ofstream out(csv);
    require(out.good(), ErrorKind::Io, "cannot write " + csv);
    out << "r,w\n";
    char buf[64];
    for (std::size_t k = 0; k < w.r.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", w.r[k], w.w[k]);
      out << buf;
    }
  }
  return 0;
}

int cmd_predict(const ExperimentConfig& c) {
  const auto& w = townes::ground_state();
  const double a_star = townes::constants(w).a_star;
  const HQuadrature quad(w);
  const AsymptoticModel m = classify(c.v1, c.v2, quad, c.a1_frac * a_star, c.a2_frac * a_star, a_star);
  json rows = json::array();
  for (double f : c.beta_schedule) {
    const double beta = f * m.beta_star;
    rows.push_back({{"beta_frac", f},
                    {"beta", beta},
                    {"eps_bar", eps_bar(beta, m)},
                    {"predicted_energy", predicted_energy(beta, m)}});
  }
  json j = {{"model", m},
            {"mass_ratio_limit", mass_ratio_limit(m.a1, m.a2, m.a_star)},
            {"predicted_energy_coefficient", predicted_energy_coefficient(m)},
            {"predicted_mu_eps2", predicted_mu_eps2()},
            {"schedule", rows}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_minimize(const ExperimentConfig& c, const std::string& dump) {
  const auto& w = townes::ground_state();
  const double a_star = townes::constants(w).a_star;
  const HQuadrature quad(w);
  const AsymptoticModel m = classify(c.v1, c.v2, quad, c.a1_frac * a_star, c.a2_frac * a_star, a_star);
  const Params p{m.a1, m.a2, c.beta_frac * m.beta_star, a_star};
  const Grid2D grid = c.grid.grid();
  const FieldPair init = gaussian_state(grid, m.selected_well().zero, grid.half_width() / 4.0, m.gamma);
  const MinimizeResult r = minimize_adaptive(p, c.v1, c.v2, grid, init, c.solver);
  json j = r;
  j["beta"] = p.beta;
  if (r.status == Status::Converged) {
    DiffOperator ops(r.fields.grid());
    const Observables o = observables(r.fields, ops, w, m.gamma, a_star);
    j["observables"] = {{"eps", o.eps},
                        {"z1", {o.z1.x, o.z1.y}},
                        {"z2", {o.z2.x, o.z2.y}},
                        {"mass_ratio", o.mass_ratio},
                        {"profile_err", o.profile_err},
                        {"peak_gap_over_eps", o.peak_gap_over_eps}};
  }
  std::cout << j.dump(2) << '\n';
  if (!dump.empty()) {
    for (int k = 1; k <= 2; ++k) {
      const std::string path = dump + "_u" + std::to_string(k) + ".bin";
      std::ofstream out(path, std::ios::binary);
      require(out.good(), ErrorKind::Io, "cannot write " + path);
      write_field(out, k == 1 ? r.fields.u1 : r.fields.u2);
    }
  }
  return r.status == Status::Converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-component attractive Gross-Pitaevskii minimizers and their blow-up asymptotics"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log every solve to stderr");

  double h_r = 1e-3, r_max = 30.0;
  std::string csv;
  auto* townes_cmd = app.add_subcommand("townes", "Townes ground state, critical mass and moments");
  townes_cmd->add_option("--h-r", h_r, "radial step");
  townes_cmd->add_option("--r-max", r_max, "truncation radius");
  townes_cmd->add_option("--csv", csv, "write the profile as r,w");

  Overrides o;
  std::string dump;
  auto* predict = app.add_subcommand("predict", "closed-form asymptotic model for a config");
  auto* minimize_cmd = app.add_subcommand("minimize", "single minimizer at beta-frac");
  minimize_cmd->add_option("--dump", dump, "field dump prefix");
  auto* threshold = app.add_subcommand("scan-threshold", "energy along the beta continuation");
  auto* blowup = app.add_subcommand("scan-blowup", "blow-up rate, peaks and limit shape");
  auto* symmetry = app.add_subcommand("symmetry", "biased runs in a symmetric double well");
  auto* uniqueness = app.add_subcommand("uniqueness", "multi-start probe at beta-frac");
  auto* nonexistence = app.add_subcommand("nonexistence", "trial-state energies beyond the thresholds");
  for (auto* cmd : {predict, minimize_cmd, threshold, blowup, symmetry, uniqueness, nonexistence}) add_common(cmd, o);

  CLI11_PARSE(app, argc, argv);
  if (verbose) set_progress_log(&std::cerr);

  try {
    if (*townes_cmd) return cmd_townes(h_r, r_max, csv);
    const ExperimentConfig c = resolve(o);
    if (*predict) return cmd_predict(c);
    if (*minimize_cmd) return cmd_minimize(c, dump);
    if (*threshold) return finish(run_threshold_scan(c), c);
    if (*blowup) return finish(run_blowup_scan(c), c);
    if (*symmetry) return finish(run_symmetry_breaking(c), c);
    if (*uniqueness) return finish(run_uniqueness_probe(c, c.n_starts), c);
    if (*nonexistence) return finish(run_nonexistence_probe(c), c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
