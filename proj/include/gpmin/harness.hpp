#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmin/asymptotics.hpp"
#include "gpmin/minimizer.hpp"

namespace gpmin {

struct GridSettings {
  std::size_t n = 512;
  double half_width = 10.0;
  DerivativeMode mode = DerivativeMode::SpectralPeriodic;
  Point center;

  Grid2D grid() const { return Grid2D(n, half_width, mode, center); }
};

struct NonexistenceSettings {
  double beta_frac_super = 1.05;  // beta / beta*
  double a1_frac_super = 1.1;     // a1 / a*, run with theta = 1
  double beta_frac_sub = 0.5;
  double tau_min = 0.25;
  double tau_max = 8.0;
  std::size_t tau_count = 40;
  std::size_t n = 256;
  double half_width = 4.0;
  std::size_t tail = 10;          // points that must decrease strictly
  bool run_flow = false;          // also run the gradient flow at beta_frac_super
  std::size_t flow_iters = 2000;
};

struct ExperimentConfig {
  double a1_frac = 0.5;
  double a2_frac = 0.5;
  std::vector<double> beta_schedule{0.90, 0.94, 0.96, 0.975, 0.985, 0.99, 0.994, 0.997};
  PotentialSpec v1 = harmonic();
  PotentialSpec v2 = harmonic();
  GridSettings grid;
  SolverOptions solver;
  std::string output_dir = "out";
  std::size_t fit_window = 5;
  std::size_t n_starts = 5;
  double beta_frac = 0.995;       // single-beta runs (minimize, uniqueness)
  NonexistenceSettings nonexistence;

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
  std::string hash() const;  // FNV-1a of the canonical JSON form, 16 hex digits
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

struct FitResult {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  std::vector<std::size_t> window;
};

/// Least-squares line through (log x, log y) over the last `window` points.
FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y, std::size_t window);

void to_json(nlohmann::json& j, const FitResult& f);

struct ScanRow {
  double beta = 0.0;
  double e = 0.0;
  double eps = 0.0;
  double mu = 0.0;
  double mu_eps2 = 0.0;
  double mass_ratio = 0.0;
  double profile_err = 0.0;
  double peak_gap_over_eps = 0.0;
  Point z1;
  Point z2;
  std::string status;
};

struct Branch {
  Point start;  // common zero the initial state was centered on
  std::vector<ContinuationStep> steps;
  std::vector<ScanRow> rows;
};

struct ScanData {
  ExperimentConfig config;
  AsymptoticModel model;
  std::vector<Branch> branches;  // one per common zero
  std::size_t selected = 0;      // branch with the lowest energy at the finest beta
};

/// Continuation from a Gaussian at every common zero. Branches run concurrently.
ScanData run_scan(const ExperimentConfig& config);

struct Check {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

void to_json(nlohmann::json& j, const Check& c);

struct Report {
  std::string name;
  std::vector<std::pair<std::string, std::vector<ScanRow>>> tables;  // file stem -> rows
  nlohmann::json summary;
  std::vector<Check> checks;

  bool passed() const;
};

Report threshold_report(const ScanData& scan);
Report blowup_report(const ScanData& scan);

Report run_threshold_scan(const ExperimentConfig& config);
Report run_blowup_scan(const ExperimentConfig& config);
/// Needs exactly two common zeros related by the reflection across their bisector.
Report run_symmetry_breaking(const ExperimentConfig& config);
Report run_uniqueness_probe(const ExperimentConfig& config, std::size_t n_starts);
Report run_nonexistence_probe(const ExperimentConfig& config);

/// Reflection of a pair across the perpendicular bisector of a and b, sampled on `grid`.
FieldPair reflect(const FieldPair& u, Point a, Point b, const Grid2D& grid);

/// Trial energies on a geometric tau grid.
std::vector<std::pair<double, double>> trial_energy_curve(const Params& p, const PotentialSpec& v1,
                                                          const PotentialSpec& v2, double theta, Point x0,
                                                          const NonexistenceSettings& s);

/// Writes one CSV per table and summary.json into `dir`.
/// Throws InvalidArgument on an empty report list and Io on filesystem errors.
void emit_report(const std::vector<Report>& reports, const ExperimentConfig& config, const std::filesystem::path& dir);

void write_csv(std::ostream& out, const std::vector<ScanRow>& rows, const std::string& config_hash);

}  // namespace gpmin
