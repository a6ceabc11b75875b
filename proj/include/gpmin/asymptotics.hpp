#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <json.hpp>

#include "gpmin/grid.hpp"
#include "gpmin/potential.hpp"
#include "gpmin/townes.hpp"

namespace gpmin {

/// a* + sqrt((a* - a1)(a* - a2)). Needs 0 < a_i <= a*.
double beta_star(double a1, double a2, double a_star);

/// sqrt(a* - a2) / (sqrt(a* - a1) + sqrt(a* - a2)). Needs 0 < a_i < a*.
double gamma(double a1, double a2, double a_star);

/// (a* - a2) / (a* - a1), the limit of int u1^4 / int u2^4.
double mass_ratio_limit(double a1, double a2, double a_star);

/// w^2 tabulated on a square grid in profile units, shared by every H evaluation.
class HQuadrature {
 public:
  explicit HQuadrature(const townes::RadialProfile& w, std::size_t n = 256, double half_width = 16.0);

  /// Integral of f(x) w(x)^2 dx.
  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t j = 0; j < grid_.n(); ++j)
      for (std::size_t i = 0; i < grid_.n(); ++i) {
        const double w2 = w2_.at(i, j);
        if (w2 != 0.0) s += f(grid_.node(i, j)) * w2;
      }
    return s * grid_.cell_area();
  }

  const Grid2D& grid() const noexcept { return grid_; }

 private:
  Grid2D grid_;
  Field w2_;
};

/// H_j(y) for the local models v1, v2 of V1, V2 at a common zero.
/// When the exponents differ only the component with the smaller one contributes.
/// Throws NotCommonZero if the models sit at different points.
double h_function(const LocalModel& v1, const LocalModel& v2, double gamma, Point y, const HQuadrature& quad);

/// Same, looking the local models up from the specs at `zero`.
double h_function(const PotentialSpec& v1, const PotentialSpec& v2, Point zero, double gamma, Point y,
                  const HQuadrature& quad);

struct HMinimum {
  Point y;
  double lambda = 0.0;
  std::array<double, 4> hessian{};      // row-major 2x2
  std::array<double, 2> eigenvalues{};  // ascending
  bool multiple_minima_suspected = false;
};

/// Multi-start Newton/gradient descent on H over a box of radius 5.
HMinimum minimize_h(const LocalModel& v1, const LocalModel& v2, double gamma, const HQuadrature& quad);

struct WellModel {
  Point zero;
  double p1 = 0.0;
  double p2 = 0.0;
  double p = 0.0;
  double coeff1 = 0.0;
  double coeff2 = 0.0;
  HMinimum h;
};

struct AsymptoticModel {
  double a_star = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double beta_star = 0.0;
  double gamma = 0.0;
  std::vector<WellModel> wells;       // common zeros, lexicographic order
  double p0 = 0.0;
  std::vector<std::size_t> gamma_set;  // wells with p_j = p0
  double lambda0 = 0.0;
  std::vector<std::size_t> z0;         // flattest wells
  std::size_t selected = 0;            // first entry of z0
  Point y0;
  std::array<double, 4> hessian_h{};

  const WellModel& selected_well() const { return wells.at(selected); }
};

/// Full asymptotic model. Throws NoCommonZero if V1 and V2 share no zero.
AsymptoticModel classify(const PotentialSpec& v1, const PotentialSpec& v2, const HQuadrature& quad, double a1,
                         double a2, double a_star);

/// [4 gamma (1 - gamma)(beta* - beta) / (p0 lambda0)]^{1/(p0 + 2)}.
double eps_bar(double beta, const AsymptoticModel& model);

/// Leading-order e(beta) as beta approaches beta*.
double predicted_energy(double beta, const AsymptoticModel& model);

/// Coefficient C of predicted_energy = C (beta* - beta)^{p0/(p0+2)}.
double predicted_energy_coefficient(const AsymptoticModel& model);

/// Two-term model (2 g(1-g)/a*) d eps^-2 + (lambda0/a*) eps^p0 with d = beta* - beta.
double energy_model(double eps, double beta, const AsymptoticModel& model);

/// Predicted concentration point x_j0 + eps_bar y0.
Point predicted_peak(double beta, const AsymptoticModel& model);

constexpr double predicted_mu_eps2() { return -1.0; }

void to_json(nlohmann::json& j, const AsymptoticModel& m);

}  // namespace gpmin
