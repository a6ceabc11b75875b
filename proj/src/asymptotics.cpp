#include "gpmin/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpmin/error.hpp"

namespace gpmin {

double beta_star(double a1, double a2, double a_star) {
  require(a1 > 0.0 && a2 > 0.0 && a1 <= a_star && a2 <= a_star, ErrorKind::OutOfRange,
          "beta* needs 0 < a1, a2 <= a*");
  return a_star + std::sqrt((a_star - a1) * (a_star - a2));
}

double gamma(double a1, double a2, double a_star) {
  require(a1 > 0.0 && a2 > 0.0 && a1 < a_star && a2 < a_star, ErrorKind::OutOfRange, "gamma needs 0 < a1, a2 < a*");
  const double s1 = std::sqrt(a_star - a1);
  const double s2 = std::sqrt(a_star - a2);
  return s2 / (s1 + s2);
}

double mass_ratio_limit(double a1, double a2, double a_star) {
  require(a1 > 0.0 && a2 > 0.0 && a1 < a_star && a2 < a_star, ErrorKind::OutOfRange,
          "mass ratio limit needs 0 < a1, a2 < a*");
  const double direct = (a_star - a2) / (a_star - a1);
  const double g = gamma(a1, a2, a_star);
  const double via_gamma = (g / (1.0 - g)) * (g / (1.0 - g));
  require(std::abs(direct - via_gamma) <= 1e-12 * direct, ErrorKind::NonFinite,
          "mass ratio forms disagree");
  return direct;
}

HQuadrature::HQuadrature(const townes::RadialProfile& w, std::size_t n, double half_width)
    : grid_(n, half_width), w2_(townes::sample_profile(w, grid_, {}, 1.0)) {
  for (std::size_t k = 0; k < w2_.size(); ++k) w2_[k] *= w2_[k];
}

double h_function(const LocalModel& v1, const LocalModel& v2, double g, Point y, const HQuadrature& quad) {
  require(v1.zero == v2.zero, ErrorKind::NotCommonZero, "H needs local models at the same zero");
  if (v1.exponent < v2.exponent) return g * quad.integrate([&](Point x) { return v1(x + y); });
  if (v1.exponent > v2.exponent) return (1.0 - g) * quad.integrate([&](Point x) { return v2(x + y); });
  return quad.integrate([&](Point x) { return g * v1(x + y) + (1.0 - g) * v2(x + y); });
}

namespace {

const LocalModel* find_zero(const std::vector<LocalModel>& zs, Point p) {
  for (const LocalModel& m : zs)
    if (m.zero == p) return &m;
  return nullptr;
}

}  // namespace

double h_function(const PotentialSpec& v1, const PotentialSpec& v2, Point zero, double g, Point y,
                  const HQuadrature& quad) {
  const auto z1 = zeros(v1);
  const auto z2 = zeros(v2);
  const LocalModel* m1 = find_zero(z1, zero);
  const LocalModel* m2 = find_zero(z2, zero);
  require(m1 != nullptr && m2 != nullptr, ErrorKind::NotCommonZero, "point is not a common zero of V1 and V2");
  return h_function(*m1, *m2, g, y, quad);
}

namespace {

constexpr double kSearchRadius = 5.0;
constexpr double kFdStep = 1e-3;

struct Local {
  Point y;
  double value;
};

std::array<double, 2> gradient(const auto& h, Point y) {
  return {(h({y.x + kFdStep, y.y}) - h({y.x - kFdStep, y.y})) / (2.0 * kFdStep),
          (h({y.x, y.y + kFdStep}) - h({y.x, y.y - kFdStep})) / (2.0 * kFdStep)};
}

std::array<double, 4> hessian(const auto& h, Point y) {
  const double s = kFdStep;
  const double c = h(y);
  const double xx = (h({y.x + s, y.y}) - 2.0 * c + h({y.x - s, y.y})) / (s * s);
  const double yy = (h({y.x, y.y + s}) - 2.0 * c + h({y.x, y.y - s})) / (s * s);
  const double xy =
      (h({y.x + s, y.y + s}) - h({y.x + s, y.y - s}) - h({y.x - s, y.y + s}) + h({y.x - s, y.y - s})) / (4.0 * s * s);
  return {xx, xy, xy, yy};
}

std::array<double, 2> eigenvalues(const std::array<double, 4>& m) {
  const double tr = m[0] + m[3];
  const double det = m[0] * m[3] - m[1] * m[2];
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  return {0.5 * tr - disc, 0.5 * tr + disc};
}

Point clamp_box(Point y) {
  const double r = norm(y);
  return r > kSearchRadius ? (kSearchRadius / r) * y : y;
}

Local descend(const auto& h, Point y) {
  double value = h(y);
  for (int it = 0; it < 200; ++it) {
    const auto g = gradient(h, y);
    const double gn = std::hypot(g[0], g[1]);
    if (gn < 1e-9 * std::max(1.0, std::abs(value))) break;
    // Newton direction when the Hessian is positive definite, steepest descent otherwise.
    const auto H = hessian(h, y);
    const auto ev = eigenvalues(H);
    Point dir{-g[0], -g[1]};
    if (ev[0] > 0.0) {
      const double det = H[0] * H[3] - H[1] * H[2];
      dir = {-(H[3] * g[0] - H[1] * g[1]) / det, -(-H[2] * g[0] + H[0] * g[1]) / det};
    }
    const double slope = g[0] * dir.x + g[1] * dir.y;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 50; ++k, t *= 0.5) {
      const Point trial = clamp_box(y + t * dir);
      const double v = h(trial);
      if (v <= value + 1e-4 * t * slope) {
        moved = v < value;
        y = trial;
        value = v;
        break;
      }
    }
    if (!moved) break;
  }
  return {y, value};
}

}  // namespace

HMinimum minimize_h(const LocalModel& v1, const LocalModel& v2, double g, const HQuadrature& quad) {
  auto h = [&](Point y) { return h_function(v1, v2, g, y, quad); };
  std::vector<Local> found;
  for (double sy : {-2.5, 0.0, 2.5})
    for (double sx : {-2.5, 0.0, 2.5}) found.push_back(descend(h, {sx, sy}));

  const auto best = std::min_element(found.begin(), found.end(),
                                     [](const Local& a, const Local& b) { return a.value < b.value; });
  HMinimum out;
  out.y = best->y;
  out.lambda = best->value;
  out.hessian = hessian(h, out.y);
  out.eigenvalues = eigenvalues(out.hessian);
  for (const Local& l : found)
    if (std::abs(l.value - out.lambda) <= 1e-8 * std::abs(out.lambda) && norm(l.y - out.y) > 1e-2)
      out.multiple_minima_suspected = true;
  return out;
}

AsymptoticModel classify(const PotentialSpec& v1, const PotentialSpec& v2, const HQuadrature& quad, double a1,
                         double a2, double a_star) {
  AsymptoticModel m;
  m.a_star = a_star;
  m.a1 = a1;
  m.a2 = a2;
  m.beta_star = beta_star(a1, a2, a_star);
  m.gamma = gamma(a1, a2, a_star);

  const auto z1 = zeros(v1);
  const auto z2 = zeros(v2);
  for (const LocalModel& l1 : z1) {
    const LocalModel* l2 = find_zero(z2, l1.zero);
    if (l2 == nullptr) continue;
    WellModel w;
    w.zero = l1.zero;
    w.p1 = l1.exponent;
    w.p2 = l2->exponent;
    w.p = std::min(w.p1, w.p2);
    w.coeff1 = l1.coefficient;
    w.coeff2 = l2->coefficient;
    w.h = minimize_h(l1, *l2, m.gamma, quad);
    m.wells.push_back(w);
  }
  require(!m.wells.empty(), ErrorKind::NoCommonZero, "V1 and V2 have no common zero");

  for (const WellModel& w : m.wells) m.p0 = std::max(m.p0, w.p);
  m.lambda0 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m.wells.size(); ++j)
    if (m.wells[j].p == m.p0) {
      m.gamma_set.push_back(j);
      m.lambda0 = std::min(m.lambda0, m.wells[j].h.lambda);
    }
  for (std::size_t j : m.gamma_set)
    if (m.wells[j].h.lambda <= m.lambda0 * (1.0 + 1e-9)) m.z0.push_back(j);
  m.selected = m.z0.front();
  m.y0 = m.wells[m.selected].h.y;
  m.hessian_h = m.wells[m.selected].h.hessian;
  return m;
}

namespace {

double gap(double beta, const AsymptoticModel& m) {
  require(beta > 0.0 && beta < m.beta_star, ErrorKind::OutOfRange, "prediction needs 0 < beta < beta*");
  return m.beta_star - beta;
}

}  // namespace

double eps_bar(double beta, const AsymptoticModel& m) {
  const double d = gap(beta, m);
  return std::pow(4.0 * m.gamma * (1.0 - m.gamma) * d / (m.p0 * m.lambda0), 1.0 / (m.p0 + 2.0));
}

double predicted_energy_coefficient(const AsymptoticModel& m) {
  const double p = m.p0;
  return (p + 2.0) / (p * m.a_star) * std::pow(p * m.lambda0 / 2.0, 2.0 / (p + 2.0)) *
         std::pow(2.0 * m.gamma * (1.0 - m.gamma), p / (p + 2.0));
}

double predicted_energy(double beta, const AsymptoticModel& m) {
  const double d = gap(beta, m);
  return predicted_energy_coefficient(m) * std::pow(d, m.p0 / (m.p0 + 2.0));
}

double energy_model(double eps, double beta, const AsymptoticModel& m) {
  const double d = gap(beta, m);
  return 2.0 * m.gamma * (1.0 - m.gamma) / m.a_star * d / (eps * eps) + m.lambda0 / m.a_star * std::pow(eps, m.p0);
}

Point predicted_peak(double beta, const AsymptoticModel& m) {
  return m.selected_well().zero + eps_bar(beta, m) * m.y0;
}

void to_json(nlohmann::json& j, const AsymptoticModel& m) {
  nlohmann::json wells = nlohmann::json::array();
  for (const WellModel& w : m.wells) {
    wells.push_back({{"zero", {w.zero.x, w.zero.y}},
                     {"p1", w.p1},
                     {"p2", w.p2},
                     {"p", w.p},
                     {"coeff1", w.coeff1},
                     {"coeff2", w.coeff2},
                     {"lambda", w.h.lambda},
                     {"y", {w.h.y.x, w.h.y.y}},
                     {"hessian", w.h.hessian},
                     {"hessian_eigenvalues", w.h.eigenvalues},
                     {"multiple_minima_suspected", w.h.multiple_minima_suspected}});
  }
  j = {{"a_star", m.a_star},
       {"a1", m.a1},
       {"a2", m.a2},
       {"beta_star", m.beta_star},
       {"gamma", m.gamma},
       {"wells", wells},
       {"p0", m.p0},
       {"gamma_set", m.gamma_set},
       {"lambda0", m.lambda0},
       {"z0", m.z0},
       {"selected", m.selected},
       {"y0", {m.y0.x, m.y0.y}},
       {"hessian_h", m.hessian_h}};
}

}  // namespace gpmin
