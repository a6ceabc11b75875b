#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <random>

#include "gpmin/asymptotics.hpp"
#include "gpmin/energy.hpp"
#include "gpmin/error.hpp"
#include "gpmin/townes.hpp"

using namespace gpmin;

namespace {

double a_star() { return townes::constants(townes::ground_state()).a_star; }

// Sum of a few random positive Gaussian bumps per component, jointly normalized.
FieldPair random_pair(const Grid2D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-0.4 * g.half_width(), 0.4 * g.half_width());
  std::uniform_real_distribution<double> width(0.3, 1.0);
  std::uniform_real_distribution<double> amp(0.1, 1.0);
  auto bumps = [&] {
    Field f(g);
    for (int b = 0; b < 3; ++b) {
      const Point c{pos(rng), pos(rng)};
      const double s = width(rng), a = amp(rng);
      for (std::size_t j = 0; j < g.n(); ++j)
        for (std::size_t i = 0; i < g.n(); ++i) {
          const Point d = g.node(i, j) - c;
          f.at(i, j) += a * std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * s * s));
        }
    }
    return f;
  };
  FieldPair u{bumps(), bumps()};
  const double m = std::sqrt(mass(u));
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    u.u1[k] /= m;
    u.u2[k] /= m;
  }
  return u;
}

Field gaussian(const Grid2D& g, Point c, double s = 1.0) {
  return Field::from_function(g, [&](Point p) {
    const Point d = p - c;
    return std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * s * s));
  });
}

}  // namespace

TEST_CASE("one empty component reduces to the scalar functional") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  const Field u = gaussian(g, {0.3, 0.0});
  const Field zero(g);
  const Field v = *eval_potential(harmonic(), g);
  const double a = 0.4 * a_star();
  double pot = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) pot += v[k] * u[k] * u[k];
  pot *= g.cell_area();
  const double scalar = ops.kinetic(u) + pot - 0.5 * a * integrate_power(u, 4);
  for (double beta : {0.0, 3.0, 50.0}) {
    const EnergyBreakdown e = energy({u, zero}, Params{a, 7.0, beta, a_star()}, v, v, ops);
    CHECK(e.total == doctest::Approx(scalar).epsilon(1e-12));
    CHECK(e.cross == 0.0);
  }
}

TEST_CASE("energy is strictly decreasing in beta for overlapping fields") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  const FieldPair u{gaussian(g, {0.0, 0.0}), gaussian(g, {0.5, 0.0})};
  const Field v = *eval_potential(harmonic(), g);
  const double e1 = energy(u, Params{1.0, 1.0, 2.0, a_star()}, v, v, ops).total;
  const double e2 = energy(u, Params{1.0, 1.0, 2.5, a_star()}, v, v, ops).total;
  CHECK(e2 < e1);
}

TEST_CASE("harmonic ground state has energy 2") {
  const Grid2D g(128, 8.0);
  DiffOperator ops(g);
  const Field v = *eval_potential(harmonic(), g);
  const Field ground = Field::from_function(g, [](Point p) {
    return std::exp(-(p.x * p.x + p.y * p.y) / 2.0) / std::sqrt(std::numbers::pi);
  });
  for (double t : {0.0, 0.4, 1.0}) {
    FieldPair u{ground, ground};
    for (std::size_t k = 0; k < ground.size(); ++k) {
      u.u1[k] *= std::cos(t);
      u.u2[k] *= std::sin(t);
    }
    CHECK(energy(u, Params{0.0, 0.0, 0.0, a_star()}, v, v, ops).total == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("breakdown serializes the total consistently") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  std::mt19937_64 rng(4);
  const FieldPair u = random_pair(g, rng);
  const Field v = *eval_potential(harmonic(), g);
  const EnergyBreakdown e = energy(u, Params{2.0, 3.0, 4.0, a_star()}, v, v, ops);
  CHECK(e.total == doctest::Approx(e.kinetic + e.potential_1 + e.potential_2 - e.quartic_1 - e.quartic_2 - e.cross));
}

TEST_CASE("decomposed energy equals the direct form on random pairs") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  const Field v1 = *eval_potential(harmonic(), g);
  const Field v2 = *eval_potential(harmonic({0.5, 0.0}, 2.0), g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> frac(0.05, 0.999);
  for (int k = 0; k < 100; ++k) {
    const FieldPair u = random_pair(g, rng);
    const Params p{frac(rng) * a_star(), frac(rng) * a_star(), 2.0 * frac(rng) * a_star(), a_star()};
    const double direct = energy(u, p, v1, v2, ops).total;
    const double split = energy_decomposed(u, p, v1, v2, ops);
    REQUIRE(std::abs(direct - split) <= 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("balanced limit profile cancels the balance term") {
  const auto& w = townes::ground_state();
  const double as = a_star();
  const Grid2D g(256, 12.0);
  const Params p{0.3 * as, 0.6 * as, 0.0, as};
  const double gm = gamma(p.a1, p.a2, as);
  const Field f = townes::sample_profile(w, g, {}, 1.0);
  FieldPair u{f, f};
  for (std::size_t k = 0; k < f.size(); ++k) {
    u.u1[k] *= std::sqrt(gm / as);
    u.u2[k] *= std::sqrt((1.0 - gm) / as);
  }
  CHECK(balance_term(u, p) < 1e-12);
  CHECK(balance_term({f, Field(g)}, p) > 1.0);
}

TEST_CASE("no cross penalty at the threshold") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  std::mt19937_64 rng(2);
  const FieldPair u = random_pair(g, rng);
  const Field v = *eval_potential(harmonic(), g);
  Params p{0.4 * a_star(), 0.7 * a_star(), 0.0, a_star()};
  p.beta = beta_star(p.a1, p.a2, p.a_star);
  const EnergyBreakdown e = energy(u, p, v, v, ops);
  const double expected = ops.kinetic(u.u1) + ops.kinetic(u.u2) - 0.5 * a_star() * density_square(u) + e.potential_1 +
                          e.potential_2 + balance_term(u, p);
  CHECK(energy_decomposed(u, p, v, v, ops) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(energy_decomposed(u, Params{1.1 * a_star(), 1.0, 1.0, a_star()}, v, v, ops), Error);
}

TEST_CASE("GN slack") {
  const auto& w = townes::ground_state();
  const double as = a_star();
  SUBCASE("equality case") {
    const Grid2D g(512, 15.0);
    DiffOperator ops(g);
    const Field f = townes::sample_profile(w, g, {}, 1.0);
    for (double t : {0.0, std::numbers::pi / 6.0, std::numbers::pi / 4.0}) {
      FieldPair u{f, f};
      for (std::size_t k = 0; k < f.size(); ++k) {
        u.u1[k] *= std::sin(t);
        u.u2[k] *= std::cos(t);
      }
      CHECK(std::abs(gn_slack(u, as, ops)) / density_square(u) < 1e-4);
    }
  }
  SUBCASE("separated bumps match the closed form") {
    const Grid2D g(256, 12.0);
    DiffOperator ops(g);
    const FieldPair u{gaussian(g, {-5.0, 0.0}), gaussian(g, {5.0, 0.0})};
    const double pi = std::numbers::pi;
    // Each bump: int g^2 = pi, int |grad g|^2 = pi, int g^4 = pi / 2.
    const double expected = 2.0 / as * (2.0 * pi) * (2.0 * pi) - pi;
    CHECK(gn_slack(u, as, ops) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(gn_slack(u, as, ops) > 0.0);
  }
  SUBCASE("scaling u -> s u(s x) multiplies the slack by s^2") {
    const Grid2D g(256, 12.0);
    DiffOperator ops(g);
    auto pair = [&](double s) {
      return FieldPair{Field::from_function(g, [&](Point p) { return s * std::exp(-s * s * (p.x * p.x + p.y * p.y) / 2.0); }),
                       Field::from_function(g, [&](Point p) {
                         const double x = s * p.x - 2.0, y = s * p.y;
                         return s * std::exp(-(x * x + y * y) / 2.0);
                       })};
    };
    CHECK(gn_slack(pair(2.0), as, ops) == doctest::Approx(4.0 * gn_slack(pair(1.0), as, ops)).epsilon(1e-8));
  }
  SUBCASE("random smooth pairs stay above the bound") {
    const Grid2D g(64, 5.0);
    DiffOperator ops(g);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
      const FieldPair u = random_pair(g, rng);
      REQUIRE(gn_slack(u, as, ops) >= -1e-6 * density_square(u));
    }
  }
  SUBCASE("zero field") {
    const Grid2D g(32, 1.0);
    DiffOperator ops(g);
    CHECK_THROWS_AS(gn_slack({Field(g), Field(g)}, as, ops), Error);
  }
}

TEST_CASE("swap symmetry and translation invariance") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  std::mt19937_64 rng(8);
  const FieldPair asym = random_pair(g, rng);
  // Narrow bumps keep the periodic images negligible for the shift check.
  const FieldPair u{gaussian(g, {0.3, 0.1}, 0.5), gaussian(g, {-0.2, 0.4}, 0.6)};
  const Field v = *eval_potential(harmonic({0.2, -0.1}), g);
  const Params p{3.0, 3.0, 5.0, a_star()};
  CHECK(energy(asym, p, v, v, ops).total == energy({asym.u2, asym.u1}, p, v, v, ops).total);

  const double h = g.spacing();
  const Point shift{4.0 * h, -3.0 * h};
  const FieldPair moved{ops.translate(u.u1, shift), ops.translate(u.u2, shift)};
  const Field v_moved = *eval_potential(harmonic(Point{0.2, -0.1} + shift), g);
  const double e0 = energy(u, p, v, v, ops).total;
  CHECK(std::abs(energy(moved, p, v_moved, v_moved, ops).total - e0) < 1e-12 * std::abs(e0));
}

TEST_CASE("Euler-Lagrange residual") {
  const auto& w = townes::ground_state();
  const double as = a_star();
  const Grid2D g(512, 15.0);
  DiffOperator ops(g);
  Field u = townes::sample_profile(w, g, {}, 1.0);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] /= std::sqrt(as);
  const Field zero(g);
  const FieldPair pair{u, zero};
  const Params p{as, 1.0, 1.0, as};
  const double r0 = el_residual(pair, p, zero, zero, -1.0, ops).norm;
  CHECK(r0 < 1e-3);
  for (double d : {0.1, -0.05}) {
    const double r = el_residual(pair, p, zero, zero, -1.0 + d, ops).norm;
    CHECK(r == doctest::Approx(std::abs(d)).epsilon(0.01));
  }
  CHECK_THROWS_AS(el_residual(pair, p, Field(Grid2D(512, 14.0)), zero, -1.0, ops), Error);
}

TEST_CASE("chemical potential of the linear problem equals the energy") {
  const Grid2D g(64, 5.0);
  DiffOperator ops(g);
  std::mt19937_64 rng(1);
  const FieldPair u = random_pair(g, rng);
  const Field v = *eval_potential(harmonic(), g);
  const Params p{0.0, 0.0, 0.0, a_star()};
  const double e = energy(u, p, v, v, ops).total;
  const ChemicalPotential cp = chemical_potential(u, p, v, v, e, ops);
  CHECK(cp.mu == e);
  CHECK(cp.discrepancy < 1e-10);
}

TEST_CASE("trial states") {
  const auto& w = townes::ground_state();
  const double as = a_star();
  const Grid2D g(256, 4.0);
  DiffOperator ops(g);
  const Field v = *eval_potential(harmonic(), g);
  const Params sub{0.5 * as, 0.5 * as, 0.0, as};
  const double bs = beta_star(sub.a1, sub.a2, as);
  const double gm = gamma(sub.a1, sub.a2, as);
  auto curve = [&](const Params& p, double theta) {
    std::vector<double> e;
    for (int k = 0; k <= 32; ++k) e.push_back(trial_energy(0.5 * std::exp2(k / 8.0), theta, {}, p, v, v, w, ops));
    return e;
  };
  SUBCASE("normalization and cutoff") {
    const FieldPair u = trial_state(3.0, 0.3, {}, g, w, as);
    CHECK(mass(u) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(integrate_power(u.u1, 2) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(interpolate(u.u1, {2.05, 0.0}) == 0.0);
    CHECK(trial_cutoff(1.0) == 1.0);
    CHECK(trial_cutoff(2.0) == 0.0);
    CHECK(trial_cutoff(1.5) == doctest::Approx(0.5));
  }
  SUBCASE("minimum over tau approaches the predicted energy") {
    Params p = sub;
    p.beta = 0.99 * bs;
    const auto e = curve(p, gm);
    const double best = *std::min_element(e.begin(), e.end());
    const double m2 = townes::constants(w, std::vector<double>{2.0}).moment(2.0);
    // Two-term trial model at p0 = 2 with lambda0 = M2.
    const double d = bs - p.beta;
    const double predicted = 4.0 / (2.0 * as) * std::sqrt(m2) * std::sqrt(2.0 * gm * (1.0 - gm)) * std::sqrt(d);
    CHECK(std::abs(best / predicted - 1.0) < 0.15);
  }
  SUBCASE("beyond the threshold the energy falls without bound") {
    Params p = sub;
    p.beta = 1.05 * bs;
    const auto e = curve(p, gm);
    for (std::size_t k = e.size() - 10; k < e.size(); ++k) CHECK(e[k] < e[k - 1]);
  }
  SUBCASE("critical a1 with theta = 1 drives the energy to zero") {
    const Params p{as, 0.5 * as, 0.0, as};
    const auto e = curve(p, 1.0);
    CHECK(e.back() < 0.03);
    CHECK(e.back() > 0.0);
    for (std::size_t k = e.size() - 5; k < e.size(); ++k) CHECK(e[k] < e[k - 1]);
  }
  SUBCASE("width below four cells is rejected") {
    CHECK_THROWS_AS(trial_state(9.0, 0.5, {}, g, w, as), Error);
    CHECK_THROWS_AS(trial_state(0.0, 0.5, {}, g, w, as), Error);
    CHECK_THROWS_AS(trial_state(1.0, 1.5, {}, g, w, as), Error);
  }
}
