#include "gpmin/townes.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "gpmin/error.hpp"

namespace gpmin::townes {

namespace {

constexpr double kResolvedLevel = 1e-10;
constexpr double kStitchLevel = 1e-6;

struct State {
  double w;
  double dw;
};

State rhs(double r, State s) { return {s.dw, -s.dw / r + s.w - s.w * s.w * s.w}; }

State rk4(double r, State s, double h) {
  const State k1 = rhs(r, s);
  const State k2 = rhs(r + 0.5 * h, {s.w + 0.5 * h * k1.w, s.dw + 0.5 * h * k1.dw});
  const State k3 = rhs(r + 0.5 * h, {s.w + 0.5 * h * k2.w, s.dw + 0.5 * h * k2.dw});
  const State k4 = rhs(r + h, {s.w + h * k3.w, s.dw + h * k3.dw});
  return {s.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
          s.dw + h / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw)};
}

enum class Event { CrossedZero, TurnedUp, Resolved };

struct Trajectory {
  Event event;
  double r_event;
  std::vector<double> w;   // recorded values up to the event node (exclusive of it)
  std::vector<double> dw;
};

std::size_t node_count(double r_max, double h_r) {
  return static_cast<std::size_t>(std::llround(r_max / h_r));
}

Trajectory integrate(double alpha, double r_max, double h_r, bool record) {
  require(alpha > 0.0, ErrorKind::InvalidArgument, "central value must be positive");
  require(h_r > 0.0, ErrorKind::InvalidArgument, "radial step must be positive");
  require(r_max >= 20.0, ErrorKind::InvalidArgument, "r_max must be at least 20");
  const std::size_t steps = node_count(r_max, h_r);

  Trajectory t{Event::TurnedUp, r_max, {}, {}};
  if (record) {
    t.w.reserve(steps + 1);
    t.dw.reserve(steps + 1);
    t.w.push_back(alpha);
    t.dw.push_back(0.0);
  }

  // Series start removes the 1/r singularity: w = alpha + c2 r^2 + c4 r^4.
  const double c2 = (alpha - alpha * alpha * alpha) / 4.0;
  const double c4 = (1.0 - 3.0 * alpha * alpha) * c2 / 16.0;
  State s{alpha + c2 * h_r * h_r + c4 * std::pow(h_r, 4), 2.0 * c2 * h_r + 4.0 * c4 * std::pow(h_r, 3)};

  for (std::size_t i = 1; i <= steps; ++i) {
    const double r = static_cast<double>(i) * h_r;
    if (!std::isfinite(s.w) || !std::isfinite(s.dw))
      throw Error(ErrorKind::NonFinite, "radial trajectory overflowed at r = " + std::to_string(r));
    if (s.w < 0.0) {
      t.event = Event::CrossedZero;
      t.r_event = r;
      return t;
    }
    if (s.w < kResolvedLevel && std::abs(s.dw) < kResolvedLevel) {
      t.event = Event::Resolved;
      t.r_event = r;
      return t;
    }
    if (s.dw > 0.0) {
      t.event = Event::TurnedUp;
      t.r_event = r;
      return t;
    }
    if (record) {
      t.w.push_back(s.w);
      t.dw.push_back(s.dw);
    }
    if (i < steps) s = rk4(r, s, h_r);
  }
  // Reached r_max without an event: decayed profile counts as resolved,
  // anything else (e.g. the constant solution w = 1) did not decay.
  t.event = s.w < 1e-8 ? Event::Resolved : Event::TurnedUp;
  t.r_event = r_max;
  return t;
}

std::vector<double> monotone_slopes(const std::vector<double>& w, double h) {
  const std::size_t n = w.size();
  std::vector<double> m(n, 0.0);
  if (n < 2) return m;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d0 = (w[i] - w[i - 1]) / h;
    const double d1 = (w[i + 1] - w[i]) / h;
    m[i] = (d0 * d1 <= 0.0) ? 0.0 : 2.0 * d0 * d1 / (d0 + d1);
  }
  m[0] = 0.0;  // w'(0) = 0 by symmetry
  m[n - 1] = (w[n - 1] - w[n - 2]) / h;
  return m;
}

RadialProfile build_profile(double alpha, const Trajectory& t, double r_max, double h_r) {
  const std::size_t nodes = node_count(r_max, h_r) + 1;
  RadialProfile p;
  p.w0 = alpha;
  p.r_max = static_cast<double>(nodes - 1) * h_r;
  p.h_r = h_r;
  p.r.resize(nodes);
  p.w.resize(nodes);
  p.dw.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) p.r[i] = static_cast<double>(i) * h_r;

  std::size_t stitch = t.w.size();
  for (std::size_t i = 1; i < t.w.size(); ++i)
    if (t.w[i] < kStitchLevel) {
      stitch = i;
      break;
    }
  require(stitch >= 2 && stitch < nodes, ErrorKind::NoBracket,
          "profile never decays below the stitching level; increase r_max");

  for (std::size_t i = 0; i < stitch; ++i) {
    p.w[i] = t.w[i];
    p.dw[i] = t.dw[i];
  }
  const double rs = p.r[stitch];
  p.stitch_radius = rs;
  p.tail_coeff = t.w[stitch] * std::sqrt(rs) * std::exp(rs);
  for (std::size_t i = stitch; i < nodes; ++i) {
    const double r = p.r[i];
    const double v = p.tail_coeff * std::exp(-r) / std::sqrt(r);
    p.w[i] = v;
    p.dw[i] = -v * (1.0 + 0.5 / r);
  }
  p.slopes = monotone_slopes(p.w, h_r);
  return p;
}

ShotOutcome to_outcome(double alpha, const Trajectory& t, double r_max, double h_r) {
  switch (t.event) {
    case Event::CrossedZero: return CrossedZero{t.r_event};
    case Event::TurnedUp: return TurnedUp{t.r_event};
    case Event::Resolved: break;
  }
  // Resolved before any event: keep the integrated part, stitch the tail.
  Trajectory full = t;
  return Resolved{build_profile(alpha, full, r_max, h_r)};
}

}  // namespace

double RadialProfile::operator()(double radius) const {
  radius = std::abs(radius);
  if (radius >= r_max) return 0.0;
  const double s = radius / h_r;
  const auto i = std::min(static_cast<std::size_t>(s), w.size() - 2);
  const double t = s - static_cast<double>(i);
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * w[i] + h10 * h_r * slopes[i] + h01 * w[i + 1] + h11 * h_r * slopes[i + 1];
}

ShotOutcome shoot(double alpha, double r_max, double h_r) {
  const Trajectory t = integrate(alpha, r_max, h_r, true);
  return to_outcome(alpha, t, r_max, h_r);
}

RadialProfile find_ground_state(double tol, double r_max, double h_r) {
  require(tol > 0.0 && tol <= 1e-12, ErrorKind::InvalidArgument, "bisection tolerance must be in (0, 1e-12]");

  // Coarse scan for a TurnedUp -> CrossedZero bracket.
  std::optional<double> lo;
  std::optional<double> hi;
  double previous = 0.0;
  bool previous_up = false;
  for (double alpha = 0.25; alpha <= 10.0 + 1e-12; alpha += 0.25) {
    const Event e = integrate(alpha, r_max, h_r, false).event;
    const bool up = e != Event::CrossedZero;
    if (previous_up && !up) {
      lo = previous;
      hi = alpha;
      break;
    }
    previous = alpha;
    previous_up = up;
  }
  if (!lo) throw Error(ErrorKind::NoBracket, "no TurnedUp/CrossedZero bracket found; r_max too small?");

  double a = *lo;
  double b = *hi;
  while (b - a > tol * a) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const Trajectory t = integrate(mid, r_max, h_r, false);
    if (t.event == Event::CrossedZero)
      b = mid;
    else
      a = mid;
  }
  // The lower endpoint stays positive; its tail is replaced by the asymptotic form.
  Trajectory t = integrate(a, r_max, h_r, true);
  return build_profile(a, t, r_max, h_r);
}

double TownesConstants::moment(double p) const {
  const auto it = moments.find(p);
  if (it == moments.end()) throw Error(ErrorKind::OutOfRange, "moment not computed for p = " + std::to_string(p));
  return it->second;
}

namespace {

// Composite Simpson on a uniform mesh (trapezoid on a trailing odd interval).
template <class F>
double simpson(std::size_t nodes, double h, F&& f) {
  const std::size_t intervals = nodes - 1;
  const std::size_t even = intervals - intervals % 2;
  double s = f(0) + f(even);
  for (std::size_t i = 1; i < even; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i);
  s *= h / 3.0;
  if (even < intervals) s += 0.5 * h * (f(even) + f(intervals));
  return s;
}

}  // namespace

TownesConstants constants(const RadialProfile& p, std::span<const double> moment_exponents) {
  require(p.w.size() >= 3, ErrorKind::InvalidArgument, "profile is empty");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const std::size_t nodes = p.w.size();
  const double h = p.h_r;
  const double c2 = p.tail_coeff * p.tail_coeff;
  const double tail_mass = std::numbers::pi * c2 * std::exp(-2.0 * p.r_max);  // int_{r_max}^inf of w^2

  TownesConstants out;
  out.a_star = two_pi * simpson(nodes, h, [&](std::size_t i) { return p.w[i] * p.w[i] * p.r[i]; }) + tail_mass;
  out.grad_sq = two_pi * simpson(nodes, h, [&](std::size_t i) { return p.dw[i] * p.dw[i] * p.r[i]; }) + tail_mass;
  out.quartic = two_pi * simpson(nodes, h, [&](std::size_t i) {
                  const double w2 = p.w[i] * p.w[i];
                  return w2 * w2 * p.r[i];
                });
  for (double e : moment_exponents) {
    if (e == 0.0) {
      out.moments[e] = out.a_star;
      continue;
    }
    const double m = two_pi * simpson(nodes, h, [&](std::size_t i) {
                       return std::pow(p.r[i], e) * p.w[i] * p.w[i] * p.r[i];
                     });
    out.moments[e] = m + std::pow(p.r_max, e) * tail_mass;
  }
  return out;
}

Field sample_profile(const RadialProfile& profile, const Grid2D& grid, Point center, double scale) {
  require(scale > 0.0, ErrorKind::InvalidArgument, "profile scale must be positive");
  return Field::from_function(grid, [&](Point x) { return profile(norm(x - center) / scale); });
}

const RadialProfile& ground_state() {
  static const RadialProfile profile = find_ground_state();
  return profile;
}

}  // namespace gpmin::townes
