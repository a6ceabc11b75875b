#include "gpmin/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <mutex>

#include "gpmin/error.hpp"

namespace gpmin {

const char* to_string(PotentialForm form) {
  switch (form) {
    case PotentialForm::Product: return "product";
    case PotentialForm::Sum: return "sum";
    case PotentialForm::Min: return "min";
  }
  return "product";
}

PotentialForm parse_form(const std::string& text) {
  if (text == "product") return PotentialForm::Product;
  if (text == "sum") return PotentialForm::Sum;
  if (text == "min") return PotentialForm::Min;
  throw Error(ErrorKind::InvalidArgument, "unknown potential form '" + text + "'");
}

namespace {

double factor(const Well& w, Point x) {
  const double r = norm(x - w.center);
  if (w.exponent == 2.0) return w.weight * r * r;
  return w.weight * std::pow(r, w.exponent);
}

bool lex_less(Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

}  // namespace

double PotentialSpec::operator()(Point x) const {
  switch (form) {
    case PotentialForm::Product: {
      double v = 1.0;
      for (const Well& w : wells) v *= factor(w, x);
      return v;
    }
    case PotentialForm::Sum: {
      double v = 0.0;
      for (const Well& w : wells) v += factor(w, x);
      return v;
    }
    case PotentialForm::Min: {
      double v = std::numeric_limits<double>::infinity();
      for (const Well& w : wells) v = std::min(v, factor(w, x));
      return v;
    }
  }
  return 0.0;
}

void PotentialSpec::validate() const {
  require(!wells.empty(), ErrorKind::InvalidArgument, "potential needs at least one well");
  for (const Well& w : wells) {
    require(w.exponent > 0.0 && std::isfinite(w.exponent), ErrorKind::InvalidArgument,
            "well exponents must be positive");
    require(w.weight > 0.0 && std::isfinite(w.weight), ErrorKind::InvalidArgument, "well weights must be positive");
  }
}

PotentialSpec PotentialSpec::scaled(double f) const {
  PotentialSpec out = *this;
  if (form == PotentialForm::Product) {
    if (!out.wells.empty()) out.wells.front().weight *= f;
  } else {
    for (Well& w : out.wells) w.weight *= f;
  }
  return out;
}

std::string PotentialSpec::key() const {
  std::string s = to_string(form);
  char buf[160];
  for (const Well& w : wells) {
    std::snprintf(buf, sizeof buf, "|%.17g,%.17g,%.17g,%.17g", w.center.x, w.center.y, w.exponent, w.weight);
    s += buf;
  }
  return s;
}

double LocalModel::operator()(Point x) const {
  const double r = norm(x);
  return exponent == 2.0 ? coefficient * r * r : coefficient * std::pow(r, exponent);
}

std::vector<LocalModel> zeros(const PotentialSpec& spec) {
  spec.validate();
  std::vector<Point> centers;
  for (const Well& w : spec.wells)
    if (std::find(centers.begin(), centers.end(), w.center) == centers.end()) centers.push_back(w.center);
  std::sort(centers.begin(), centers.end(), lex_less);

  std::vector<LocalModel> out;
  switch (spec.form) {
    case PotentialForm::Product:
      for (Point c : centers) {
        LocalModel m{c, 0.0, 1.0};
        for (const Well& w : spec.wells) {
          if (w.center == c) {
            m.exponent += w.exponent;
            m.coefficient *= w.weight;
          } else {
            m.coefficient *= factor(w, c);
          }
        }
        out.push_back(m);
      }
      break;
    case PotentialForm::Sum:
      if (centers.size() == 1) {
        LocalModel m{centers.front(), std::numeric_limits<double>::infinity(), 0.0};
        for (const Well& w : spec.wells) m.exponent = std::min(m.exponent, w.exponent);
        for (const Well& w : spec.wells)
          if (w.exponent == m.exponent) m.coefficient += w.weight;
        out.push_back(m);
      }
      break;
    case PotentialForm::Min:
      for (Point c : centers) {
        LocalModel m{c, 0.0, std::numeric_limits<double>::infinity()};
        for (const Well& w : spec.wells)
          if (w.center == c) m.exponent = std::max(m.exponent, w.exponent);
        for (const Well& w : spec.wells)
          if (w.center == c && w.exponent == m.exponent) m.coefficient = std::min(m.coefficient, w.weight);
        out.push_back(m);
      }
      break;
  }
  return out;
}

namespace {

struct PotentialCache {
  static constexpr std::size_t kCapacity = 32;
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<const Field>> entries;
  std::deque<std::string> order;
};

std::string grid_key(const Grid2D& g) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "#%zu,%.17g,%s,%.17g,%.17g", g.n(), g.half_width(), to_string(g.mode()),
                g.center().x, g.center().y);
  return buf;
}

}  // namespace

std::shared_ptr<const Field> eval_potential(const PotentialSpec& spec, const Grid2D& grid) {
  spec.validate();
  static PotentialCache cache;
  const std::string key = spec.key() + grid_key(grid);
  {
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
  }
  auto field = std::make_shared<const Field>(Field::from_function(grid, [&](Point x) { return spec(x); }));
  std::lock_guard lock(cache.mutex);
  if (cache.entries.emplace(key, field).second) {
    cache.order.push_back(key);
    if (cache.order.size() > PotentialCache::kCapacity) {
      cache.entries.erase(cache.order.front());
      cache.order.pop_front();
    }
  }
  return cache.entries.at(key);
}

PotentialSpec harmonic(Point center, double weight) {
  return PotentialSpec{PotentialForm::Product, {Well{center, 2.0, weight}}};
}

}  // namespace gpmin
