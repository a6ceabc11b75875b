#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gpmin/grid.hpp"

namespace gpmin {

/// One homogeneous factor g |x - center|^p.
struct Well {
  Point center;
  double exponent = 2.0;
  double weight = 1.0;

  friend bool operator==(const Well&, const Well&) = default;
};

/// How the well factors combine into V.
///
/// product: V = prod_j g_j |x - x_j|^{p_j}  (zero at every center)
/// sum:     V = sum_j g_j |x - x_j|^{p_j}   (zero only if all centers coincide)
/// min:     V = min_j g_j |x - x_j|^{p_j}   (zero at every center, independent local weights)
enum class PotentialForm { Product, Sum, Min };

const char* to_string(PotentialForm form);
PotentialForm parse_form(const std::string& text);

struct PotentialSpec {
  PotentialForm form = PotentialForm::Product;
  std::vector<Well> wells;

  double operator()(Point x) const;

  /// Throws InvalidArgument on an empty well list or nonpositive exponents/weights.
  void validate() const;

  /// Copy with every weight multiplied by `factor`.
  PotentialSpec scaled(double factor) const;

  /// Stable text key, used for caching.
  std::string key() const;

  friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;
};

/// Homogeneous local model V(zero + x) ~ coefficient |x|^exponent at a zero of V.
struct LocalModel {
  Point zero;
  double exponent = 0.0;
  double coefficient = 0.0;

  double operator()(Point x) const;
};

/// Zeros of V with their local models, ordered lexicographically by position.
std::vector<LocalModel> zeros(const PotentialSpec& spec);

/// Nodewise V on the grid; results are cached per (spec, grid).
std::shared_ptr<const Field> eval_potential(const PotentialSpec& spec, const Grid2D& grid);

/// Radial harmonic trap |x - center|^2.
PotentialSpec harmonic(Point center = {}, double weight = 1.0);

}  // namespace gpmin
