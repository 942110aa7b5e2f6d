#pragma once

// Tables of log phi_m(T^j x) along one orbit, for subadditive potentials
// built from cocycle products.

#include "lyapobs/cocycle.hpp"

#include <string>
#include <vector>

namespace lyapobs {

class PotentialSeries {
 public:
  // values[j][m - 1] = log phi_m(T^j x), for j + m <= horizon.
  PotentialSeries(std::string label, std::vector<std::vector<double>> values);

  const std::string& label() const noexcept { return label_; }
  std::ptrdiff_t horizon() const noexcept { return horizon_; }
  // log phi_m(T^j x); m = 0 gives 0.
  double at(std::ptrdiff_t j, std::ptrdiff_t m) const;

 private:
  std::string label_;
  std::ptrdiff_t horizon_;
  std::vector<std::vector<double>> values_;
};

// log ||A^m(T^j x)||.
PotentialSeries norm_series(const Cocycle& c, const Point& x, std::ptrdiff_t horizon);
// log ||(A^m(T^j x))^{-1}||, i.e. the inverse of the m-step product read at
// its endpoint.
PotentialSeries inverse_norm_series(const Cocycle& c, const Point& x, std::ptrdiff_t horizon);

// Largest violation of log phi_{m+n}(y) <= log phi_m(y) + log phi_n(T^m y)
// over all stored triples (0 or negative when subadditive).
double subadditivity_excess(const PotentialSeries& s);

}  // namespace lyapobs
