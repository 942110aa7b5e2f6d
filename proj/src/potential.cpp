#include "lyapobs/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lyapobs {

PotentialSeries::PotentialSeries(std::string label, std::vector<std::vector<double>> values)
    : label_(std::move(label)), horizon_(static_cast<std::ptrdiff_t>(values.size())), values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("empty potential series");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (values_[j].size() != values_.size() - j) throw std::invalid_argument("potential table is not triangular");
    for (double v : values_[j]) {
      if (!std::isfinite(v)) throw std::invalid_argument("potential values must be finite");
    }
  }
}

double PotentialSeries::at(std::ptrdiff_t j, std::ptrdiff_t m) const {
  if (j < 0 || m < 0 || j + m > horizon_) throw std::out_of_range("potential entry outside the table");
  if (m == 0) return 0.0;
  return values_[static_cast<std::size_t>(j)][static_cast<std::size_t>(m - 1)];
}

namespace {

PotentialSeries build(const Cocycle& c, const Point& x, std::ptrdiff_t horizon, ProductDirection direction,
                      std::string label) {
  if (horizon < 1) throw std::invalid_argument("series horizon must be >= 1");
  c.base().check_point(x);
  std::vector<Matrix> factors;
  factors.reserve(static_cast<std::size_t>(horizon));
  Point y = x;
  for (std::ptrdiff_t j = 0; j < horizon; ++j) {
    factors.push_back(c(y));
    if (j + 1 < horizon) y = c.base().forward(y);
  }
  std::vector<std::vector<double>> values(static_cast<std::size_t>(horizon));
  for (std::ptrdiff_t j = 0; j < horizon; ++j) {
    LogAccumulator acc(c.dim(), direction, 1);
    auto& row = values[static_cast<std::size_t>(j)];
    for (std::ptrdiff_t m = j; m < horizon; ++m) {
      acc.push(factors[static_cast<std::size_t>(m)]);
      row.push_back(acc.log_norm());
    }
  }
  return PotentialSeries(std::move(label), std::move(values));
}

}  // namespace

PotentialSeries norm_series(const Cocycle& c, const Point& x, std::ptrdiff_t horizon) {
  return build(c, x, horizon, ProductDirection::forward, "log||A^n||");
}

PotentialSeries inverse_norm_series(const Cocycle& c, const Point& x, std::ptrdiff_t horizon) {
  return build(c, x, horizon, ProductDirection::inverse, "log||A^-n||");
}

double subadditivity_excess(const PotentialSeries& s) {
  double worst = -std::numeric_limits<double>::infinity();
  const std::ptrdiff_t n = s.horizon();
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    for (std::ptrdiff_t m = 1; j + m < n; ++m) {
      for (std::ptrdiff_t k = 1; j + m + k <= n; ++k) {
        worst = std::max(worst, s.at(j, m + k) - s.at(j, m) - s.at(j + m, k));
      }
    }
  }
  return worst;
}

}  // namespace lyapobs
