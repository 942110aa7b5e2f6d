#include "lyapobs/domination.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/parallel.hpp"
#include "lyapobs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lyapobs {
namespace {

const double kLogFloor = std::log(1e-300);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 1.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> sxy(x.size());
  std::vector<double> sxx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy[i] = (x[i] - mx) * (y[i] - my);
    sxx[i] = (x[i] - mx) * (x[i] - mx);
  }
  LineFit f;
  f.slope = pairwise_sum(sxy) / pairwise_sum(sxx);
  f.intercept = my - f.slope * mx;
  std::vector<double> res(x.size());
  std::vector<double> tot(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    res[i] = e * e;
    tot[i] = (y[i] - my) * (y[i] - my);
  }
  const double ss_tot = pairwise_sum(tot);
  const double scale = std::max(1.0, my * my);
  f.r_squared = ss_tot <= 1e-20 * scale * static_cast<double>(x.size()) ? 1.0 : 1.0 - pairwise_sum(res) / ss_tot;
  return f;
}

// Unit vectors orthogonal to the columns of `core`, as columns.
Matrix complement_basis(const Matrix& core) {
  const auto d = core.rows();
  const auto l = core.cols();
  Eigen::HouseholderQR<Matrix> qr(core);
  const Matrix q = qr.householderQ();
  return q.rightCols(d - l);
}

std::vector<Vector> probe_directions(const Cone& cone, std::uint64_t seed, std::uint64_t stream) {
  const auto d = cone.core.rows();
  const auto l = cone.core.cols();
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < l; ++i) out.push_back(cone.core.col(i));
  if (l == d) return out;
  const Matrix comp = complement_basis(cone.core);
  const double ct = std::cos(cone.aperture);
  const double st = std::sin(cone.aperture);
  if (l == 1 && d == 2) {
    out.push_back(ct * cone.core.col(0) + st * comp.col(0));
    out.push_back(ct * cone.core.col(0) - st * comp.col(0));
    return out;
  }
  if (l == 1 && d == 3) {
    for (int k = 0; k < kConeBoundaryDirections; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / kConeBoundaryDirections;
      out.push_back(ct * cone.core.col(0) + st * (std::cos(phi) * comp.col(0) + std::sin(phi) * comp.col(1)));
    }
    return out;
  }
  CounterRng rng(seed, stream);
  for (int k = 0; k < kConeBoundaryDirections; ++k) {
    Vector a(l);
    Vector b(d - l);
    for (Eigen::Index i = 0; i < l; ++i) a[i] = rng.normal();
    for (Eigen::Index i = 0; i < d - l; ++i) b[i] = rng.normal();
    out.push_back(ct * cone.core * a.normalized() + st * comp * b.normalized());
  }
  return out;
}

}  // namespace

std::vector<std::ptrdiff_t> domination_checkpoints(std::ptrdiff_t n_max) {
  if (n_max < 1) throw std::invalid_argument("horizon must be >= 1");
  std::vector<std::ptrdiff_t> out;
  for (int k = 0;; ++k) {
    const auto m = static_cast<std::ptrdiff_t>(std::llround(std::pow(2.0, k / 2.0)));
    if (m > n_max) break;
    if (out.empty() || m > out.back()) out.push_back(m);
  }
  if (out.back() != n_max) out.push_back(n_max);
  return out;
}

namespace {

// log(sigma_{i+1} / sigma_i) of the partial products at each checkpoint.
template <class Factor>
std::vector<double> ratio_profile(int d, int index, const std::vector<std::ptrdiff_t>& cps, Factor&& factor) {
  LogAccumulator acc(d, ProductDirection::forward, index + 1);
  std::vector<double> ratios;
  ratios.reserve(cps.size());
  std::size_t next = 0;
  for (std::ptrdiff_t j = 1; j <= cps.back(); ++j) {
    acc.push(factor(j - 1));
    if (j == cps[next]) {
      double r = acc.log_exterior(index + 1) - 2.0 * acc.log_exterior(index) + acc.log_exterior(index - 1);
      if (!std::isfinite(r)) r = kLogFloor;
      ratios.push_back(r);
      ++next;
    }
  }
  return ratios;
}

DominationReport fit_report(int index, std::ptrdiff_t n_max, const DominationOptions& options,
                            const std::vector<std::vector<double>>& per_point) {
  DominationReport report;
  report.index = index;
  report.n_max = n_max;
  report.options = options;
  report.checkpoints = domination_checkpoints(n_max);
  const auto& cps = report.checkpoints;

  std::vector<double> xs;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : per_point) worst = std::max(worst, r[k]);
    report.worst_log_ratio.push_back(worst);
    xs.push_back(static_cast<double>(cps[k]));
  }

  // tau from the least-squares slope; C is the smallest constant with
  // C tau^n above every checkpoint maximum. Per-n maxima over a sample bend
  // (extreme points dominate early), so the fitted line itself need not
  // bound them; its largest excess is reported for information.
  const LineFit fit = least_squares(xs, report.worst_log_ratio);
  const double log_tau = fit.slope;
  double log_c = fit.intercept;
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cps.size(); ++k) {
    const double over = report.worst_log_ratio[k] - log_tau * xs[k];
    log_c = std::max(log_c, over);
    report.worst_excess = std::max(report.worst_excess, over - fit.intercept);
  }
  report.tau = std::exp(log_tau);
  report.C = std::exp(log_c);
  report.r_squared = fit.r_squared;
  report.verdict = report.tau <= options.max_tau && report.r_squared >= options.min_r_squared;
  return report;
}

void check_domination_args(int d, int index, std::ptrdiff_t n_max, std::size_t count) {
  if (index < 1 || index >= d) throw std::invalid_argument("domination index must satisfy 1 <= i < d");
  if (n_max < kMinDominationHorizon) throw std::invalid_argument("domination horizon must be >= 32");
  if (count == 0) throw std::invalid_argument("empty sample");
}

}  // namespace

DominationReport domination_report(const Cocycle& c, const std::vector<Point>& sample, int index,
                                   std::ptrdiff_t n_max, const DominationOptions& options) {
  const int d = c.dim();
  check_domination_args(d, index, n_max, sample.size());
  const auto cps = domination_checkpoints(n_max);
  const auto per_point = parallel_map(sample.size(), [&](std::size_t s) {
    const Point& x = sample[s];
    c.base().check_point(x);
    if (x.is_symbolic() && x.forward_extent() < n_max) throw HorizonError("symbolic window too short for the horizon");
    Point y = x;
    std::ptrdiff_t at = 0;
    return ratio_profile(d, index, cps, [&](std::ptrdiff_t j) {
      while (at < j) {
        y = c.base().forward(y);
        ++at;
      }
      return c(y);
    });
  });
  return fit_report(index, n_max, options, per_point);
}

DominationReport domination_report(const std::vector<std::vector<Matrix>>& sequences, int index,
                                   std::ptrdiff_t n_max, const DominationOptions& options) {
  if (sequences.empty()) throw std::invalid_argument("empty sample");
  const int d = static_cast<int>(sequences.front().front().rows());
  check_domination_args(d, index, n_max, sequences.size());
  const auto cps = domination_checkpoints(n_max);
  const auto per_point = parallel_map(sequences.size(), [&](std::size_t s) {
    const auto& seq = sequences[s];
    if (static_cast<std::ptrdiff_t>(seq.size()) < n_max) throw std::invalid_argument("factor sequence shorter than the horizon");
    return ratio_profile(d, index, cps, [&](std::ptrdiff_t j) -> const Matrix& { return seq[static_cast<std::size_t>(j)]; });
  });
  return fit_report(index, n_max, options, per_point);
}

// --- cones -----------------------------------------------------------------

Cone Cone::around(const Vector& direction, double aperture) {
  if (!(aperture > 0.0 && aperture < std::numbers::pi / 2)) throw std::invalid_argument("cone aperture must lie in (0, pi/2)");
  Cone c;
  c.core = canonical_direction(direction);
  c.aperture = aperture;
  return c;
}

double Cone::angle_of(const Vector& v) const {
  const Vector inside = core * (core.transpose() * v);
  return std::atan2((v - inside).norm(), inside.norm());
}

ConeField ConeField::uniform(const Cone& cone) {
  if (!(cone.aperture > 0.0 && cone.aperture < std::numbers::pi / 2)) throw std::invalid_argument("cone aperture must lie in (0, pi/2)");
  if (orthonormality_defect(cone.core) > 1e-10) throw std::invalid_argument("cone core must be orthonormal");
  ConeField f;
  f.dim_ = static_cast<int>(cone.core.rows());
  f.ell_ = static_cast<int>(cone.core.cols());
  f.uniform_ = cone;
  return f;
}

ConeField ConeField::gridded(int resolution, std::unordered_map<std::uint64_t, Cone> cells) {
  if (cells.empty()) throw std::invalid_argument("empty cone field");
  if (resolution < 1) throw std::invalid_argument("resolution must be positive");
  ConeField f;
  f.resolution_ = resolution;
  const Cone& first = cells.begin()->second;
  f.dim_ = static_cast<int>(first.core.rows());
  f.ell_ = static_cast<int>(first.core.cols());
  for (const auto& [cell, cone] : cells) {
    if (cone.core.rows() != f.dim_ || cone.core.cols() != f.ell_) throw std::invalid_argument("cones of mixed shape");
    if (!(cone.aperture > 0.0 && cone.aperture < std::numbers::pi / 2)) throw std::invalid_argument("cone aperture must lie in (0, pi/2)");
  }
  f.cells_ = std::move(cells);
  return f;
}

const Cone& ConeField::at(const System& system, const Point& x) const {
  if (uniform_) return *uniform_;
  const auto it = cells_.find(system.cell_index(x, resolution_));
  if (it == cells_.end()) throw CoverageError("cone field has no cone at " + x.encode());
  return it->second;
}

ConeCheck verify_cone_field(const Cocycle& c, const ConeField& cones, const std::vector<Point>& sample, double margin,
                            std::uint64_t seed) {
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
  if (cones.ambient_dim() != c.dim()) throw std::invalid_argument("cone dimension does not match the cocycle");
  if (sample.empty()) throw std::invalid_argument("empty sample");
  const auto slacks = parallel_map(sample.size(), [&](std::size_t s) {
    const Point& x = sample[s];
    const Cone& here = cones.at(c.base(), x);
    const Cone& there = cones.at(c.base(), c.base().forward(x));
    const Matrix a = c(x);
    double worst = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (const Vector& v : probe_directions(here, seed, s)) {
      worst = std::min(worst, there.aperture - there.angle_of(a * v));
      ++count;
    }
    return std::pair{worst, count};
  });
  ConeCheck check;
  check.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& [slack, count] : slacks) {
    check.min_slack = std::min(check.min_slack, slack);
    check.directions_checked += count;
  }
  check.pass = check.min_slack >= margin;
  return check;
}

// --- almost additivity -----------------------------------------------------

KappaEstimate estimate_kappa(const Cocycle& c, const std::vector<Point>& sample, std::ptrdiff_t m_max,
                             std::ptrdiff_t n_max) {
  if (m_max < 2 || n_max < 2) throw std::invalid_argument("kappa grid bounds must be >= 2");
  if (sample.empty()) throw std::invalid_argument("empty sample");
  struct Worst {
    double value;
    std::ptrdiff_t m;
    std::ptrdiff_t n;
  };
  const auto per_point = parallel_map(sample.size(), [&](std::size_t s) {
    const Point& x = sample[s];
    const auto whole = log_norm_prefixes(c, x, m_max + n_max);
    Worst w{std::numeric_limits<double>::infinity(), 0, 0};
    Point y = x;
    for (std::ptrdiff_t m = 1; m <= m_max; ++m) {
      y = c.base().forward(y);
      const auto tail = log_norm_prefixes(c, y, n_max);
      for (std::ptrdiff_t n = 1; n <= n_max; ++n) {
        const double v = whole[static_cast<std::size_t>(m + n - 1)] - whole[static_cast<std::size_t>(m - 1)] -
                         tail[static_cast<std::size_t>(n - 1)];
        if (v < w.value) w = {v, m, n};
      }
    }
    return w;
  });
  KappaEstimate k;
  k.m_max = m_max;
  k.n_max = n_max;
  k.log_kappa = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < per_point.size(); ++s) {
    if (per_point[s].value < k.log_kappa) {
      k.log_kappa = per_point[s].value;
      k.arg_point = s;
      k.arg_m = per_point[s].m;
      k.arg_n = per_point[s].n;
    }
  }
  k.kappa = std::exp(k.log_kappa);
  k.success = k.log_kappa >= std::log(1e-12);
  return k;
}

double almost_additivity_constant(const PotentialSeries& values) {
  double worst = 0.0;
  const std::ptrdiff_t n = values.horizon();
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    for (std::ptrdiff_t m = 1; j + m < n; ++m) {
      for (std::ptrdiff_t k = 1; j + m + k <= n; ++k) {
        worst = std::max(worst, std::abs(values.at(j, m + k) - values.at(j, m) - values.at(j + m, k)));
      }
    }
  }
  return std::exp(worst);
}

bool almost_additivity_check(const PotentialSeries& values, double candidate_C) {
  if (!(candidate_C >= 1.0)) throw std::invalid_argument("candidate constant must be >= 1");
  const double slack = std::log(candidate_C) + 1e-9;
  const std::ptrdiff_t n = values.horizon();
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    for (std::ptrdiff_t m = 1; j + m < n; ++m) {
      for (std::ptrdiff_t k = 1; j + m + k <= n; ++k) {
        if (std::abs(values.at(j, m + k) - values.at(j, m) - values.at(j + m, k)) > slack) return false;
      }
    }
  }
  return true;
}

GapDominationAgreement gap_domination_crosscheck(const Cocycle& c, const std::vector<Point>& sample,
                                                 std::ptrdiff_t gap_horizon, std::ptrdiff_t n_max,
                                                 std::uint64_t seed, double epsilon, int trials, double threshold) {
  GapDominationAgreement a;
  a.domination = domination_report(c, sample, 1, n_max);
  a.gap = uniform_p_gap(c, sample, 1, epsilon, trials, gap_horizon, seed);
  a.gap_positive = a.gap.beta() > threshold;
  a.agree = a.gap_positive == a.domination.verdict;
  return a;
}

}  // namespace lyapobs
