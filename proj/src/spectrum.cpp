#include "lyapobs/spectrum.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/parallel.hpp"
#include "lyapobs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace lyapobs {

std::vector<std::ptrdiff_t> limsup_checkpoints(std::ptrdiff_t n) {
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  const double lo = std::ceil(static_cast<double>(n) / 8.0);
  std::vector<std::ptrdiff_t> out;
  for (int i = 0; i < 8; ++i) {
    const double v = lo * std::pow(static_cast<double>(n) / lo, i / 7.0);
    auto m = static_cast<std::ptrdiff_t>(std::llround(v));
    m = std::clamp<std::ptrdiff_t>(m, 1, n);
    if (out.empty() || m > out.back()) out.push_back(m);
  }
  if (out.back() != n) out.push_back(n);
  return out;
}

std::vector<double> log_norms_at(const Cocycle& c, const Point& x, const std::vector<std::ptrdiff_t>& horizons) {
  if (horizons.empty()) return {};
  if (!std::is_sorted(horizons.begin(), horizons.end()) || horizons.front() < 1) {
    throw std::invalid_argument("horizons must be ascending and >= 1");
  }
  const System& base = c.base();
  base.check_point(x);
  const std::ptrdiff_t n = horizons.back();
  if (x.is_symbolic() && x.forward_extent() < n) throw HorizonError("symbolic window too short for the horizon");
  LogAccumulator acc(c.dim(), ProductDirection::forward, 1);
  std::vector<double> out;
  out.reserve(horizons.size());
  std::size_t next = 0;
  Point y = x;
  for (std::ptrdiff_t j = 1; j <= n; ++j) {
    acc.push(c(y));
    while (next < horizons.size() && horizons[next] == j) {
      out.push_back(acc.log_norm());
      ++next;
    }
    if (j < n) y = base.forward(y);
  }
  return out;
}

double limsup_rate(const Cocycle& c, const Point& x, std::ptrdiff_t n) {
  const auto checkpoints = limsup_checkpoints(n);
  const auto norms = log_norms_at(c, x, checkpoints);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    best = std::max(best, norms[i] / static_cast<double>(checkpoints[i]));
  }
  return best;
}

double LyapunovSpectrum::sum() const { return pairwise_sum(exponents); }

LyapunovSpectrum lyapunov_spectrum(const Cocycle& c, const Point& x, std::ptrdiff_t n) {
  if (n < kMinSpectrumHorizon) throw std::invalid_argument("spectrum horizon must be >= 100");
  const System& base = c.base();
  base.check_point(x);
  if (x.is_symbolic() && x.forward_extent() < n) throw HorizonError("symbolic window too short for the horizon");
  const int d = c.dim();
  Matrix q = Matrix::Identity(d, d);
  std::vector<double> sums(static_cast<std::size_t>(d), 0.0);
  std::vector<double> half;
  double log_det = 0.0;
  Point y = x;
  const std::ptrdiff_t mid = n / 2;
  for (std::ptrdiff_t j = 1; j <= n; ++j) {
    const Matrix a = c(y);
    const double det = d == 1 ? a(0, 0) : a.partialPivLu().determinant();
    if (!std::isfinite(det) || std::abs(det) <= 1e-300) throw SingularMatrixError("cocycle value is not invertible");
    log_det += std::log(std::abs(det));
    Eigen::HouseholderQR<Matrix> qr(a * q);
    q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix& r = qr.matrixQR();
    for (int i = 0; i < d; ++i) {
      const double rii = r(i, i);
      if (rii < 0) q.col(i) = -q.col(i);
      sums[static_cast<std::size_t>(i)] += std::log(std::abs(rii));
    }
    if (j == mid) half = sums;
    if (j < n) y = base.forward(y);
  }
  LyapunovSpectrum s;
  s.horizon = n;
  s.log_det_rate = log_det / static_cast<double>(n);
  std::vector<double> now(sums.size());
  std::vector<double> before(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    now[i] = sums[i] / static_cast<double>(n);
    before[i] = half[i] / static_cast<double>(mid);
  }
  std::sort(now.begin(), now.end(), std::greater<>());
  std::sort(before.begin(), before.end(), std::greater<>());
  s.exponents = now;
  for (std::size_t i = 0; i < now.size(); ++i) s.residuals.push_back(std::abs(now[i] - before[i]));
  return s;
}

double chi_of_measure(const Cocycle& c, const std::vector<Point>& sample, std::ptrdiff_t n) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  const auto logs = parallel_map(sample.size(), [&](std::size_t i) { return product(c, sample[i], n, 1).log_norm; });
  return mean(logs) / static_cast<double>(n);
}

double chi_of_measure(const Cocycle& c, const OrbitSegment& periodic_orbit, std::ptrdiff_t n) {
  if (periodic_orbit.length() < 1 || !periodic_orbit.points.back().identical(periodic_orbit.start())) {
    throw std::invalid_argument("orbit segment is not closed");
  }
  if (n % periodic_orbit.length() != 0) throw std::invalid_argument("horizon must be a multiple of the period");
  return chi_of_measure(c, periodic_orbit.cycle(), n);
}

AngleSequence oseledets_angle_check(const Cocycle& c, const Point& x, std::ptrdiff_t n, std::ptrdiff_t tail,
                                    std::uint64_t seed) {
  const int d = c.dim();
  if (d < 2) throw std::invalid_argument("angles need fiber dimension >= 2");
  if (tail < 0) tail = std::max<std::ptrdiff_t>(n / 4, 64);
  AngleSequence out;
  out.spectrum = lyapunov_spectrum(c, x, n);
  for (int i = 0; i + 1 < d; ++i) {
    const double gap = out.spectrum.exponents[static_cast<std::size_t>(i)] - out.spectrum.exponents[static_cast<std::size_t>(i) + 1];
    if (gap < kSimpleSpectrumTolerance) {
      throw GapTooSmallError("spectral gap " + std::to_string(gap) + " is below the tracking tolerance");
    }
  }

  const OrbitSegment seg = orbit(c.base(), x, n + tail);
  for (int i = 0; i < 16; ++i) {
    const auto j = static_cast<std::ptrdiff_t>(std::llround(std::pow(static_cast<double>(n), i / 15.0)));
    if (out.checkpoints.empty() || j > out.checkpoints.back()) out.checkpoints.push_back(j);
  }

  CounterRng rng(seed, 0);
  Vector w(d);
  for (int i = 0; i < d; ++i) w[i] = rng.normal();
  w.normalize();
  std::vector<Vector> adjoint(out.checkpoints.size());
  std::size_t next = out.checkpoints.size();
  for (std::ptrdiff_t j = n + tail - 1; j >= 0; --j) {
    w = c(seg.points[static_cast<std::size_t>(j)]).transpose() * w;
    w.normalize();
    while (next > 0 && out.checkpoints[next - 1] == j) adjoint[--next] = w;
  }

  // The forward vector starts `tail` steps in the past (as far as a symbolic
  // window allows) so it is already aligned with E_1 when it reaches x.
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  v.normalize();
  const std::ptrdiff_t warm = x.is_torus() || x.is_periodic() ? tail : std::min(tail, x.backward_extent());
  if (warm > 0) {
    const OrbitSegment past = orbit(c.base(), iterate(c.base(), x, -warm), warm - 1);
    for (const Point& y : past.points) {
      v = c(y) * v;
      v.normalize();
    }
  }
  next = 0;
  for (std::ptrdiff_t j = 1; j <= n && next < out.checkpoints.size(); ++j) {
    v = c(seg.points[static_cast<std::size_t>(j - 1)]) * v;
    v.normalize();
    while (next < out.checkpoints.size() && out.checkpoints[next] == j) {
      const double s = std::min(1.0, std::abs(v.dot(adjoint[next])));
      out.values.push_back(std::log(s) / static_cast<double>(j));
      ++next;
    }
  }
  return out;
}

GapReport uniform_p_gap(const Cocycle& c, const std::vector<Point>& sample, int p, double epsilon, int trials,
                        std::ptrdiff_t n, std::uint64_t seed) {
  const int d = c.dim();
  if (p < 1 || p >= d) throw std::invalid_argument("gap index must satisfy 1 <= p < d");
  if (!(epsilon > 0.0)) throw std::invalid_argument("perturbation radius must be positive");
  if (trials < 1) throw std::invalid_argument("at least one trial is required");
  if (sample.empty()) throw std::invalid_argument("empty sample");

  auto mean_gap = [&](const Cocycle& cc) {
    const auto gaps = parallel_map(sample.size(), [&](std::size_t i) {
      const auto s = lyapunov_spectrum(cc, sample[i], n);
      return s.exponents[static_cast<std::size_t>(p - 1)] - s.exponents[static_cast<std::size_t>(p)];
    });
    return mean(gaps);
  };

  GapReport report;
  report.index = p;
  report.epsilon = epsilon;
  report.trials = trials;
  report.horizon = n;
  report.baseline_gap = mean_gap(c);
  report.minimum_gap = report.baseline_gap;
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    Matrix s(d, d);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
    s /= spectral_norm(s);
    const Matrix factor = Matrix::Identity(d, d) + epsilon * s;
    Cocycle perturbed = c.constant_value()
                            ? constant_cocycle(c.base_ptr(), *c.constant_value() * factor, c.label())
                            : Cocycle(c.base_ptr(), d, [c, factor](const Point& x) -> Matrix { return c(x) * factor; }, c.label());
    const double g = mean_gap(perturbed);
    report.trial_gaps.push_back(g);
    report.minimum_gap = std::min(report.minimum_gap, g);
  }
  return report;
}

EntropyBound kozlovski_bound(const Cocycle& c, const std::vector<Point>& sample, std::ptrdiff_t n) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  const auto best = parallel_map(sample.size(), [&](std::size_t i) {
    const LogProduct lp = product(c, sample[i], n);
    return *std::max_element(lp.log_exterior.begin(), lp.log_exterior.end());
  });
  EntropyBound b;
  b.integral = log_mean_exp(best) / static_cast<double>(n);
  b.pointwise = *std::max_element(best.begin(), best.end()) / static_cast<double>(n);
  return b;
}

EntropyBound kozlovski_bound(std::shared_ptr<const System> system, const std::vector<Point>& sample, std::ptrdiff_t n) {
  return kozlovski_bound(derivative_cocycle(std::move(system)), sample, n);
}

}  // namespace lyapobs
