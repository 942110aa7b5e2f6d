#include "lyapobs/expansion.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/parallel.hpp"
#include "lyapobs/rng.hpp"
#include "lyapobs/spectrum.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lyapobs {

// --- context ---------------------------------------------------------------

ExpansionContext ExpansionContext::whole_fiber(Cocycle c) {
  const int d = c.dim();
  return ExpansionContext(std::move(c), Mode::whole, d);
}

ExpansionContext ExpansionContext::constant_bundle(Cocycle c, const Matrix& basis) {
  const Matrix frame = orthonormalize(basis);
  const FrameField field = FrameField::constant(frame);
  restrict_to_bundle(c, field);  // throws InvarianceError
  const int k = static_cast<int>(frame.cols());
  ExpansionContext ctx(std::move(c), Mode::constant, k);
  ctx.basis_ = frame;
  return ctx;
}

ExpansionContext ExpansionContext::tracked_bundle(Cocycle c, int k, std::ptrdiff_t n_transient, std::uint64_t seed) {
  if (k < 1 || k >= c.dim()) throw std::invalid_argument("bundle rank must satisfy 1 <= k < d");
  if (n_transient < 1) throw std::invalid_argument("transient must be >= 1");
  ExpansionContext ctx(std::move(c), Mode::tracked, k);
  ctx.n_transient_ = n_transient;
  ctx.seed_ = seed;
  return ctx;
}

std::string ExpansionContext::describe() const {
  switch (mode_) {
    case Mode::whole:
      return "whole fiber";
    case Mode::constant:
      return "constant rank-" + std::to_string(rank_) + " bundle";
    case Mode::tracked:
      return "tracked rank-" + std::to_string(rank_) + " bundle";
  }
  return "";
}

std::vector<Matrix> ExpansionContext::restricted_matrices(const Point& x, std::ptrdiff_t n) const {
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  const System& base = cocycle_.base();
  base.check_point(x);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n));

  if (mode_ != Mode::tracked) {
    if (x.is_symbolic() && x.forward_extent() < n) throw HorizonError("symbolic window too short for the horizon");
    Point y = x;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const Matrix a = cocycle_(y);
      out.push_back(mode_ == Mode::whole ? a : Matrix(basis_.transpose() * a * basis_));
      if (j + 1 < n) y = base.forward(y);
    }
    return out;
  }

  const int d = cocycle_.dim();
  std::array<Matrix, 2> f;
  for (std::size_t t = 0; t < 2; ++t) {
    CounterRng rng(seed_, t);
    Matrix m(d, rank_);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    f[t] = orthonormalize(m);
  }
  auto check_drift = [&](std::ptrdiff_t step) {
    const double drift = subspace_distance(f[0], f[1]);
    if (drift > kInvarianceTolerance) {
      throw NonConvergenceError("bundle frames disagree by " + std::to_string(drift) + " at step " + std::to_string(step));
    }
  };

  Point y = x;
  if (base.is_toral()) {
    Point z = iterate(base, x, -n_transient_);
    for (std::ptrdiff_t j = 0; j < n_transient_; ++j) {
      const Matrix a = cocycle_(z);
      for (auto& frame : f) frame = orthonormalize(a * frame);
      z = base.forward(z);
    }
  } else {
    if (x.forward_extent() < n + n_transient_) throw HorizonError("symbolic window too short for the horizon");
    for (std::ptrdiff_t j = 0; j < n_transient_; ++j) {
      const Matrix a = cocycle_(y);
      for (auto& frame : f) frame = orthonormalize(a * frame);
      y = base.forward(y);
    }
  }
  check_drift(0);

  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const Matrix a = cocycle_(y);
    const Matrix image = a * f[0];
    const Matrix next = orthonormalize(image);
    out.push_back(next.transpose() * image);
    f[0] = next;
    f[1] = orthonormalize(a * f[1]);
    if ((j + 1) % 64 == 0 || j + 1 == n) check_drift(j + 1);
    if (j + 1 < n) y = base.forward(y);
  }
  return out;
}

// --- exponents and block averages -------------------------------------------

namespace {

double inverse_log_norm(const Matrix& b) {
  if (b.rows() == 1) {
    if (!(std::abs(b(0, 0)) > 1e-300)) throw SingularMatrixError("restricted cocycle is not invertible");
    return -std::log(std::abs(b(0, 0)));
  }
  LogAccumulator acc(static_cast<int>(b.rows()), ProductDirection::inverse, 1);
  acc.push(b);
  return acc.log_norm();
}

// Rank one: log ||B^-m|| = -sum log |b_j|, no matrix products needed.
std::vector<double> scalar_inverse_logs(const std::vector<Matrix>& seq, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) out[j] = inverse_log_norm(seq[j]);
  return out;
}

double positivity_value(const std::vector<Matrix>& seq) {
  const auto n = static_cast<std::ptrdiff_t>(seq.size());
  const auto cps = limsup_checkpoints(n);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t next = 0;
  if (seq.front().rows() == 1) {
    const auto logs = scalar_inverse_logs(seq, seq.size());
    for (std::ptrdiff_t m : cps) {
      best = std::max(best, pairwise_sum(std::span<const double>(logs.data(), static_cast<std::size_t>(m))) /
                                static_cast<double>(m));
    }
    return best;
  }
  LogAccumulator acc(static_cast<int>(seq.front().rows()), ProductDirection::inverse, 1);
  for (std::ptrdiff_t j = 1; j <= n; ++j) {
    acc.push(seq[static_cast<std::size_t>(j - 1)]);
    if (j == cps[next]) {
      best = std::max(best, acc.log_norm() / static_cast<double>(j));
      ++next;
    }
  }
  return best;
}

}  // namespace

PositivityReport check_exponent_positivity(const ExpansionContext& ctx, const std::vector<Point>& sample,
                                           std::ptrdiff_t n) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  PositivityReport r;
  r.values = parallel_map(sample.size(), [&](std::size_t i) { return positivity_value(ctx.restricted_matrices(sample[i], n)); });
  r.holds = std::all_of(r.values.begin(), r.values.end(), [](double v) { return v < kPositivityThreshold; });
  return r;
}

double block_average_from(const std::vector<Matrix>& restricted, std::ptrdiff_t K, std::ptrdiff_t n_blocks) {
  if (K < 1 || n_blocks < 1) throw std::invalid_argument("block length and count must be >= 1");
  if (static_cast<std::ptrdiff_t>(restricted.size()) < K * n_blocks) throw std::invalid_argument("too few restricted factors");
  const int k = static_cast<int>(restricted.front().rows());
  std::vector<double> blocks(static_cast<std::size_t>(n_blocks));
  if (k == 1) {
    const auto logs = scalar_inverse_logs(restricted, static_cast<std::size_t>(K * n_blocks));
    for (std::ptrdiff_t i = 0; i < n_blocks; ++i) {
      blocks[static_cast<std::size_t>(i)] =
          pairwise_sum(std::span<const double>(logs.data() + i * K, static_cast<std::size_t>(K)));
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n_blocks; ++i) {
      if (K == 1) {
        blocks[static_cast<std::size_t>(i)] = inverse_log_norm(restricted[static_cast<std::size_t>(i)]);
        continue;
      }
      LogAccumulator acc(k, ProductDirection::inverse, 1);
      for (std::ptrdiff_t j = 0; j < K; ++j) acc.push(restricted[static_cast<std::size_t>(i * K + j)]);
      blocks[static_cast<std::size_t>(i)] = acc.log_norm();
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t count : limsup_checkpoints(n_blocks)) {
    const double avg = pairwise_sum(std::span<const double>(blocks.data(), static_cast<std::size_t>(count))) /
                       static_cast<double>(count * K);
    best = std::max(best, avg);
  }
  return best;
}

double nue_block_average(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t K, std::ptrdiff_t n_blocks) {
  if (K < 1 || n_blocks < 1) throw std::invalid_argument("block length and count must be >= 1");
  return block_average_from(ctx.restricted_matrices(x, K * n_blocks), K, n_blocks);
}

double nue_limsup_average(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t n) {
  return nue_block_average(ctx, x, 1, n);
}

ExpansionReport theorem_a_search(const ExpansionContext& ctx, const std::vector<Point>& sample,
                                 const std::vector<Point>& support_sample, std::ptrdiff_t K_max, std::ptrdiff_t n,
                                 double coverage_floor, std::ptrdiff_t gate_horizon) {
  return theorem_a_search(
      ctx, sample, [&support_sample] { return support_sample; }, K_max, n, coverage_floor, gate_horizon);
}

ExpansionReport theorem_a_search(const ExpansionContext& ctx, const std::vector<Point>& sample,
                                 const SupportProvider& support, std::ptrdiff_t K_max, std::ptrdiff_t n,
                                 double coverage_floor, std::ptrdiff_t gate_horizon) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  if (K_max < 1) throw std::invalid_argument("K_max must be >= 1");
  if (n < K_max) throw std::invalid_argument("horizon must be at least K_max");
  if (!(coverage_floor > 0.0 && coverage_floor <= 1.0)) throw std::invalid_argument("coverage floor must lie in (0, 1]");
  ExpansionReport r;
  r.n = n;
  r.K_max = K_max;
  r.coverage_floor = coverage_floor;
  r.sample_size = sample.size();

  // One pass per point: positivity plus block averages for every K.
  struct PerPoint {
    double positivity;
    std::vector<double> blocks;
  };
  const auto per_point = parallel_map(sample.size(), [&](std::size_t i) {
    const auto seq = ctx.restricted_matrices(sample[i], n);
    PerPoint p;
    p.positivity = positivity_value(seq);
    for (std::ptrdiff_t K = 1; K <= K_max; ++K) p.blocks.push_back(block_average_from(seq, K, n / K));
    return p;
  });
  for (const auto& p : per_point) r.positivity.values.push_back(p.positivity);
  r.positivity.holds = std::all_of(r.positivity.values.begin(), r.positivity.values.end(),
                                   [](double v) { return v < kPositivityThreshold; });
  if (!r.positivity.holds) {
    r.status = CheckStatus::refused;
    r.reason = "exponent positivity along the bundle does not hold on the sample";
    return r;
  }

  if (ctx.rank() == 1) {
    r.gate_vacuous = true;
  } else {
    const std::vector<Point> support_sample = support();
    if (support_sample.empty()) {
      r.status = CheckStatus::refused;
      r.reason = "no support points for the domination gate";
      return r;
    }
    const auto seqs = parallel_map(support_sample.size(), [&](std::size_t i) {
      return ctx.restricted_matrices(support_sample[i], gate_horizon);
    });
    r.gate = domination_report(seqs, ctx.rank() - 1, gate_horizon);
    if (!r.gate.verdict) {
      r.status = CheckStatus::refused;
      r.reason = "no index-1 domination of the inverse restricted cocycle on the support";
      return r;
    }
  }

  r.status = CheckStatus::failed;
  r.reason = "no K up to K_max reaches the coverage floor";
  for (std::ptrdiff_t K = 1; K <= K_max; ++K) {
    std::vector<double> avgs;
    std::vector<double> mags;
    for (const auto& p : per_point) {
      avgs.push_back(p.blocks[static_cast<std::size_t>(K - 1)]);
      mags.push_back(std::abs(avgs.back()));
    }
    BlockScan scan;
    scan.K = K;
    scan.lambda = 0.5 * median(mags);
    const auto hits = std::count_if(avgs.begin(), avgs.end(), [&](double v) { return v <= -scan.lambda; });
    scan.coverage = static_cast<double>(hits) / static_cast<double>(avgs.size());
    scan.worst = *std::max_element(avgs.begin(), avgs.end());
    r.scans.push_back(scan);
    if (scan.lambda > 0.0 && scan.coverage >= coverage_floor) {
      r.status = CheckStatus::passed;
      r.reason.clear();
      r.K = K;
      r.lambda = scan.lambda;
      r.coverage = scan.coverage;
      r.block_averages = std::move(avgs);
      break;
    }
  }
  return r;
}

// --- comparison hypotheses ---------------------------------------------------

namespace {

PotentialSeries restricted_series(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t horizon,
                                  ProductDirection direction, std::string label) {
  const auto seq = ctx.restricted_matrices(x, horizon);
  std::vector<std::vector<double>> values(static_cast<std::size_t>(horizon));
  for (std::ptrdiff_t j = 0; j < horizon; ++j) {
    LogAccumulator acc(ctx.rank(), direction, 1);
    for (std::ptrdiff_t m = j; m < horizon; ++m) {
      acc.push(seq[static_cast<std::size_t>(m)]);
      values[static_cast<std::size_t>(j)].push_back(acc.log_norm());
    }
  }
  return PotentialSeries(std::move(label), std::move(values));
}

}  // namespace

PotentialSeries inverse_restricted_series(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t horizon) {
  return restricted_series(ctx, x, horizon, ProductDirection::inverse, "log||B^-n||");
}

PotentialSeries forward_restricted_series(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t horizon) {
  return restricted_series(ctx, x, horizon, ProductDirection::forward, "log||B^n||");
}

ComparisonCheck tian_hypotheses_check(const PotentialSeries& a, const PotentialSeries& b) {
  if (a.horizon() != b.horizon()) throw std::invalid_argument("series must share one horizon");
  const std::ptrdiff_t N = a.horizon();
  ComparisonCheck c;
  c.a_excess = subadditivity_excess(a);
  c.b_excess = subadditivity_excess(b);
  c.comparison_excess = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t j = 0; j < N; ++j) {
    for (std::ptrdiff_t n = 1; j + n < N; ++n) {
      for (std::ptrdiff_t k = 1; j + n + k <= N; ++k) {
        c.comparison_excess = std::max(c.comparison_excess, a.at(j, n) - a.at(j, n + k) - b.at(j + n, k));
      }
    }
  }
  constexpr double tol = 1e-8;
  c.holds = c.a_excess <= tol && c.b_excess <= tol && c.comparison_excess <= tol;
  return c;
}

}  // namespace lyapobs
