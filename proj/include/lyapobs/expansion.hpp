#pragma once

// Non-uniform expansion along a tracked center-unstable bundle: exponent
// positivity, block averages, the (lambda, K) search and the hypotheses of
// the subadditive comparison argument.

#include "lyapobs/cocycle.hpp"
#include "lyapobs/domination.hpp"
#include "lyapobs/ergopt.hpp"
#include "lyapobs/potential.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lyapobs {

// Where the restricted cocycle B(x) = F(Tx)^T A(x) F(x) comes from.
class ExpansionContext {
 public:
  // F = identity.
  static ExpansionContext whole_fiber(Cocycle c);
  // Fixed orthonormal basis; invariance is checked on sampled points.
  static ExpansionContext constant_bundle(Cocycle c, const Matrix& basis);
  // Dominant rank-k bundle tracked by pushing frames forward. Toral points
  // start tracking at T^{-n_transient} x; symbolic points start at x and
  // the restricted orbit begins at T^{n_transient} x.
  static ExpansionContext tracked_bundle(Cocycle c, int k, std::ptrdiff_t n_transient = 200, std::uint64_t seed = 0);

  const Cocycle& cocycle() const noexcept { return cocycle_; }
  int rank() const noexcept { return rank_; }
  std::string describe() const;

  // B(T^j x), j = 0..n-1.
  std::vector<Matrix> restricted_matrices(const Point& x, std::ptrdiff_t n) const;

 private:
  enum class Mode { whole, constant, tracked };
  ExpansionContext(Cocycle c, Mode mode, int rank) : cocycle_(std::move(c)), mode_(mode), rank_(rank) {}

  Cocycle cocycle_;
  Mode mode_;
  int rank_;
  Matrix basis_;
  std::ptrdiff_t n_transient_ = 0;
  std::uint64_t seed_ = 0;
};

inline constexpr double kPositivityThreshold = -0.01;

struct PositivityReport {
  // checkpoint limsup of (1/m) log ||(B^m(x))^{-1}|| per sample point
  std::vector<double> values;
  bool holds = false;  // all values < kPositivityThreshold
};

PositivityReport check_exponent_positivity(const ExpansionContext& ctx, const std::vector<Point>& sample,
                                           std::ptrdiff_t n);

// log ||(B^K(T^{iK} x))^{-1}|| for blocks i = 0..n_blocks-1, averaged over
// the first N blocks and divided by K, maximized over
// N in limsup_checkpoints(n_blocks).
double nue_block_average(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t K, std::ptrdiff_t n_blocks);
double block_average_from(const std::vector<Matrix>& restricted, std::ptrdiff_t K, std::ptrdiff_t n_blocks);

// K = 1: Birkhoff average of log ||B(T^j x)^{-1}||.
double nue_limsup_average(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t n);

struct BlockScan {
  std::ptrdiff_t K = 0;
  double lambda = 0.0;
  double coverage = 0.0;
  double worst = 0.0;  // largest per-point block average
};

struct ExpansionReport {
  CheckStatus status = CheckStatus::refused;
  std::string reason;
  std::ptrdiff_t K = 0;
  double lambda = 0.0;
  double coverage = 0.0;
  std::vector<double> block_averages;  // per point, at the selected K
  std::vector<BlockScan> scans;
  PositivityReport positivity;
  DominationReport gate;
  bool gate_vacuous = false;
  std::ptrdiff_t n = 0;
  std::ptrdiff_t K_max = 0;
  double coverage_floor = 0.0;
  std::size_t sample_size = 0;
};

// Gates: exponent positivity on the sample; index-1 domination of the
// inverse restricted cocycle (index k-1 of the forward one) on
// `support_sample`, vacuous when the bundle has rank 1. Then scans
// K = 1..K_max and stops at the first K where a fraction >= coverage_floor
// of points has block average <= -lambda, lambda = half the median
// magnitude at that K.
ExpansionReport theorem_a_search(const ExpansionContext& ctx, const std::vector<Point>& sample,
                                 const std::vector<Point>& support_sample, std::ptrdiff_t K_max, std::ptrdiff_t n,
                                 double coverage_floor = 0.99, std::ptrdiff_t gate_horizon = 64);
// Same, with the support sample produced only once the positivity gate has
// passed (it is costly to obtain and unused on refusal).
using SupportProvider = std::function<std::vector<Point>()>;
ExpansionReport theorem_a_search(const ExpansionContext& ctx, const std::vector<Point>& sample,
                                 const SupportProvider& support, std::ptrdiff_t K_max, std::ptrdiff_t n,
                                 double coverage_floor = 0.99, std::ptrdiff_t gate_horizon = 64);

// a_n = log ||(B^n)^{-1}||, b_n = log ||B^n|| along one orbit.
PotentialSeries inverse_restricted_series(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t horizon);
PotentialSeries forward_restricted_series(const ExpansionContext& ctx, const Point& x, std::ptrdiff_t horizon);

struct ComparisonCheck {
  bool holds = false;
  double a_excess = 0.0;           // a_{n+k}(y) - a_n(T^k y) - a_k(y)
  double b_excess = 0.0;           // same for b
  double comparison_excess = 0.0;  // a_n(y) - a_{n+k}(y) - b_k(T^n y)
};

// Subadditivity of a and b and a_n <= a_{n+k} + b_k o T^n on all stored
// triples, within 1e-8.
ComparisonCheck tian_hypotheses_check(const PotentialSeries& a, const PotentialSeries& b);

}  // namespace lyapobs
