#pragma once

// Dominated splittings from singular-value ratio decay, invariant cone
// fields, and the almost-additivity constant of the norm potential.
//
// Every verdict here is finite-horizon evidence on a finite sample of
// points, not a statement about the whole invariant set.

#include "lyapobs/cocycle.hpp"
#include "lyapobs/potential.hpp"
#include "lyapobs/spectrum.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace lyapobs {

struct DominationOptions {
  double max_tau = 0.99;
  double min_r_squared = 0.9;
  // Relative excess of the data over the least-squares line that is
  // reported as a violation. Informational: C is chosen to cover the data.
  double slack = 0.1;
};

struct DominationReport {
  int index = 1;
  std::ptrdiff_t n_max = 0;
  double C = 0.0;
  double tau = 0.0;
  double r_squared = 0.0;
  std::vector<std::ptrdiff_t> checkpoints;
  // max over the sample of log(sigma_{i+1} / sigma_i) at each checkpoint
  std::vector<double> worst_log_ratio;
  // largest log(r / (e^a tau^n)) over checkpoints, (a, log tau) the
  // least-squares line
  double worst_excess = 0.0;
  bool line_within_slack() const { return worst_excess <= std::log1p(options.slack); }
  bool verdict = false;
  DominationOptions options;
};

inline constexpr std::ptrdiff_t kMinDominationHorizon = 32;

// Checkpoints round(2^(k/2)) <= n_max, including 1 and n_max.
std::vector<std::ptrdiff_t> domination_checkpoints(std::ptrdiff_t n_max);

DominationReport domination_report(const Cocycle& c, const std::vector<Point>& sample, int index,
                                   std::ptrdiff_t n_max = 64, const DominationOptions& options = {});
// Same test on explicit factor sequences B_0, B_1, ... (one per point), each
// of length >= n_max.
DominationReport domination_report(const std::vector<std::vector<Matrix>>& sequences, int index,
                                   std::ptrdiff_t n_max = 64, const DominationOptions& options = {});

// Vectors within `aperture` of the span of `core` (orthonormal d x l).
struct Cone {
  Matrix core;
  double aperture = 0.0;

  static Cone around(const Vector& direction, double aperture);
  // Angle between v and the core subspace.
  double angle_of(const Vector& v) const;
};

class ConeField {
 public:
  static ConeField uniform(const Cone& cone);
  // One cone per grid cell (system.cell_index at `resolution`).
  static ConeField gridded(int resolution, std::unordered_map<std::uint64_t, Cone> cells);

  int ambient_dim() const noexcept { return dim_; }
  int core_dim() const noexcept { return ell_; }
  // CoverageError when the point's cell has no cone.
  const Cone& at(const System& system, const Point& x) const;

 private:
  ConeField() = default;
  int dim_ = 0;
  int ell_ = 0;
  int resolution_ = 0;
  std::optional<Cone> uniform_;
  std::unordered_map<std::uint64_t, Cone> cells_;
};

struct ConeCheck {
  bool pass = false;
  double min_slack = 0.0;
  std::size_t directions_checked = 0;
};

inline constexpr int kConeBoundaryDirections = 64;

// Maps boundary directions (and the core) of the cone at x through A(x) and
// measures how far inside the cone at T(x) they land.
ConeCheck verify_cone_field(const Cocycle& c, const ConeField& cones, const std::vector<Point>& sample,
                            double margin = 0.01, std::uint64_t seed = 0);

struct KappaEstimate {
  double log_kappa = 0.0;
  double kappa = 0.0;
  std::size_t arg_point = 0;
  std::ptrdiff_t arg_m = 0;
  std::ptrdiff_t arg_n = 0;
  std::ptrdiff_t m_max = 0;
  std::ptrdiff_t n_max = 0;
  // false when kappa underflowed below 1e-12
  bool success = false;
};

// min of ||A^{m+n}(x)|| / (||A^m(x)|| ||A^n(T^m x)||) over the sample and
// 1 <= m <= m_max, 1 <= n <= n_max, in log space.
KappaEstimate estimate_kappa(const Cocycle& c, const std::vector<Point>& sample, std::ptrdiff_t m_max,
                             std::ptrdiff_t n_max);

// Both sides of the almost-additivity inequality with slack log C, for all
// stored triples.
bool almost_additivity_check(const PotentialSeries& values, double candidate_C);
// Smallest C for which the check passes on this series.
double almost_additivity_constant(const PotentialSeries& values);

struct GapDominationAgreement {
  DominationReport domination;
  GapReport gap;
  bool gap_positive = false;  // beta > threshold
  bool agree = false;
};

// Index-1 gap (eps, trials, horizon) against the index-1 domination verdict.
GapDominationAgreement gap_domination_crosscheck(const Cocycle& c, const std::vector<Point>& sample,
                                                 std::ptrdiff_t gap_horizon, std::ptrdiff_t n_max,
                                                 std::uint64_t seed, double epsilon = 0.01, int trials = 16,
                                                 double threshold = 0.05);

}  // namespace lyapobs
