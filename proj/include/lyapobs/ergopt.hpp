#pragma once

// Ergodic optimization of the top Lyapunov exponent: periodic-orbit and
// pointwise values of beta, the two essential-supremum expressions, the
// Lyapunov-maximizing observable candidate and the sandwich / equality
// checks built from them.

#include "lyapobs/cocycle.hpp"
#include "lyapobs/domination.hpp"
#include "lyapobs/measures.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lyapobs {

struct PeriodicBeta {
  double value = 0.0;
  OrbitSegment orbit;
  std::size_t orbits_examined = 0;
};

// max over closed orbits of (1/q) log rho(A^q(p)); ties go to the smallest
// orbit encoding.
PeriodicBeta beta_periodic(const Cocycle& c, const std::vector<OrbitSegment>& orbits);

// (1/q) log of the spectral radius of the cycle product.
double periodic_exponent(const Cocycle& c, const OrbitSegment& orbit);

// max over the grid of limsup_rate(c, x, n).
double beta_pointwise(const Cocycle& c, const std::vector<Point>& grid, std::ptrdiff_t n);

inline constexpr std::size_t kMinEssSupSample = 100;

// max over a Lebesgue sample of the checkpoint limsup of (1/n) log ||A^n(x)||.
double ess_sup_limsup(const Cocycle& c, const std::vector<Point>& lebesgue_sample, std::ptrdiff_t n);

// Checkpoint limsup of (1/m) max_x log ||A^m(x)||. The norm is continuous
// in x, so its essential supremum against a full-support Lebesgue measure is
// its supremum; `net` adds points (e.g. periodic ones) that sharpen the
// maximum beyond what a random sample reaches.
double limsup_ess_sup(const Cocycle& c, const std::vector<Point>& lebesgue_sample, std::ptrdiff_t n,
                      const std::vector<Point>& net = {});

// Every point of every closed orbit returned by periodic_orbits; empty when
// the system does not support enumeration.
std::vector<Point> periodic_net(const System& system, int max_period, int max_denominator);

// Points drawn from a histogram: cell counts allocated by weight (largest
// remainder), points uniform inside each cell.
std::vector<Point> resample_measure(const System& system, const EmpiricalMeasure& mu, std::size_t count,
                                    std::uint64_t seed);

// log phi_n(x) for a subadditive potential.
using LogPotential = std::function<double(const Point&, std::ptrdiff_t)>;
LogPotential norm_potential(const Cocycle& c);

struct MaximizingResult {
  std::size_t index = 0;  // into the candidate list
  double chi = 0.0;
  std::vector<double> chis;  // per candidate
};

// chi(nu) for each candidate by resampling; ties go to the larger basin.
MaximizingResult maximizing_observable(const ObservableSet& candidates, const Cocycle& c, std::ptrdiff_t n,
                                       std::size_t points_per_candidate = 32, std::uint64_t seed = 0);
MaximizingResult maximizing_observable(const ObservableSet& candidates, const System& system,
                                       const LogPotential& potential, std::ptrdiff_t n,
                                       std::size_t points_per_candidate = 32, std::uint64_t seed = 0);

enum class CheckStatus { passed, failed, refused };
std::string to_string(CheckStatus s);

struct OptimizationOptions {
  std::size_t sample_size = 500;
  std::ptrdiff_t n = 10000;               // exponent horizon
  std::ptrdiff_t measure_horizon = 20000;  // empirical measure length
  double epsilon = 0.05;
  double tolerance = 0.05;
  int resolution = 0;
  std::size_t points_per_candidate = 32;
  std::ptrdiff_t gate_horizon = 64;
  std::size_t gate_points = 32;
  int net_period = 8;
  int net_denominator = 12;
  std::uint64_t seed = 0;
};

struct OptimizationReport {
  CheckStatus status = CheckStatus::refused;
  std::string reason;
  double ess_sup_limsup = 0.0;
  double sup_observable = 0.0;
  double limsup_ess_sup = 0.0;
  double sup_physical = 0.0;  // corollary check only
  bool equality_holds = false;
  bool sandwich_holds = false;
  std::size_t candidate_count = 0;
  std::size_t physical_count = 0;
  std::size_t maximizer = 0;
  DominationReport gate;
  bool gate_vacuous = false;
  OptimizationOptions options;
};

// ess sup limsup = sup over observable candidates, and both <= limsup ess
// sup, each within the tolerance. Refused unless index-1 domination holds on
// points resampled from the maximizing candidate.
OptimizationReport theorem_41_check(const Cocycle& c, const OptimizationOptions& options);

// The same chain extended by the sup over candidates classified physical
// (held-out sample of the same size). Uses the derivative cocycle. Refused
// when the gate fails or no candidate is physical.
OptimizationReport corollary_62_check(std::shared_ptr<const System> system, const OptimizationOptions& options);

}  // namespace lyapobs
