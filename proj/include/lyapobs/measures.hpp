#pragma once

// Empirical measures of orbits, a truncated weak* metric, cluster points of
// empirical measures, and observable / physical candidate extraction.

#include "lyapobs/base.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lyapobs {

// Number of test functions in the weak* metric; f_k has weight 2^-k.
inline constexpr int kTestFunctions = 64;
using Moments = std::array<double, kTestFunctions>;

// Torus: cos / sin of the characters e^{2 pi i <k, x>}, k != 0 with first
// nonzero entry positive, ordered by |k|_1 then lexicographically
// descending. Shift: indicators of the cylinders [w] on x_0 .. x_{|w|-1},
// by length then lexicographically.
class TestFamily {
 public:
  explicit TestFamily(const System& system);

  SystemKind kind() const noexcept { return kind_; }
  // Characters for the torus (each gives two test functions); words for a
  // shift.
  const std::vector<std::vector<int>>& indices() const noexcept { return indices_; }
  std::string describe(int k) const;  // 1-based index
  void evaluate(const Point& x, Moments& out) const;

 private:
  SystemKind kind_;
  int dimension_ = 0;
  int max_frequency_ = 0;
  std::vector<std::vector<int>> indices_;
};

// Occupation histogram of an orbit segment, together with the exact test
// function averages over the same points.
struct EmpiricalMeasure {
  std::string system;
  SystemKind kind = SystemKind::toral;
  int resolution = 0;
  std::ptrdiff_t samples = 0;
  // (cell index, weight), sorted by cell, weights > 0
  std::vector<std::pair<std::uint64_t, double>> cells;
  Moments moments{};

  double weight(std::uint64_t cell) const;
  double total_mass() const;
};

// 32 per torus dimension, cylinder depth 8 for shifts.
int default_resolution(const System& system);

// (1/n) sum_{j<n} delta_{T^j x} on the grid of `resolution` (0 = default).
EmpiricalMeasure empirical_measure(const System& system, const Point& x, std::ptrdiff_t n, int resolution = 0);
// Uniform measure on the distinct points of a closed orbit.
EmpiricalMeasure periodic_measure(const System& system, const OrbitSegment& cycle, int resolution = 0);

// Convex combination; weights are normalized.
EmpiricalMeasure mixture(const std::vector<const EmpiricalMeasure*>& parts, const std::vector<double>& weights);

// sum_k 2^-k |int f_k da - int f_k db|.
double weak_star_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
// sup over sets of grid cells = half the l1 distance of the histograms.
double total_variation(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

struct Cluster {
  EmpiricalMeasure center;
  std::vector<std::size_t> members;  // checkpoint indices
  // fraction of final-half checkpoints in this cluster
  double stability = 0.0;
  bool in_final_half = false;
};

struct ClusterSet {
  std::vector<std::ptrdiff_t> horizons;
  std::vector<Cluster> clusters;
  double radius = 0.0;

  // Centers of the clusters seen in the final half: the finite-time V(x).
  std::vector<const EmpiricalMeasure*> limit_set() const;
  bool singleton() const { return limit_set().size() == 1; }
  // inf over the limit set
  double distance_to(const EmpiricalMeasure& mu) const;
};

// Checkpoints n_j = ceil(n 2^{j - J}), j = 1..J.
std::vector<std::ptrdiff_t> cluster_horizons(std::ptrdiff_t n, int checkpoints);

// Empirical measures at the checkpoints, merged agglomeratively (centroid
// linkage) while two clusters are closer than `radius`.
ClusterSet cluster_points(const System& system, const Point& x, std::ptrdiff_t n, int checkpoints, double radius,
                          int resolution = 0);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// 95% Wilson score interval for successes / trials.
Interval wilson_interval(std::size_t successes, std::size_t trials);

struct ObservableCandidate {
  EmpiricalMeasure representative;
  double epsilon = 0.0;
  // fraction of the sample whose V(x) comes within epsilon
  double basin_mass = 0.0;
  Interval basin_interval;
  std::size_t members = 0;
  bool physical = false;
};

struct ObservableOptions {
  int checkpoints = 8;
  double radius = -1.0;  // clustering radius; default epsilon / 2
  int resolution = 0;
  std::uint64_t seed = 0;
};

struct ObservableSet {
  double epsilon = 0.0;
  std::ptrdiff_t horizon = 0;
  std::vector<ObservableCandidate> candidates;  // by basin mass, descending
  // fraction of the sample within epsilon of some candidate
  double coverage = 0.0;
  std::size_t sample_size = 0;
};

// Pools the limit sets of all sample points, groups them by leader
// clustering at epsilon (leaders taken in order of local density) and
// measures each group's basin on the same sample. The candidates form an
// epsilon-net of the observable measures, not an enumeration.
ObservableSet observable_candidates(const System& system, const std::vector<Point>& sample, std::ptrdiff_t n,
                                    double epsilon, const ObservableOptions& options = {});

struct PhysicalOptions {
  double floor = 0.01;
  // a basin must keep this fraction of its mass when epsilon shrinks to
  // epsilon / 4; sets whose epsilon-basins shrink with epsilon are not
  // basins of attraction
  double scale_retention = 0.5;
};

struct CandidateVerdict {
  bool physical = false;
  double mass = 0.0;       // singleton limit sets within epsilon
  double mass_fine = 0.0;  // within epsilon / 4
  Interval fine_interval;
};

struct PhysicalReport {
  std::vector<CandidateVerdict> verdicts;  // parallel to the candidates
  std::size_t physical_count = 0;
  // fractions of the held-out sample
  double physical_coverage = 0.0;
  double observable_coverage = 0.0;
  std::size_t count_at_epsilon = 0;
  std::size_t count_at_half_epsilon = 0;
  bool count_stable = false;
  std::size_t sample_size = 0;
};

// Classifies candidates against an independent Lebesgue sample. Physical
// iff the points with a singleton limit set within epsilon / 4 of the
// candidate have mass whose Wilson lower bound is >= floor, and that mass
// is at least scale_retention times the mass at epsilon. Updates the
// `physical` flags in `candidates`.
PhysicalReport classify_physical(const System& system, ObservableSet& candidates, const std::vector<Point>& held_out,
                                 const PhysicalOptions& options = {}, const ObservableOptions& cluster_options = {});

}  // namespace lyapobs
