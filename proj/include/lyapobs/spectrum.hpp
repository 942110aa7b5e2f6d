#pragma once

// Lyapunov spectra, exponents of measures, Oseledets angle diagnostics,
// perturbation gaps and the exterior-power entropy bound.

#include "lyapobs/cocycle.hpp"

#include <cstdint>
#include <vector>

namespace lyapobs {

// Horizons used to read a finite-time "limsup": 8 log-spaced integers in
// [ceil(n/8), n], ascending, ending at n.
std::vector<std::ptrdiff_t> limsup_checkpoints(std::ptrdiff_t n);

// log ||A^m(x)|| at each (ascending) m in `horizons`, one pass along the orbit.
std::vector<double> log_norms_at(const Cocycle& c, const Point& x, const std::vector<std::ptrdiff_t>& horizons);

// max over limsup_checkpoints(n) of (1/m) log ||A^m(x)||.
double limsup_rate(const Cocycle& c, const Point& x, std::ptrdiff_t n);

struct LyapunovSpectrum {
  std::vector<double> exponents;  // descending
  std::ptrdiff_t horizon = 0;
  // |chi_i(n) - chi_i(n/2)|
  std::vector<double> residuals;
  // (1/n) log |det A^n(x)|
  double log_det_rate = 0.0;

  double sum() const;
};

inline constexpr std::ptrdiff_t kMinSpectrumHorizon = 100;

// QR re-orthonormalization along the orbit; exponents are averaged logs of
// the triangular diagonals.
LyapunovSpectrum lyapunov_spectrum(const Cocycle& c, const Point& x, std::ptrdiff_t n);

// (1/n) mean over the sample of log ||A^n(x)||.
double chi_of_measure(const Cocycle& c, const std::vector<Point>& sample, std::ptrdiff_t n);
// Same against the uniform measure on a closed orbit; n must be a multiple
// of its period.
double chi_of_measure(const Cocycle& c, const OrbitSegment& periodic_orbit, std::ptrdiff_t n);

inline constexpr double kSimpleSpectrumTolerance = 0.05;

struct AngleSequence {
  std::vector<std::ptrdiff_t> checkpoints;
  // (1/j) log |sin angle(E_1, E_2 + ... + E_d)| at T^j x
  std::vector<double> values;
  LyapunovSpectrum spectrum;
};

// The fastest direction is a forward-pushed vector; its complement is the
// orthogonal complement of a vector pulled back through transposes from
// `tail` steps further along the orbit. GapTooSmallError if any spectral gap
// at x is below kSimpleSpectrumTolerance.
AngleSequence oseledets_angle_check(const Cocycle& c, const Point& x, std::ptrdiff_t n, std::ptrdiff_t tail = -1,
                                    std::uint64_t seed = 0);

struct GapReport {
  int index = 1;
  double baseline_gap = 0.0;
  double minimum_gap = 0.0;  // over baseline and all trials
  double epsilon = 0.0;
  int trials = 0;
  std::ptrdiff_t horizon = 0;
  std::vector<double> trial_gaps;
  // Lower bound for the uniform gap over the sampled neighborhood. This is
  // "no counterexample in `trials` draws", not a proof.
  double beta() const { return minimum_gap; }
};

// Mean over the sample of chi_p - chi_{p+1} for B = A (I + eps S_t), S_t a
// seeded random matrix with ||S_t|| = 1, constant per trial.
GapReport uniform_p_gap(const Cocycle& c, const std::vector<Point>& sample, int p, double epsilon, int trials,
                        std::ptrdiff_t n, std::uint64_t seed);

struct EntropyBound {
  // (1/n) log mean_x max_k ||Lambda^k Df^n_x||
  double integral = 0.0;
  // max_x (1/n) max_k log ||Lambda^k Df^n_x||
  double pointwise = 0.0;
};

EntropyBound kozlovski_bound(std::shared_ptr<const System> system, const std::vector<Point>& sample,
                             std::ptrdiff_t n);
EntropyBound kozlovski_bound(const Cocycle& c, const std::vector<Point>& sample, std::ptrdiff_t n);

}  // namespace lyapobs
