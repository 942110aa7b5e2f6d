#include "lyapobs/ergopt.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/parallel.hpp"
#include "lyapobs/rng.hpp"
#include "lyapobs/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lyapobs {

double periodic_exponent(const Cocycle& c, const OrbitSegment& orbit) {
  if (orbit.length() < 1 || !orbit.points.back().identical(orbit.start())) {
    throw std::invalid_argument("orbit segment is not closed");
  }
  const int d = c.dim();
  Matrix p = Matrix::Identity(d, d);
  double log_scale = 0.0;
  for (std::ptrdiff_t j = 0; j < orbit.length(); ++j) {
    p = c(orbit.points[static_cast<std::size_t>(j)]) * p;
    const double s = p.cwiseAbs().maxCoeff();
    if (!(s > 0.0) || !std::isfinite(s)) throw SingularMatrixError("cycle product lost rank");
    p /= s;
    log_scale += std::log(s);
  }
  double rho = std::abs(p(0, 0));
  if (d > 1) {
    Eigen::EigenSolver<Matrix> es(p, false);
    rho = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return (log_scale + std::log(rho)) / static_cast<double>(orbit.length());
}

PeriodicBeta beta_periodic(const Cocycle& c, const std::vector<OrbitSegment>& orbits) {
  if (orbits.empty()) throw std::invalid_argument("no periodic orbits given");
  const auto values = parallel_map(orbits.size(), [&](std::size_t i) { return periodic_exponent(c, orbits[i]); });
  PeriodicBeta best;
  best.orbits_examined = orbits.size();
  std::size_t arg = 0;
  std::string arg_code = orbits[0].encode();
  for (std::size_t i = 1; i < orbits.size(); ++i) {
    const double gap = values[i] - values[arg];
    if (gap > 1e-12) {
      arg = i;
      arg_code = orbits[i].encode();
    } else if (gap >= -1e-12) {
      std::string code = orbits[i].encode();
      if (code < arg_code) {
        arg = i;
        arg_code = std::move(code);
      }
    }
  }
  best.value = values[arg];
  best.orbit = orbits[arg];
  return best;
}

double beta_pointwise(const Cocycle& c, const std::vector<Point>& grid, std::ptrdiff_t n) {
  if (grid.empty()) throw std::invalid_argument("empty grid");
  const auto rates = parallel_map(grid.size(), [&](std::size_t i) { return limsup_rate(c, grid[i], n); });
  return *std::max_element(rates.begin(), rates.end());
}

double ess_sup_limsup(const Cocycle& c, const std::vector<Point>& lebesgue_sample, std::ptrdiff_t n) {
  if (lebesgue_sample.size() < kMinEssSupSample) throw std::invalid_argument("essential suprema need >= 100 sample points");
  return beta_pointwise(c, lebesgue_sample, n);
}

double limsup_ess_sup(const Cocycle& c, const std::vector<Point>& lebesgue_sample, std::ptrdiff_t n,
                      const std::vector<Point>& net) {
  if (lebesgue_sample.size() < kMinEssSupSample) throw std::invalid_argument("essential suprema need >= 100 sample points");
  std::vector<Point> points = lebesgue_sample;
  points.insert(points.end(), net.begin(), net.end());
  const auto checkpoints = limsup_checkpoints(n);
  const auto norms = parallel_map(points.size(), [&](std::size_t i) { return log_norms_at(c, points[i], checkpoints); });
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& v : norms) top = std::max(top, v[k]);
    best = std::max(best, top / static_cast<double>(checkpoints[k]));
  }
  return best;
}

std::vector<Point> periodic_net(const System& system, int max_period, int max_denominator) {
  std::vector<Point> out;
  try {
    for (const OrbitSegment& seg : periodic_orbits(system, max_period, max_denominator)) {
      for (const Point& p : seg.cycle()) out.push_back(p);
    }
  } catch (const UnsupportedError&) {
    out.clear();
  }
  return out;
}

std::vector<Point> resample_measure(const System& system, const EmpiricalMeasure& mu, std::size_t count,
                                    std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("resample count must be >= 1");
  if (mu.cells.empty()) throw std::invalid_argument("measure has no mass");
  if (mu.system != system.name()) throw std::invalid_argument("measure belongs to a different system");
  const std::size_t m = mu.cells.size();
  std::vector<std::size_t> quota(m);
  std::vector<double> remainder(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = mu.cells[i].second * static_cast<double>(count);
    quota[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - std::floor(exact);
    assigned += quota[i];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++quota[order[i % m]];
  while (assigned > count) {
    // floating excess; trim the largest quota
    auto it = std::max_element(quota.begin(), quota.end());
    --*it;
    --assigned;
  }
  std::vector<Point> out;
  out.reserve(count);
  std::uint64_t stream = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < quota[i]; ++j) {
      out.push_back(system.sample_in_cell(mu.cells[i].first, mu.resolution, seed, stream++));
    }
  }
  return out;
}

LogPotential norm_potential(const Cocycle& c) {
  return [c](const Point& x, std::ptrdiff_t n) { return product(c, x, n, 1).log_norm; };
}

MaximizingResult maximizing_observable(const ObservableSet& candidates, const System& system,
                                       const LogPotential& potential, std::ptrdiff_t n,
                                       std::size_t points_per_candidate, std::uint64_t seed) {
  if (candidates.candidates.empty()) throw std::invalid_argument("no observable candidates");
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  MaximizingResult r;
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    const auto pts = resample_measure(system, candidates.candidates[i].representative, points_per_candidate,
                                      mix64(seed + i));
    const auto logs = parallel_map(pts.size(), [&](std::size_t j) { return potential(pts[j], n); });
    r.chis.push_back(mean(logs) / static_cast<double>(n));
  }
  for (std::size_t i = 1; i < r.chis.size(); ++i) {
    if (r.chis[i] > r.chis[r.index] + 1e-12) r.index = i;
  }
  r.chi = r.chis[r.index];
  return r;
}

MaximizingResult maximizing_observable(const ObservableSet& candidates, const Cocycle& c, std::ptrdiff_t n,
                                       std::size_t points_per_candidate, std::uint64_t seed) {
  return maximizing_observable(candidates, c.base(), norm_potential(c), n, points_per_candidate, seed);
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::passed:
      return "passed";
    case CheckStatus::failed:
      return "failed";
    case CheckStatus::refused:
      return "refused";
  }
  return "unknown";
}

namespace {

struct Chain {
  std::vector<Point> sample;
  ObservableSet observables;
  MaximizingResult maximizer;
};

Chain evaluate_chain(const Cocycle& c, const OptimizationOptions& o, OptimizationReport& report) {
  const System& base = c.base();
  Chain chain;
  chain.sample = sample_initial_points(base, o.sample_size, o.seed);
  ObservableOptions oo;
  oo.resolution = o.resolution;
  oo.seed = o.seed;
  chain.observables = observable_candidates(base, chain.sample, o.measure_horizon, o.epsilon, oo);
  chain.maximizer = maximizing_observable(chain.observables, c, o.n, o.points_per_candidate, mix64(o.seed + 1));
  report.candidate_count = chain.observables.candidates.size();
  report.maximizer = chain.maximizer.index;
  report.sup_observable = chain.maximizer.chi;

  if (c.dim() == 1) {
    report.gate_vacuous = true;
  } else {
    const auto support = resample_measure(base, chain.observables.candidates[chain.maximizer.index].representative,
                                          o.gate_points, mix64(o.seed + 2));
    report.gate = domination_report(c, support, 1, o.gate_horizon);
  }

  report.ess_sup_limsup = ess_sup_limsup(c, chain.sample, o.n);
  report.limsup_ess_sup = limsup_ess_sup(c, chain.sample, o.n, periodic_net(base, o.net_period, o.net_denominator));
  const double tol = o.tolerance;
  report.equality_holds = std::abs(report.ess_sup_limsup - report.sup_observable) <= tol;
  report.sandwich_holds = report.ess_sup_limsup <= report.limsup_ess_sup + tol &&
                          report.sup_observable <= report.limsup_ess_sup + tol;
  return chain;
}

}  // namespace

OptimizationReport theorem_41_check(const Cocycle& c, const OptimizationOptions& options) {
  OptimizationReport report;
  report.options = options;
  evaluate_chain(c, options, report);
  if (!report.gate_vacuous && !report.gate.verdict) {
    report.status = CheckStatus::refused;
    report.reason = "no index-1 domination on the maximizing candidate's support";
    return report;
  }
  const bool ok = report.equality_holds && report.sandwich_holds;
  report.status = ok ? CheckStatus::passed : CheckStatus::failed;
  if (!ok) report.reason = report.equality_holds ? "sandwich inequality violated" : "ess sup limsup differs from the observable sup";
  return report;
}

OptimizationReport corollary_62_check(std::shared_ptr<const System> system, const OptimizationOptions& options) {
  const Cocycle c = derivative_cocycle(system);
  OptimizationReport report;
  report.options = options;
  Chain chain = evaluate_chain(c, options, report);
  if (!report.gate_vacuous && !report.gate.verdict) {
    report.status = CheckStatus::refused;
    report.reason = "no index-1 domination on the maximizing candidate's support";
    return report;
  }
  const auto held_out = sample_initial_points(*system, options.sample_size, mix64(options.seed + 3));
  ObservableOptions oo;
  oo.resolution = options.resolution;
  const PhysicalReport phys = classify_physical(*system, chain.observables, held_out, {}, oo);
  report.physical_count = phys.physical_count;
  if (phys.physical_count == 0) {
    report.status = CheckStatus::refused;
    report.reason = "no candidate classified physical";
    return report;
  }
  report.sup_physical = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < chain.observables.candidates.size(); ++i) {
    if (chain.observables.candidates[i].physical) {
      report.sup_physical = std::max(report.sup_physical, chain.maximizer.chis[i]);
    }
  }
  const double tol = options.tolerance;
  const bool chain_holds = report.equality_holds && std::abs(report.sup_observable - report.sup_physical) <= tol &&
                           std::abs(report.ess_sup_limsup - report.sup_physical) <= tol;
  report.status = chain_holds ? CheckStatus::passed : CheckStatus::failed;
  if (!chain_holds) report.reason = "suprema disagree beyond the tolerance";
  return report;
}

}  // namespace lyapobs
