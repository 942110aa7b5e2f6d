#include "lyapobs/cli/runner.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/ergopt.hpp"
#include "lyapobs/expansion.hpp"
#include "lyapobs/measures.hpp"
#include "lyapobs/parallel.hpp"
#include "lyapobs/rng.hpp"
#include "lyapobs/spectrum.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

namespace lyapobs::cli {
namespace {

constexpr std::int64_t kMaxHorizon = 10'000'000;
constexpr std::int64_t kMaxSample = 1'000'000;

json to_json(const DominationReport& r) {
  return {{"index", r.index},
          {"n_max", r.n_max},
          {"C", r.C},
          {"tau", r.tau},
          {"r_squared", r.r_squared},
          {"worst_excess", r.worst_excess},
          {"line_within_slack", r.line_within_slack()},
          {"verdict", r.verdict},
          {"checkpoints", r.checkpoints},
          {"worst_log_ratio", r.worst_log_ratio}};
}

json to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

// Status, reason and results of one operation.
struct Outcome {
  std::string status = "passed";
  std::string reason;
  json results = json::object();
};

// Points for per-point operations: explicit `points`, else a seeded
// Lebesgue sample of `sample_size`.
std::vector<Point> sample_or_points(Params& p, const System& system, std::int64_t default_size, std::uint64_t seed) {
  const auto size = p.integer("sample_size", default_size, 1, kMaxSample);
  if (p.has("points")) return build_points(p.raw("points"), system);
  return sample_initial_points(system, static_cast<std::size_t>(size), seed);
}

Cocycle cocycle_for(const ExperimentConfig& cfg, std::shared_ptr<const System> system) {
  if (cfg.cocycle.is_null() && is_isometric_example(cfg.system)) return rotation_cocycle(system, 1.0);
  return build_cocycle(cfg.cocycle, std::move(system));
}

// Uniform reference measure: Lebesgue on the torus, the uniform Bernoulli
// measure on a shift.
EmpiricalMeasure uniform_reference(const System& system, const EmpiricalMeasure& like) {
  EmpiricalMeasure ref;
  ref.system = like.system;
  ref.kind = like.kind;
  ref.resolution = like.resolution;
  ref.samples = 0;
  ref.moments.fill(0.0);
  if (!system.is_toral()) {
    const TestFamily family(system);
    for (std::size_t k = 0; k < family.indices().size() && k < ref.moments.size(); ++k) {
      ref.moments[k] = std::pow(static_cast<double>(system.alphabet()), -static_cast<double>(family.indices()[k].size()));
    }
  }
  return ref;
}

Outcome op_lyapunov(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  const auto n = p.integer("n", 10000, kMinSpectrumHorizon, kMaxHorizon);
  const auto points = sample_or_points(p, *system, 1, cfg.seed);
  p.finish();
  Outcome o;
  const auto spectra = parallel_map(points.size(), [&](std::size_t i) { return lyapunov_spectrum(c, points[i], n); });
  json per_point = json::array();
  for (const auto& s : spectra) {
    per_point.push_back({{"exponents", s.exponents}, {"residuals", s.residuals}, {"log_det_rate", s.log_det_rate}});
  }
  o.results["n"] = n;
  o.results["exponents"] = spectra.front().exponents;
  o.results["residuals"] = spectra.front().residuals;
  o.results["log_det_rate"] = spectra.front().log_det_rate;
  o.results["points"] = std::move(per_point);
  return o;
}

Outcome op_dominate(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  DominationOptions opts;
  const int index = static_cast<int>(p.integer("index", 1, 1, c.dim() - 1));
  const auto n_max = p.integer("n_max", 64, kMinDominationHorizon, 100000);
  opts.max_tau = p.real("max_tau", opts.max_tau, 0.0, 1.0);
  opts.min_r_squared = p.real("min_r_squared", opts.min_r_squared, 0.0, 1.0);
  opts.slack = p.real("slack", opts.slack, 0.0, 10.0);
  const auto points = sample_or_points(p, *system, 32, cfg.seed);
  const bool with_gap = p.flag("gap_crosscheck", false);
  const auto gap_horizon = p.integer("gap_horizon", 2000, 1, kMaxHorizon);
  const double eps = p.real("epsilon", 0.01, 0.0, 1.0);
  const auto trials = p.integer("trials", 16, 1, 1000);
  p.finish();
  Outcome o;
  if (with_gap) {
    const auto agreement = gap_domination_crosscheck(c, points, gap_horizon, n_max, cfg.seed, eps,
                                                     static_cast<int>(trials));
    o.results = to_json(agreement.domination);
    o.results["gap"] = {{"baseline", agreement.gap.baseline_gap},
                        {"beta", agreement.gap.beta()},
                        {"epsilon", agreement.gap.epsilon},
                        {"trials", agreement.gap.trials},
                        {"horizon", agreement.gap.horizon},
                        {"positive", agreement.gap_positive}};
    o.results["agree"] = agreement.agree;
  } else {
    o.results = to_json(domination_report(c, points, index, n_max, opts));
  }
  return o;
}

Outcome op_cones(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  const json& dir = p.raw("direction");
  if (!dir.is_array() || static_cast<int>(dir.size()) != c.dim()) {
    throw ConfigError("params.direction must be a vector of the fiber dimension");
  }
  Vector v(c.dim());
  for (int i = 0; i < c.dim(); ++i) v[i] = dir[static_cast<std::size_t>(i)].get<double>();
  const double aperture = p.real("aperture", 0.3, 1e-6, 1.5);
  const double margin = p.real("margin", 0.01, 0.0, 1.0);
  const auto points = sample_or_points(p, *system, 64, cfg.seed);
  const bool with_kappa = p.flag("kappa", false);
  const auto m_max = p.integer("m_max", 16, 1, 4096);
  p.finish();
  Outcome o;
  const ConeCheck check = verify_cone_field(c, ConeField::uniform(Cone::around(v, aperture)), points, margin, cfg.seed);
  o.results = {{"pass", check.pass}, {"min_slack", check.min_slack}, {"directions_checked", check.directions_checked}};
  if (with_kappa && check.pass) {
    const KappaEstimate k = estimate_kappa(c, points, m_max, m_max);
    const KappaEstimate k2 = estimate_kappa(c, points, 2 * m_max, 2 * m_max);
    o.results["kappa"] = k.kappa;
    o.results["kappa_doubled"] = k2.kappa;
    o.results["kappa_relative_change"] = std::abs(k2.kappa - k.kappa) / k.kappa;
  }
  return o;
}

Outcome op_kappa(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  const auto m_max = p.integer("m_max", 16, 1, 4096);
  const auto n_max = p.integer("n_max", m_max, 1, 4096);
  const auto points = sample_or_points(p, *system, 16, cfg.seed);
  const double candidate_C = p.real("candidate_C", 1e6, 1.0, 1e300);
  p.finish();
  Outcome o;
  const KappaEstimate k = estimate_kappa(c, points, m_max, n_max);
  const PotentialSeries series = norm_series(c, points[k.arg_point], m_max + n_max);
  o.results = {{"kappa", k.kappa},
               {"log_kappa", k.log_kappa},
               {"success", k.success},
               {"arg_point", k.arg_point},
               {"arg_m", k.arg_m},
               {"arg_n", k.arg_n},
               {"almost_additive_at_C", almost_additivity_check(series, candidate_C)},
               {"candidate_C", candidate_C},
               {"almost_additivity_constant", almost_additivity_constant(series)}};
  return o;
}

Outcome op_empirical(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const auto n = p.integer("n", 10000, 1, kMaxHorizon);
  const int res = static_cast<int>(p.integer("resolution", 0, 0, 4096));
  const auto points = sample_or_points(p, *system, 1, cfg.seed);
  p.finish();
  Outcome o;
  const auto measures =
      parallel_map(points.size(), [&](std::size_t i) { return empirical_measure(*system, points[i], n, res); });
  const EmpiricalMeasure ref = uniform_reference(*system, measures.front());
  json table = json::array();
  for (const auto& mu : measures) {
    table.push_back({{"occupied_cells", mu.cells.size()},
                     {"distance_to_uniform", weak_star_distance(mu, ref)},
                     {"moments", std::vector<double>(mu.moments.begin(), mu.moments.begin() + 8)}});
  }
  o.results["n"] = n;
  o.results["resolution"] = measures.front().resolution;
  o.results["distance_to_uniform"] = table.front()["distance_to_uniform"];
  o.results["points"] = std::move(table);
  return o;
}

Outcome op_observables(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const auto n = p.integer("n", 20000, 16, kMaxHorizon);
  const double eps = p.real("epsilon", 0.05, 1e-6, 10.0);
  ObservableOptions oo;
  oo.checkpoints = static_cast<int>(p.integer("checkpoints", oo.checkpoints, 4, 40));
  oo.resolution = static_cast<int>(p.integer("resolution", 0, 0, 4096));
  oo.seed = cfg.seed;
  const auto sample = sample_or_points(p, *system, 500, cfg.seed);
  const bool classify = p.flag("classify", true);
  PhysicalOptions po;
  po.floor = p.real("floor", po.floor, 0.0, 1.0);
  p.finish();
  Outcome o;
  ObservableSet set = observable_candidates(*system, sample, n, eps, oo);
  json phys = nullptr;
  if (classify) {
    const auto held_out = sample_initial_points(*system, sample.size(), mix64(cfg.seed + 3));
    const PhysicalReport r = classify_physical(*system, set, held_out, po, oo);
    phys = {{"physical_count", r.physical_count},
            {"physical_coverage", r.physical_coverage},
            {"observable_coverage", r.observable_coverage},
            {"count_at_epsilon", r.count_at_epsilon},
            {"count_at_half_epsilon", r.count_at_half_epsilon},
            {"count_stable", r.count_stable}};
  }
  json table = json::array();
  for (const auto& cand : set.candidates) {
    table.push_back({{"basin_mass", cand.basin_mass},
                     {"basin_interval", to_json(cand.basin_interval)},
                     {"members", cand.members},
                     {"physical", cand.physical}});
  }
  o.results = {{"epsilon", eps},          {"horizon", n},
               {"sample_size", set.sample_size}, {"candidate_count", set.candidates.size()},
               {"coverage", set.coverage}, {"physical", phys},
               {"candidates", std::move(table)}};
  return o;
}

Outcome op_ergopt(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  const auto n = p.integer("n", 10000, 8, kMaxHorizon);
  const int max_period = static_cast<int>(p.integer("max_period", 8, 1, 24));
  const int max_den = static_cast<int>(p.integer("max_denominator", 12, 1, 4096));
  const auto sample = sample_or_points(p, *system, 200, cfg.seed);
  p.finish();
  Outcome o;
  std::vector<OrbitSegment> orbits;
  try {
    orbits = periodic_orbits(*system, max_period, max_den);
  } catch (const UnsupportedError&) {
  }
  const auto net = periodic_net(*system, max_period, max_den);
  std::vector<Point> grid = sample;
  grid.insert(grid.end(), net.begin(), net.end());
  json periodic = nullptr;
  if (!orbits.empty()) {
    const PeriodicBeta b = beta_periodic(c, orbits);
    periodic = {{"value", b.value}, {"orbit", b.orbit.encode()}, {"orbits_examined", b.orbits_examined}};
  }
  o.results = {{"n", n},
               {"beta_periodic", periodic},
               {"beta_pointwise", beta_pointwise(c, grid, n)},
               {"ess_sup_limsup", sample.size() >= kMinEssSupSample ? json(ess_sup_limsup(c, sample, n)) : json()},
               {"limsup_ess_sup", limsup_ess_sup(c, sample, n, net)}};
  return o;
}

OptimizationOptions optimization_options(const ExperimentConfig& cfg, Params& p) {
  OptimizationOptions opts;
  opts.seed = cfg.seed;
  opts.sample_size = static_cast<std::size_t>(p.integer("sample_size", 500, kMinEssSupSample, kMaxSample));
  opts.n = p.integer("n", opts.n, 8, kMaxHorizon);
  opts.measure_horizon = p.integer("measure_horizon", opts.measure_horizon, 16, kMaxHorizon);
  opts.epsilon = p.real("epsilon", opts.epsilon, 1e-6, 10.0);
  opts.tolerance = p.real("tolerance", opts.tolerance, 0.0, 10.0);
  opts.resolution = static_cast<int>(p.integer("resolution", 0, 0, 4096));
  opts.points_per_candidate = static_cast<std::size_t>(p.integer("points_per_candidate", 32, 1, 100000));
  opts.gate_horizon = p.integer("gate_horizon", opts.gate_horizon, kMinDominationHorizon, 100000);
  opts.gate_points = static_cast<std::size_t>(p.integer("gate_points", 32, 1, 100000));
  opts.net_period = static_cast<int>(p.integer("net_period", opts.net_period, 1, 24));
  opts.net_denominator = static_cast<int>(p.integer("net_denominator", opts.net_denominator, 1, 4096));
  return opts;
}

Outcome from_report(const OptimizationReport& r) {
  Outcome o;
  o.status = to_string(r.status);
  o.reason = r.reason;
  o.results = {{"ess_sup_limsup", r.ess_sup_limsup},
               {"sup_observable", r.sup_observable},
               {"limsup_ess_sup", r.limsup_ess_sup},
               {"equality_holds", r.equality_holds},
               {"sandwich_holds", r.sandwich_holds},
               {"candidate_count", r.candidate_count},
               {"maximizer", r.maximizer},
               {"gate_vacuous", r.gate_vacuous},
               {"gate", r.gate_vacuous ? json() : to_json(r.gate)},
               {"tolerance", r.options.tolerance},
               {"n", r.options.n},
               {"measure_horizon", r.options.measure_horizon},
               {"sample_size", r.options.sample_size}};
  return o;
}

Outcome op_theorem_41(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  const OptimizationOptions opts = optimization_options(cfg, p);
  p.finish();
  return from_report(theorem_41_check(c, opts));
}

Outcome op_corollary_62(const ExperimentConfig& cfg, Params& p) {
  if (!cfg.cocycle.is_null()) throw ConfigError("corollary-6-2 uses the derivative cocycle; drop the cocycle");
  const auto system = build_system(cfg.system);
  if (!system->is_toral()) throw ConfigError("corollary-6-2 needs a toral system");
  const OptimizationOptions opts = optimization_options(cfg, p);
  p.finish();
  const OptimizationReport r = corollary_62_check(system, opts);
  Outcome o = from_report(r);
  o.results["sup_physical"] = r.physical_count > 0 ? json(r.sup_physical) : json();
  o.results["physical_count"] = r.physical_count;
  return o;
}

// Support points for the domination gate of a rank >= 2 bundle: resampled
// from the candidate maximizing log ||B^-n||.
std::vector<Point> gate_support(const ExpansionContext& ctx, const System& system, const OptimizationOptions& opts) {
  const auto sample = sample_initial_points(system, opts.sample_size, mix64(opts.seed + 5));
  ObservableOptions oo;
  oo.resolution = opts.resolution;
  oo.seed = opts.seed;
  const ObservableSet set = observable_candidates(system, sample, opts.measure_horizon, opts.epsilon, oo);
  if (set.candidates.empty()) return {};
  const LogPotential potential = [&ctx](const Point& x, std::ptrdiff_t m) {
    const auto seq = ctx.restricted_matrices(x, m);
    LogAccumulator acc(ctx.rank(), ProductDirection::inverse, 1);
    for (const auto& b : seq) acc.push(b);
    return acc.log_norm();
  };
  const MaximizingResult best =
      maximizing_observable(set, system, potential, std::min<std::ptrdiff_t>(opts.n, 1000), opts.points_per_candidate,
                            opts.seed);
  return resample_measure(system, set.candidates[best.index].representative, opts.gate_points, mix64(opts.seed + 7));
}

Outcome op_theorem_a(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const ExpansionContext ctx = build_bundle(cfg.bundle, cocycle_for(cfg, system), cfg.seed);
  const auto n = p.integer("n", 10000, 8, kMaxHorizon);
  const auto K_max = p.integer("K_max", 8, 1, 1000);
  const double floor = p.real("coverage_floor", 0.99, 1e-6, 1.0);
  const auto gate_horizon = p.integer("gate_horizon", 64, kMinDominationHorizon, 100000);
  const auto sample = sample_or_points(p, *system, 500, cfg.seed);
  OptimizationOptions gate_opts;
  gate_opts.seed = cfg.seed;
  gate_opts.sample_size = static_cast<std::size_t>(p.integer("gate_sample_size", 200, 1, kMaxSample));
  gate_opts.measure_horizon = p.integer("measure_horizon", 20000, 16, kMaxHorizon);
  gate_opts.epsilon = p.real("epsilon", 0.05, 1e-6, 10.0);
  gate_opts.gate_points = static_cast<std::size_t>(p.integer("gate_points", 32, 1, 100000));
  p.finish();
  if (K_max > n) throw ConfigError("K_max must not exceed n");
  const ExpansionReport r = theorem_a_search(
      ctx, sample, [&] { return gate_support(ctx, *system, gate_opts); }, K_max, n, floor, gate_horizon);
  Outcome o;
  o.status = to_string(r.status);
  o.reason = r.reason;
  json scans = json::array();
  for (const auto& s : r.scans) {
    scans.push_back({{"K", s.K}, {"lambda", s.lambda}, {"coverage", s.coverage}, {"worst", s.worst}});
  }
  const auto& pv = r.positivity.values;
  o.results = {{"bundle", ctx.describe()},
               {"K", r.K},
               {"lambda", r.lambda},
               {"coverage", r.coverage},
               {"n", r.n},
               {"K_max", r.K_max},
               {"coverage_floor", r.coverage_floor},
               {"sample_size", r.sample_size},
               {"positivity_holds", r.positivity.holds},
               {"positivity_max", pv.empty() ? json() : json(*std::max_element(pv.begin(), pv.end()))},
               {"gate_vacuous", r.gate_vacuous},
               {"gate", r.gate_vacuous || ctx.rank() < 2 ? json() : to_json(r.gate)},
               {"scans", std::move(scans)}};
  return o;
}

Outcome op_entropy(const ExperimentConfig& cfg, Params& p) {
  const auto system = build_system(cfg.system);
  const Cocycle c = cocycle_for(cfg, system);
  const auto n = p.integer("n", 1000, 1, kMaxHorizon);
  const auto sample = sample_or_points(p, *system, 100, cfg.seed);
  p.finish();
  const EntropyBound b = kozlovski_bound(c, sample, n);
  Outcome o;
  o.results = {{"n", n}, {"integral", b.integral}, {"pointwise", b.pointwise}};
  return o;
}

Outcome dispatch(const ExperimentConfig& cfg) {
  Params p(cfg.params);
  const std::string& op = cfg.operation;
  if (op == "lyapunov") return op_lyapunov(cfg, p);
  if (op == "dominate") return op_dominate(cfg, p);
  if (op == "cones") return op_cones(cfg, p);
  if (op == "kappa") return op_kappa(cfg, p);
  if (op == "empirical") return op_empirical(cfg, p);
  if (op == "observables") return op_observables(cfg, p);
  if (op == "ergopt") return op_ergopt(cfg, p);
  if (op == "theorem-4-1") return op_theorem_41(cfg, p);
  if (op == "theorem-a") return op_theorem_a(cfg, p);
  if (op == "corollary-6-2") return op_corollary_62(cfg, p);
  if (op == "entropy") return op_entropy(cfg, p);
  throw ConfigError("unknown operation '" + op + "'");
}

// One expectation: {"min": a, "max": b}, {"value": v, "tol": t}, or a literal.
json check_expectation(const std::string& key, const json& want, const json& results) {
  json check = {{"key", key}, {"expected", want}};
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(key);
  } catch (const json::exception&) {
    throw ConfigError("expect keys other than status must be JSON pointers: '" + key + "'");
  }
  if (!results.contains(ptr)) {
    check["actual"] = nullptr;
    check["ok"] = false;
    return check;
  }
  const json& got = results.at(ptr);
  check["actual"] = got;
  bool ok = false;
  if (want.is_object()) {
    for (const auto& [k, v] : want.items()) {
      if (k != "min" && k != "max" && k != "value" && k != "tol") throw ConfigError("bad expectation field '" + k + "'");
    }
    if (!got.is_number()) {
      ok = false;
    } else {
      const double x = got.get<double>();
      ok = true;
      if (want.contains("min")) ok = ok && x >= want["min"].get<double>();
      if (want.contains("max")) ok = ok && x <= want["max"].get<double>();
      if (want.contains("value")) ok = ok && std::abs(x - want["value"].get<double>()) <= want.value("tol", 0.0);
    }
  } else {
    ok = got == want;
  }
  check["ok"] = ok;
  return check;
}

}  // namespace

json RunRecord::to_json() const {
  json j;
  j["artifact"] = "lyapobs";
  j["version"] = LYAPOBS_VERSION;
  j["config"] = config;
  j["status"] = status;
  if (!reason.empty()) j["reason"] = reason;
  j["results"] = results;
  if (!checks.empty()) j["checks"] = checks;
  j["wall_time_s"] = wall_time_s;
  return j;
}

int RunRecord::exit_code() const {
  if (status == "passed") return kExitPass;
  if (status == "failed") return kExitFail;
  if (status == "refused") return kExitRefused;
  if (status == "usage") return kExitUsage;
  return kExitError;
}

RunRecord run(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.config = echo(cfg);
  const auto start = std::chrono::steady_clock::now();
  try {
    Outcome o = dispatch(cfg);
    rec.status = o.status;
    rec.reason = o.reason;
    rec.results = std::move(o.results);
    if (rec.status != "refused") {
      for (const auto& [key, want] : cfg.expect.items()) {
        if (key == "status") continue;
        rec.checks.push_back(check_expectation(key, want, rec.results));
        if (!rec.checks.back()["ok"].get<bool>() && rec.status == "passed") {
          rec.status = "failed";
          rec.reason = "expectation on " + key + " not met";
        }
      }
    }
  } catch (const ConfigError& e) {
    rec.status = "usage";
    rec.reason = e.what();
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.reason = e.what();
  }
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

json SuiteSummary::to_json() const {
  json runs = json::array();
  for (const auto& e : entries) {
    json r = {{"file", e.file}, {"status", e.status}, {"expected", e.expected}, {"ok", e.ok}};
    if (!e.reason.empty()) r["reason"] = e.reason;
    runs.push_back(std::move(r));
  }
  return {{"artifact", "lyapobs"},
          {"version", LYAPOBS_VERSION},
          {"runs", entries.size()},
          {"passed", passed},
          {"failed", failed},
          {"refused", refused},
          {"errors", errors},
          {"unexpected", unexpected},
          {"entries", std::move(runs)}};
}

SuiteSummary run_suite(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  SuiteSummary summary;
  for (const auto& f : files) {
    SuiteEntry e;
    e.file = f.filename().string();
    e.expected = "passed";
    try {
      const ExperimentConfig cfg = load_config(f);
      if (cfg.expect.contains("status")) e.expected = cfg.expect["status"].get<std::string>();
      const RunRecord rec = run(cfg);
      e.status = rec.status;
      e.reason = rec.reason;
    } catch (const std::exception& ex) {
      e.status = "usage";
      e.reason = ex.what();
    }
    if (e.status == "passed") ++summary.passed;
    else if (e.status == "failed") ++summary.failed;
    else if (e.status == "refused") ++summary.refused;
    else ++summary.errors;
    e.ok = e.status == e.expected;
    if (!e.ok) ++summary.unexpected;
    summary.entries.push_back(std::move(e));
  }
  return summary;
}

namespace {

void write_output(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lyapunov exponents, dominated splittings and observable measures of linear cocycles"};
  app.set_version_flag("--version", std::string(LYAPOBS_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::int64_t seed = -1;
  unsigned threads = 0;
  std::string suite_dir;

  std::vector<CLI::App*> ops;
  for (const auto& name : kOperations) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " operation from a config");
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "write the run record here (default stdout)");
    sub->add_option("--seed", seed, "override the config seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", threads, "worker threads (0 = hardware)");
    ops.push_back(sub);
  }
  CLI::App* suite = app.add_subcommand("suite", "run every config in a directory");
  suite->add_option("dir", suite_dir, "directory of configs");
  suite->add_option("--config", suite_dir, "directory of configs");
  suite->add_option("--out", out_path, "write the summary here (default stdout)");
  suite->add_option("--threads", threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }
  set_thread_count(threads);

  try {
    if (suite->parsed()) {
      if (suite_dir.empty()) {
        err << "suite: a config directory is required\n";
        return kExitUsage;
      }
      const SuiteSummary s = run_suite(suite_dir);
      for (const auto& e : s.entries) {
        err << (e.ok ? "ok   " : "FAIL ") << e.file << ": " << e.status;
        if (!e.ok) err << " (expected " << e.expected << ")";
        if (!e.reason.empty() && !e.ok) err << " - " << e.reason;
        err << '\n';
      }
      err << s.entries.size() << " runs: " << s.passed << " passed, " << s.failed << " failed, " << s.refused
          << " refused, " << s.errors << " errors\n";
      write_output(s.to_json(), out_path, out);
      return s.exit_code();
    }
    std::string op;
    for (auto* sub : ops) {
      if (sub->parsed()) op = sub->get_name();
    }
    ExperimentConfig cfg = load_config(config_path);
    if (cfg.operation != op) {
      err << "config operation '" << cfg.operation << "' does not match subcommand '" << op << "'\n";
      return kExitUsage;
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    const RunRecord rec = run(cfg);
    write_output(rec.to_json(), out_path, out);
    if (rec.status != "passed") err << rec.status << ": " << rec.reason << '\n';
    return rec.exit_code();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace lyapobs::cli
