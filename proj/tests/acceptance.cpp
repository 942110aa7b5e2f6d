// Acceptance criteria 1-10: one PASS/FAIL line per criterion. Exit status 0
// iff all pass.

#include "lyapobs/domination.hpp"
#include "lyapobs/ergopt.hpp"
#include "lyapobs/expansion.hpp"
#include "lyapobs/measures.hpp"
#include "lyapobs/spectrum.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace lyapobs;

namespace {

using Clock = std::chrono::steady_clock;

const double kCatExponent = std::log((3.0 + std::sqrt(5.0)) / 2.0);

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::shared_ptr<const System> shared(System s) { return std::make_shared<const System>(std::move(s)); }

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Unit unstable direction of [[2,1],[1,1]], embedded in the last two
// coordinates of R^d.
Matrix cat_unstable(int d) {
  const double y = (std::sqrt(5.0) - 1.0) / 2.0;
  const double n = std::sqrt(1.0 + y * y);
  Matrix f = Matrix::Zero(d, 1);
  f(d - 2, 0) = 1.0 / n;
  f(d - 1, 0) = y / n;
  return f;
}

IntMatrix second_cat() {
  IntMatrix m(2, 2);
  m << 3, 1, 2, 1;
  return m;
}

struct Line {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Line&)>& body) {
  Line line;
  const auto t0 = Clock::now();
  try {
    body(line);
  } catch (const std::exception& e) {
    line.pass = false;
    line.detail << " [exception: " << e.what() << "]";
  }
  if (!line.pass) ++failures;
  std::printf("%s  %2d  %s:%s (%.1f s)\n", line.pass ? "PASS" : "FAIL", id, title.c_str(), line.detail.str().c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

void criterion_1(Line& l) {
  const auto cat = shared(cat_map());
  const Cocycle c = derivative_cocycle(cat);
  double worst = 0.0;
  double slowest = 0.0;
  for (std::uint64_t seed : {1, 2, 3, 17, 12345}) {
    const Point x = sample_initial_points(*cat, 1, seed).front();
    const auto t0 = Clock::now();
    const LyapunovSpectrum s = lyapunov_spectrum(c, x, 10000);
    slowest = std::max(slowest, seconds_since(t0));
    worst = std::max({worst, std::abs(s.exponents[0] - kCatExponent), std::abs(s.exponents[1] + kCatExponent)});
  }
  l.detail << " max |chi - (+-0.96242)| = " << worst << " over 5 seeds, slowest run " << slowest << " s";
  l.require(worst < 1e-3, "error < 1e-3");
  l.require(slowest < 1.0, "runtime < 1 s");
}

void criterion_2(Line& l) {
  const auto id = shared(identity_torus(1));
  const auto sample = sample_initial_points(*id, 16, 1);
  const DominationReport d = domination_report(constant_cocycle(id, diag2(2, 0.5)), sample, 1, 64);
  const auto rot = shared(circle_rotation(std::sqrt(2.0) - 1.0));
  const DominationReport r = domination_report(rotation_cocycle(rot, 1.0), sample_initial_points(*rot, 16, 1), 1, 64);
  l.detail << " diag(2,1/2): verdict " << d.verdict << ", tau " << d.tau << ", C " << d.C << "; rotation: verdict "
           << r.verdict;
  l.require(d.verdict && d.tau >= 0.249 && d.tau <= 0.251 && d.C >= 0.99 && d.C <= 1.01, "diagonal fit");
  l.require(!r.verdict, "rotation not dominated");
}

void criterion_3(Line& l) {
  struct Example {
    std::string name;
    std::function<Cocycle()> make;
  };
  const std::vector<Example> catalogue = {
      {"diag(2,1/2)", [] { return constant_cocycle(shared(identity_torus(1)), diag2(2, 0.5)); }},
      {"rotation", [] { return rotation_cocycle(shared(circle_rotation(std::sqrt(2.0) - 1.0)), 1.0); }},
      {"identity T^2", [] { return derivative_cocycle(shared(identity_torus(2))); }},
      {"cat map", [] { return derivative_cocycle(shared(cat_map())); }},
      {"skew product", [] { return derivative_cocycle(shared(skew_product(cat_matrix()))); }},
      {"cat x [[3,1],[2,1]]", [] { return derivative_cocycle(shared(product(cat_map(), toral_automorphism(second_cat())))); }},
      {"diag(2,1)/diag(4,1) shift",
       [] { return symbolic_cocycle(shared(full_shift(2, 10000)), {diag2(2, 1), diag2(4, 1)}); }},
      {"alternating shift",
       [] { return symbolic_cocycle(shared(full_shift(2, 10000)), {diag2(2, 0.5), diag2(0.5, 2)}); }},
  };
  int disagreements = 0;
  for (const auto& ex : catalogue) {
    const Cocycle c = ex.make();
    const auto sample = sample_initial_points(c.base(), 8, 11);
    const auto a = gap_domination_crosscheck(c, sample, 10000, 64, 5, 0.01, 16, 0.05);
    l.detail << " " << ex.name << " (beta " << a.gap.beta() << ", dom " << a.domination.verdict << ")";
    if (!a.agree) ++disagreements;
  }
  l.detail << "; disagreements " << disagreements;
  l.require(disagreements == 0, "zero disagreements");
}

void criterion_4(Line& l) {
  struct ConeExample {
    std::string name;
    Cocycle c;
    Vector direction;
    double aperture;
  };
  Vector e1(2);
  e1 << 1, 0;
  const auto id = shared(identity_torus(1));
  std::vector<ConeExample> examples = {
      {"diag(2,1/2)", constant_cocycle(id, diag2(2, 0.5)), e1, 0.7},
      {"cat map", derivative_cocycle(shared(cat_map())), cat_unstable(2).col(0), 0.3},
      {"skew product", derivative_cocycle(shared(skew_product(cat_matrix()))), cat_unstable(3).col(0), 0.3},
  };
  for (auto& ex : examples) {
    const auto sample = sample_initial_points(ex.c.base(), 16, 3);
    const ConeCheck cc = verify_cone_field(ex.c, ConeField::uniform(Cone::around(ex.direction, ex.aperture)), sample);
    const KappaEstimate k = estimate_kappa(ex.c, sample, 16, 16);
    const KappaEstimate k2 = estimate_kappa(ex.c, sample, 32, 32);
    const double change = std::abs(k2.kappa - k.kappa) / k.kappa;
    l.detail << " " << ex.name << ": cones " << cc.pass << ", kappa " << k.kappa << " -> " << k2.kappa << ";";
    l.require(cc.pass, ex.name + " cone field invariant");
    l.require(k.kappa >= 1e-3 && k2.kappa >= 1e-3 && change <= 0.1, ex.name + " kappa >= 1e-3 and stable");
  }
  Symbols cycle(32, 1);
  for (int i = 0; i < 16; ++i) cycle[static_cast<std::size_t>(i)] = 0;
  const Cocycle alt = symbolic_cocycle(shared(full_shift(2)), {diag2(2, 0.5), diag2(0.5, 2)});
  const Point p = Point::periodic(cycle);
  const KappaEstimate ka = estimate_kappa(alt, {p}, 16, 16);
  const PotentialSeries series = norm_series(alt, p, 64);
  bool any_holds = false;
  for (double C = 1.0; C <= 1e6; C *= 10.0) any_holds = any_holds || almost_additivity_check(series, C);
  const double needed = almost_additivity_constant(series);
  l.detail << " alternating: kappa " << ka.kappa << ", smallest admissible C " << needed
           << " (4^16 = " << std::pow(4.0, 16) << ")";
  l.require(ka.kappa < 1e-8, "alternating kappa < 1e-8");
  l.require(!any_holds && needed > 1e6, "almost additivity fails for C <= 1e6");
}

void criterion_5(Line& l) {
  const std::size_t size = 500;
  const std::ptrdiff_t n = 20000;
  const double eps = 0.05;
  {
    const System cat = cat_map();
    ObservableSet set = observable_candidates(cat, sample_initial_points(cat, size, 1), n, eps);
    const PhysicalReport r = classify_physical(cat, set, sample_initial_points(cat, size, 101));
    const double mass = set.candidates.empty() ? 0.0 : set.candidates[0].basin_mass;
    l.detail << " cat: " << set.candidates.size() << " candidate(s), mass " << mass << ", physical "
             << r.physical_count << ";";
    l.require(set.candidates.size() == 1 && mass >= 0.99 && set.candidates[0].physical, "cat map single physical");
  }
  {
    const System skew = skew_product(cat_matrix());
    ObservableSet set = observable_candidates(skew, sample_initial_points(skew, size, 1), n, eps);
    const PhysicalReport r = classify_physical(skew, set, sample_initial_points(skew, size, 101));
    l.detail << " skew product: " << set.candidates.size() << " candidates, physical " << r.physical_count
             << ", coverage " << set.coverage << ";";
    l.require(set.candidates.size() >= 20 && r.physical_count == 0 && set.coverage >= 0.99, "fiber candidates");
  }
  {
    const System id = identity_torus(2);
    ObservableSet set = observable_candidates(id, sample_initial_points(id, size, 1), 1000, eps);
    const PhysicalReport r = classify_physical(id, set, sample_initial_points(id, size, 101));
    l.detail << " identity: " << set.candidates.size() << " candidates, physical " << r.physical_count;
    l.require(r.physical_count == 0, "identity has no physical candidate");
  }
}

OptimizationOptions default_options() {
  OptimizationOptions o;
  o.seed = 1;
  return o;
}

void criterion_6(Line& l) {
  const OptimizationOptions o = default_options();
  for (const auto& [name, system] : {std::pair{std::string("cat"), cat_map()},
                                     std::pair{std::string("skew product"), skew_product(cat_matrix())}}) {
    const OptimizationReport r = theorem_41_check(derivative_cocycle(shared(system)), o);
    l.detail << " " << name << ": " << r.ess_sup_limsup << " / " << r.sup_observable << " / " << r.limsup_ess_sup
             << " (" << to_string(r.status) << ");";
    l.require(std::abs(r.ess_sup_limsup - r.sup_observable) <= 0.05, name + " equality");
    l.require(r.ess_sup_limsup <= r.limsup_ess_sup + 0.05 && r.sup_observable <= r.limsup_ess_sup + 0.05,
              name + " sandwich");
  }
  OptimizationOptions g = o;
  g.n = 10000;
  g.measure_horizon = 20000;
  const Cocycle gap = symbolic_cocycle(shared(full_shift(2, 20000)), {diag2(2, 1), diag2(4, 1)});
  const OptimizationReport r = theorem_41_check(gap, g);
  const double excess = r.limsup_ess_sup - std::max(r.ess_sup_limsup, r.sup_observable);
  l.detail << " gap example: " << r.ess_sup_limsup << " / " << r.sup_observable << " / " << r.limsup_ess_sup
           << ", excess " << excess;
  l.require(excess >= 0.2, "strict gap >= 0.2");
}

void criterion_7(Line& l) {
  for (const auto& [name, system] : {std::pair{std::string("cat"), cat_map()},
                                     std::pair{std::string("skew product"), skew_product(cat_matrix())}}) {
    const auto sys = shared(system);
    const auto t0 = Clock::now();
    const ExpansionContext ctx = ExpansionContext::constant_bundle(derivative_cocycle(sys), cat_unstable(sys->dimension()));
    const ExpansionReport r = theorem_a_search(ctx, sample_initial_points(*sys, 500, 1), std::vector<Point>{}, 8, 10000);
    const double t = seconds_since(t0);
    l.detail << " " << name << ": K " << r.K << ", lambda " << r.lambda << ", coverage " << r.coverage << ", " << t
             << " s;";
    l.require(r.status == CheckStatus::passed && r.K == 1, name + " K = 1");
    l.require(std::abs(r.lambda - kCatExponent / 2) <= 0.2 * kCatExponent / 2, name + " lambda within 20%");
    l.require(r.coverage >= 0.99, name + " coverage");
    l.require(t < 30.0, name + " runtime < 30 s");
  }
}

void criterion_8(Line& l) {
  OptimizationOptions o = default_options();
  const OptimizationReport cat = corollary_62_check(shared(cat_map()), o);
  l.detail << " cat: " << cat.ess_sup_limsup << " / " << cat.sup_observable << " / " << cat.sup_physical << " ("
           << to_string(cat.status) << ");";
  l.require(cat.status == CheckStatus::passed, "cat chain");
  o.resolution = 8;
  const OptimizationReport prod = corollary_62_check(shared(product(cat_map(), toral_automorphism(second_cat()))), o);
  l.detail << " product: " << prod.ess_sup_limsup << " / " << prod.sup_observable << " / " << prod.sup_physical << " ("
           << to_string(prod.status) << ")";
  l.require(prod.status == CheckStatus::passed, "product chain");
}

void criterion_9(Line& l) {
  const auto cat = shared(cat_map());
  const EntropyBound e = kozlovski_bound(cat, sample_initial_points(*cat, 100, 1), 1000);
  const auto id = shared(identity_torus(2));
  const EntropyBound z = kozlovski_bound(id, sample_initial_points(*id, 100, 1), 1000);
  l.detail << " cat integral " << e.integral << " (pointwise " << e.pointwise << "); identity " << z.integral << ", "
           << z.pointwise;
  l.require(e.integral >= 0.94 && e.integral <= 0.99, "cat in [0.94, 0.99]");
  l.require(z.integral == 0.0 && z.pointwise == 0.0, "identity exactly 0");
}

void criterion_10(Line& l) {
  const char* suites[] = {"subadditivity", "cocycle-identity", "metric-axioms", "determinism",
                          "measures-laws", "ergopt-laws",      "expansion-laws", "domination-laws"};
  const auto t0 = Clock::now();
  for (const char* s : suites) {
    const std::string cmd = std::string(LYAPOBS_PROPERTIES_BIN) + " --test-suite=" + s + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    const bool ok = WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
    l.detail << " " << s << (ok ? " ok" : " FAILED") << ";";
    l.require(ok, std::string(s) + " passes");
  }
  const double t = seconds_since(t0);
  l.detail << " total " << t << " s";
  l.require(t < 300.0, "total < 5 min");
}

}  // namespace

int main() {
  report(1, "cat-map Lyapunov spectrum", criterion_1);
  report(2, "domination detector", criterion_2);
  report(3, "uniform gap <=> domination", criterion_3);
  report(4, "cones, kappa and almost additivity", criterion_4);
  report(5, "observable and physical candidates", criterion_5);
  report(6, "ess sup sandwich", criterion_6);
  report(7, "non-uniform expansion search", criterion_7);
  report(8, "physical / observable / ess sup chain", criterion_8);
  report(9, "exterior-power entropy bound", criterion_9);
  report(10, "property suites", criterion_10);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
