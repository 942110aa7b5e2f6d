// Randomized invariants, 1000 generated instances per suite. Each suite is
// a doctest test suite and can be run alone with --test-suite=<name>.

#include "lyapobs/domination.hpp"
#include "lyapobs/ergopt.hpp"
#include "lyapobs/expansion.hpp"
#include "lyapobs/measures.hpp"
#include "lyapobs/parallel.hpp"
#include "lyapobs/potential.hpp"
#include "lyapobs/rng.hpp"
#include "lyapobs/spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>

using namespace lyapobs;

namespace {

constexpr int kInstances = 1000;

// Generators -----------------------------------------------------------------

struct Gen {
  CounterRng rng;
  Gen(std::uint64_t suite, int instance) : rng(suite, static_cast<std::uint64_t>(instance)) {}

  int between(int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

  // Random matrix with |det| bounded away from 0 and entries of order 1.
  Matrix invertible(int d) {
    for (;;) {
      Matrix m(d, d);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
      if (std::abs(m.determinant()) > 0.1) return m;
    }
  }

  Matrix orthogonal(int d) { return orthonormalize(invertible(d)); }

  std::shared_ptr<const System> shift(std::ptrdiff_t horizon = 256) {
    return std::make_shared<const System>(full_shift(between(2, 3), horizon));
  }

  Cocycle table_cocycle(std::shared_ptr<const System> base, int d) {
    std::vector<Matrix> table;
    for (int s = 0; s < base->alphabet(); ++s) table.push_back(invertible(d));
    return symbolic_cocycle(std::move(base), std::move(table));
  }

  Point point(const System& system) { return sample_initial_points(system, 1, rng()).front(); }

  std::shared_ptr<const System> toral() {
    switch (between(0, 3)) {
      case 0: return std::make_shared<const System>(cat_map());
      case 1: return std::make_shared<const System>(skew_product(cat_matrix()));
      case 2: return std::make_shared<const System>(identity_torus(between(1, 2)));
      default: return std::make_shared<const System>(circle_rotation(uniform(0.1, 0.9)));
    }
  }
};

// Equal coordinates, or equal symbols over the whole window.
bool same_point(const Point& a, const Point& b) {
  if (a.is_torus() || b.is_torus()) return a.identical(b);
  if (a.forward_extent() != b.forward_extent() || a.backward_extent() != b.backward_extent()) return false;
  for (std::ptrdiff_t i = -a.backward_extent(); i < a.forward_extent(); ++i) {
    if (a.symbol(i) != b.symbol(i)) return false;
  }
  return true;
}

double relative_gap(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(a.norm(), 1e-300); }

}  // namespace

TEST_SUITE("subadditivity") {
  TEST_CASE("norm potentials are subadditive") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(1, i);
      const auto base = g.shift();
      const Cocycle c = g.table_cocycle(base, g.between(1, 3));
      const Point x = g.point(*base);
      const auto horizon = g.between(4, 16);
      CHECK(subadditivity_excess(norm_series(c, x, horizon)) <= 1e-8);
      CHECK(subadditivity_excess(inverse_norm_series(c, x, horizon)) <= 1e-8);
    }
  }

  TEST_CASE("products are submultiplicative across a split") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(2, i);
      const auto base = g.shift();
      const Cocycle c = g.table_cocycle(base, g.between(2, 3));
      const Point x = g.point(*base);
      const auto n = g.between(1, 60);
      const auto m = g.between(1, 60);
      const double whole = product(c, x, m + n).log_norm;
      const double split = product(c, x, n).log_norm + product(c, iterate(*base, x, n), m).log_norm;
      CHECK(whole <= split + 1e-8);
    }
  }
}

TEST_SUITE("cocycle-identity") {
  TEST_CASE("product over m + n steps factors at n") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(3, i);
      const auto base = g.shift();
      const Cocycle c = g.table_cocycle(base, g.between(2, 4));
      const Point x = g.point(*base);
      const auto n = g.between(1, 50);
      const auto m = g.between(1, 100 - static_cast<int>(n));
      const LogProduct whole = product(c, x, m + n);
      const LogProduct first = product(c, x, n);
      const LogProduct second = product(c, iterate(*base, x, n), m);
      const Matrix joined = std::exp(first.log_scale + second.log_scale - whole.log_scale) * (second.residual * first.residual);
      CHECK(relative_gap(whole.residual, joined) <= 1e-6);
    }
  }

  TEST_CASE("inverse product is the co-norm and singular values give the determinant") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(4, i);
      const auto base = g.shift(512);
      const Cocycle c = g.table_cocycle(base, g.between(2, 4));
      const Point x = g.point(*base);
      const auto n = g.between(1, 400);
      const LogProduct lp = product(c, x, n);
      const double inv = inverse_product(c, x, n).log_norm;
      CHECK(std::abs(inv + lp.log_conorm) <= 1e-8 * std::max(1.0, std::abs(inv)));
      double s = 0.0;
      for (double v : lp.log_singular_values()) s += v;
      CHECK(std::abs(s - lp.log_abs_det) <= 1e-8 * std::max(1.0, std::abs(lp.log_abs_det)));
      CHECK(exterior_power_norm(lp, c.dim()) == doctest::Approx(lp.log_abs_det).epsilon(1e-8));
    }
  }

  TEST_CASE("spectrum sums to the determinant rate") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(5, i);
      const auto base = g.shift(256);
      const Cocycle c = g.table_cocycle(base, g.between(2, 3));
      const LyapunovSpectrum s = lyapunov_spectrum(c, g.point(*base), 200);
      CHECK(std::abs(s.sum() - s.log_det_rate) <= 1e-6);
      for (std::size_t k = 1; k < s.exponents.size(); ++k) CHECK(s.exponents[k - 1] >= s.exponents[k]);
    }
  }
}

TEST_SUITE("metric-axioms") {
  TEST_CASE("weak* distance is a metric on random empirical measures") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(6, i);
      const auto sys = g.toral();
      const int res = g.between(2, 8);
      EmpiricalMeasure m[3];
      for (auto& mu : m) mu = empirical_measure(*sys, g.point(*sys), g.between(1, 40), res);
      const double ab = weak_star_distance(m[0], m[1]);
      const double bc = weak_star_distance(m[1], m[2]);
      const double ac = weak_star_distance(m[0], m[2]);
      CHECK(ab >= 0.0);
      CHECK(weak_star_distance(m[0], m[0]) == 0.0);
      CHECK(ab == weak_star_distance(m[1], m[0]));
      CHECK(ac <= ab + bc + 1e-12);
    }
  }

  TEST_CASE("base metrics") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(7, i);
      const auto sys = i % 2 ? g.toral() : g.shift();
      const Point a = g.point(*sys), b = g.point(*sys), c = g.point(*sys);
      CHECK(sys->distance(a, a) == 0.0);
      CHECK(sys->distance(a, b) == sys->distance(b, a));
      CHECK(sys->distance(a, c) <= sys->distance(a, b) + sys->distance(b, c) + 1e-12);
      CHECK(sys->distance(a, b) >= 0.0);
    }
  }
}

TEST_SUITE("determinism") {
  TEST_CASE("seeded samples and results repeat bit for bit") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(8, i);
      const auto sys = i % 2 ? g.toral() : g.shift();
      const std::uint64_t seed = g.rng();
      const auto a = sample_initial_points(*sys, 8, seed);
      const auto b = sample_initial_points(*sys, 8, seed);
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(same_point(a[k], b[k]));
      // Point k depends only on (seed, k).
      CHECK(same_point(sample_initial_points(*sys, 3, seed)[2], a[2]));
      CounterRng r1(seed, 3), r2(seed, 3);
      CHECK(r1() == r2());
    }
  }

  TEST_CASE("parallel reductions do not depend on the worker count") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(9, i);
      const auto base = g.shift();
      const Cocycle c = g.table_cocycle(base, 2);
      const auto sample = sample_initial_points(*base, 6, g.rng());
      set_thread_count(1);
      const double one = chi_of_measure(c, sample, 30);
      set_thread_count(3);
      const double three = chi_of_measure(c, sample, 30);
      CHECK(one == three);
    }
    set_thread_count(0);
  }
}

TEST_SUITE("measures-laws") {
  TEST_CASE("empirical measures are probability vectors and move little under T") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(10, i);
      const auto sys = i % 2 ? g.toral() : g.shift();
      const Point x = g.point(*sys);
      const auto n = g.between(1, 150);
      const int res = g.between(2, 6);
      const EmpiricalMeasure a = empirical_measure(*sys, x, n, res);
      const EmpiricalMeasure b = empirical_measure(*sys, sys->forward(x), n, res);
      CHECK(std::abs(a.total_mass() - 1.0) <= 1e-12);
      for (const auto& cell : a.cells) CHECK(cell.second > 0.0);
      CHECK(total_variation(a, b) <= 2.0 / static_cast<double>(n) + 1e-12);
    }
  }

  TEST_CASE("mixtures are affine in the moments") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(11, i);
      const auto sys = g.toral();
      const EmpiricalMeasure a = empirical_measure(*sys, g.point(*sys), g.between(1, 30), 4);
      const EmpiricalMeasure b = empirical_measure(*sys, g.point(*sys), g.between(1, 30), 4);
      const double w = g.uniform(0.0, 1.0);
      const EmpiricalMeasure m = mixture({&a, &b}, {w, 1 - w});
      CHECK(std::abs(m.total_mass() - 1.0) <= 1e-12);
      for (int k = 0; k < kTestFunctions; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        CHECK(std::abs(m.moments[kk] - (w * a.moments[kk] + (1 - w) * b.moments[kk])) <= 1e-12);
      }
    }
  }

  TEST_CASE("chi over a union of samples is the weighted mean") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(12, i);
      const auto base = g.shift();
      const Cocycle c = g.table_cocycle(base, 2);
      const auto s1 = sample_initial_points(*base, static_cast<std::size_t>(g.between(1, 5)), g.rng());
      const auto s2 = sample_initial_points(*base, static_cast<std::size_t>(g.between(1, 5)), g.rng());
      auto both = s1;
      both.insert(both.end(), s2.begin(), s2.end());
      const double n1 = static_cast<double>(s1.size()), n2 = static_cast<double>(s2.size());
      const double mixed = (n1 * chi_of_measure(c, s1, 20) + n2 * chi_of_measure(c, s2, 20)) / (n1 + n2);
      CHECK(std::abs(chi_of_measure(c, both, 20) - mixed) <= 1e-12);
    }
  }
}

TEST_SUITE("ergopt-laws") {
  TEST_CASE("periodic beta is below the pointwise sup") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(13, i);
      const auto base = std::make_shared<const System>(full_shift(2, 256));
      const Cocycle c = g.table_cocycle(base, 2);
      const auto orbits = periodic_orbits(*base, 4, 1);
      auto grid = sample_initial_points(*base, 4, g.rng());
      const auto net = periodic_net(*base, 4, 1);
      grid.insert(grid.end(), net.begin(), net.end());
      CHECK(beta_periodic(c, orbits).value <= beta_pointwise(c, grid, 240) + 0.05);
    }
  }

  TEST_CASE("scaling shifts exponents and keeps the maximizing orbit") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(14, i);
      const auto base = std::make_shared<const System>(full_shift(2));
      const Cocycle c = g.table_cocycle(base, 2);
      const double factor = g.uniform(0.1, 10.0);
      const auto orbits = periodic_orbits(*base, 4, 1);
      const PeriodicBeta a = beta_periodic(c, orbits);
      const PeriodicBeta b = beta_periodic(scaled_cocycle(c, factor), orbits);
      CHECK(b.value == doctest::Approx(a.value + std::log(factor)).epsilon(1e-10));
      CHECK(a.orbit.encode() == b.orbit.encode());
    }
  }
}

TEST_SUITE("expansion-laws") {
  TEST_CASE("single blocks are the Birkhoff average and the sign link holds") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(15, i);
      const auto base = g.shift();
      const ExpansionContext ctx = ExpansionContext::whole_fiber(g.table_cocycle(base, g.between(1, 3)));
      const Point x = g.point(*base);
      const auto n = g.between(8, 200);
      const double birkhoff = nue_limsup_average(ctx, x, n);
      CHECK(std::abs(nue_block_average(ctx, x, 1, n) - birkhoff) <= 1e-10);
      const PositivityReport p = check_exponent_positivity(ctx, {x}, n);
      CHECK(p.values[0] <= birkhoff + 0.02);
    }
  }

  TEST_CASE("comparison hypotheses hold for restricted cocycles") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(16, i);
      const auto base = g.shift();
      const ExpansionContext ctx = ExpansionContext::whole_fiber(g.table_cocycle(base, g.between(1, 3)));
      const Point x = g.point(*base);
      const auto horizon = g.between(2, 12);
      CHECK(tian_hypotheses_check(inverse_restricted_series(ctx, x, horizon), forward_restricted_series(ctx, x, horizon)).holds);
    }
  }
}

TEST_SUITE("domination-laws") {
  TEST_CASE("orthogonal conjugation leaves the fit unchanged") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(17, i);
      const auto base = g.shift();
      const int d = g.between(2, 3);
      const Cocycle c = g.table_cocycle(base, d);
      const auto sample = sample_initial_points(*base, 3, g.rng());
      const int index = g.between(1, d - 1);
      const DominationReport a = domination_report(c, sample, index, 32);
      const DominationReport b = domination_report(conjugated_cocycle(c, g.orthogonal(d)), sample, index, 32);
      CHECK(std::abs(a.tau - b.tau) <= 1e-6);
      CHECK(a.verdict == b.verdict);
    }
  }

  TEST_CASE("the fitted constant covers every checkpoint") {
    for (int i = 0; i < kInstances; ++i) {
      Gen g(18, i);
      const auto base = g.shift();
      const Cocycle c = g.table_cocycle(base, 2);
      const DominationReport r = domination_report(c, sample_initial_points(*base, 3, g.rng()), 1, 32);
      for (std::size_t k = 0; k < r.checkpoints.size(); ++k) {
        const double bound = std::log(r.C) + static_cast<double>(r.checkpoints[k]) * std::log(r.tau);
        CHECK(r.worst_log_ratio[k] <= bound + 1e-9);
      }
      CHECK(std::log(r.C) >= r.worst_log_ratio.front() - std::log(r.tau) - 1e-9);
    }
  }
}
