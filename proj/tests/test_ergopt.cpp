#include "lyapobs/ergopt.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace lyapobs;

namespace {

std::shared_ptr<const System> shared(System s) { return std::make_shared<const System>(std::move(s)); }

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Cocycle two_symbol(std::shared_ptr<const System> shift) {
  return symbolic_cocycle(std::move(shift), {diag2(2, 1), diag2(1, 3)});
}

// Top exponent of the periodic measure on a binary cycle for diagonal
// tables: the larger of the averaged diagonal logs.
double diagonal_cycle_exponent(const Symbols& w, double a0, double a1, double b0, double b1) {
  double s0 = 0, s1 = 0;
  for (auto c : w) {
    s0 += std::log(c == 0 ? a0 : b0);
    s1 += std::log(c == 0 ? a1 : b1);
  }
  return std::max(s0, s1) / static_cast<double>(w.size());
}

}  // namespace

TEST_CASE("beta over periodic orbits") {
  const auto cat = shared(cat_map());
  Matrix a(2, 2);
  a << 1, 2, 0.5, 3;
  const double rho = std::abs(Eigen::EigenSolver<Matrix>(a).eigenvalues().cwiseAbs().maxCoeff());
  const auto orbits = periodic_orbits(*cat, 4, 4);
  CHECK(beta_periodic(constant_cocycle(cat, a), orbits).value == doctest::Approx(std::log(rho)).epsilon(1e-12));
  CHECK(beta_periodic(constant_cocycle(cat, Matrix::Identity(2, 2)), orbits).value == 0.0);

  const auto shift = shared(full_shift(2));
  const auto cycles = periodic_orbits(*shift, 6, 1);
  double best = -1;
  for (const auto& o : cycles) {
    Symbols w;
    for (std::ptrdiff_t j = 0; j < o.length(); ++j) w.push_back(static_cast<std::uint8_t>(o.points[static_cast<std::size_t>(j)].symbol(0)));
    const double chi = diagonal_cycle_exponent(w, 2, 1, 1, 3);
    CHECK(periodic_exponent(two_symbol(shift), o) == doctest::Approx(chi).epsilon(1e-12));
    best = std::max(best, chi);
  }
  const PeriodicBeta b = beta_periodic(two_symbol(shift), cycles);
  CHECK(b.value == doctest::Approx(best));
  CHECK(b.value == doctest::Approx(std::log(3.0)));
  CHECK(b.orbit.length() == 1);
  CHECK(b.orbit.start().symbol(0) == 1);
  CHECK(b.orbits_examined == cycles.size());
}

TEST_CASE("beta from the pointwise supremum") {
  const auto cat = shared(cat_map());
  Matrix a(2, 2);
  a << 2, 3, 0, 1;
  const auto grid = sample_initial_points(*cat, 4, 1);
  CHECK(beta_pointwise(constant_cocycle(cat, a), grid, 10000) == doctest::Approx(std::log(2.0)).epsilon(1e-3));
  CHECK(beta_pointwise(constant_cocycle(cat, Matrix::Identity(2, 2)), grid, 100) == 0.0);

  const auto shift = shared(full_shift(2, 2000));
  auto pts = sample_initial_points(*shift, 200, 3);
  pts.push_back(Point::periodic(Symbols{1}));
  const double bp = beta_pointwise(two_symbol(shift), pts, 2000);
  CHECK(bp >= std::log(3.0) - 0.05);
  CHECK(beta_periodic(two_symbol(shift), periodic_orbits(*shift, 6, 1)).value <= bp + 0.05);
}

TEST_CASE("essential suprema") {
  const auto cat = shared(cat_map());
  const auto sample = sample_initial_points(*cat, 100, 2);
  const Cocycle dc = derivative_cocycle(cat);
  CHECK(ess_sup_limsup(dc, sample, 1000) == doctest::Approx(oracle::cat_exponent()).epsilon(1e-2));
  CHECK(limsup_ess_sup(dc, sample, 1000) == doctest::Approx(ess_sup_limsup(dc, sample, 1000)).epsilon(1e-12));

  const Cocycle id = constant_cocycle(cat, Matrix::Identity(2, 2));
  CHECK(ess_sup_limsup(id, sample, 200) == 0.0);
  CHECK(limsup_ess_sup(id, sample, 200) == 0.0);

  // The identity on the fixed point is invisible to a Lebesgue sample.
  const Cocycle spiked(cat, 2, [](const Point& x) {
    return x.coords().norm() == 0.0 ? Matrix(Matrix::Identity(2, 2)) : diag2(2, 0.5);
  });
  CHECK(ess_sup_limsup(spiked, sample, 200) == doctest::Approx(std::log(2.0)));

  CHECK_THROWS_AS(ess_sup_limsup(dc, sample_initial_points(*cat, 99, 2), 100), std::invalid_argument);
}

TEST_CASE("the ess sup and the sup can differ") {
  // diag(2,1) / diag(4,1): Lebesgue points average log 2 and log 4, the
  // fixed point 1^inf grows at log 4.
  const auto shift = shared(full_shift(2, 4000));
  const Cocycle c = symbolic_cocycle(shift, {diag2(2, 1), diag2(4, 1)});
  const auto sample = sample_initial_points(*shift, 100, 5);
  const double inner = ess_sup_limsup(c, sample, 4000);
  const double outer = limsup_ess_sup(c, sample, 4000, periodic_net(*shift, 4, 1));
  CHECK(outer == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(inner == doctest::Approx(1.5 * std::log(2.0)).epsilon(0.03));
  CHECK(outer - inner >= 0.2);
}

TEST_CASE("scaling shifts every exponent and keeps the maximizer") {
  const auto shift = shared(full_shift(2));
  const auto cycles = periodic_orbits(*shift, 5, 1);
  const Cocycle c = two_symbol(shift);
  const Cocycle s = scaled_cocycle(c, 0.3);
  const PeriodicBeta a = beta_periodic(c, cycles);
  const PeriodicBeta b = beta_periodic(s, cycles);
  CHECK(b.value == doctest::Approx(a.value + std::log(0.3)).epsilon(1e-12));
  CHECK(a.orbit.encode() == b.orbit.encode());
}

TEST_CASE("periodic exponents approaching a fixed point") {
  // Cycles 0^k 1 converge weak* to the Dirac at 0^inf.
  const auto shift = shared(full_shift(2));
  const Cocycle c = two_symbol(shift);
  const double at_limit = periodic_exponent(c, orbit(*shift, Point::periodic(Symbols{0}), 1));
  for (int k = 20; k <= 60; k += 10) {
    Symbols w(static_cast<std::size_t>(k), 0);
    w.push_back(1);
    const double chi = periodic_exponent(c, orbit(*shift, Point::periodic(w), k + 1));
    CHECK(chi <= at_limit + 0.02);
  }
}

TEST_CASE("maximizing observable candidate") {
  const auto cat = shared(cat_map());
  const ObservableSet obs = observable_candidates(*cat, sample_initial_points(*cat, 40, 6), 5000, 0.05);
  REQUIRE(obs.candidates.size() == 1);
  const MaximizingResult r = maximizing_observable(obs, derivative_cocycle(cat), 2000);
  CHECK(r.index == 0);
  CHECK(r.chi == doctest::Approx(oracle::cat_exponent()).epsilon(1e-3));
  CHECK(maximizing_observable(obs, constant_cocycle(cat, Matrix::Identity(2, 2)), 100).chi == 0.0);

  const auto pts = resample_measure(*cat, obs.candidates[0].representative, 64, 1);
  CHECK(pts.size() == 64);
}

TEST_CASE("sandwich check on a constant diagonal cocycle") {
  OptimizationOptions o;
  o.sample_size = 100;
  o.n = 2000;
  o.measure_horizon = 5000;
  o.seed = 3;
  const OptimizationReport r = theorem_41_check(constant_cocycle(shared(cat_map()), diag2(2, 0.5)), o);
  CHECK(r.status == CheckStatus::passed);
  CHECK(r.ess_sup_limsup == doctest::Approx(std::log(2.0)));
  CHECK(r.sup_observable == doctest::Approx(std::log(2.0)));
  CHECK(r.limsup_ess_sup == doctest::Approx(std::log(2.0)));
  CHECK(r.gate.verdict);

  const OptimizationReport rot = theorem_41_check(rotation_cocycle(shared(cat_map()), 0.5), o);
  CHECK(rot.status == CheckStatus::refused);
  CHECK(to_string(rot.status) == "refused");
}
