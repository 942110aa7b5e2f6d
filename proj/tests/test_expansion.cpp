#include "lyapobs/expansion.hpp"
#include "lyapobs/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace lyapobs;

namespace {

std::shared_ptr<const System> shared(System s) { return std::make_shared<const System>(std::move(s)); }

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix unstable_line(int ambient) {
  const auto u = oracle::cat_unstable();
  Matrix f = Matrix::Zero(ambient, 1);
  f(ambient - 2, 0) = u[0];
  f(ambient - 1, 0) = u[1];
  return f;
}

ExpansionContext cat_cu() { return ExpansionContext::constant_bundle(derivative_cocycle(shared(cat_map())), unstable_line(2)); }

ExpansionContext isometric() {
  return ExpansionContext::whole_fiber(constant_cocycle(shared(circle_rotation(0.618)), scalar(-1.0)));
}

}  // namespace

TEST_CASE("exponent positivity") {
  const auto cat = shared(cat_map());
  const auto sample = sample_initial_points(*cat, 16, 1);
  const PositivityReport p = check_exponent_positivity(cat_cu(), sample, 2000);
  CHECK(p.holds);
  for (double v : p.values) CHECK(v == doctest::Approx(-oracle::cat_exponent()).epsilon(1e-9));

  const auto skew = shared(skew_product(cat_matrix()));
  const ExpansionContext ex = ExpansionContext::constant_bundle(derivative_cocycle(skew), unstable_line(3));
  const PositivityReport ps = check_exponent_positivity(ex, sample_initial_points(*skew, 8, 1), 1000);
  CHECK(ps.holds);
  for (double v : ps.values) CHECK(v == doctest::Approx(-oracle::cat_exponent()).epsilon(1e-9));

  const auto circle = shared(circle_rotation(0.618));
  const PositivityReport pi = check_exponent_positivity(isometric(), sample_initial_points(*circle, 8, 1), 500);
  CHECK_FALSE(pi.holds);
  for (double v : pi.values) CHECK(v == 0.0);
}

TEST_CASE("block averages") {
  const auto circle = shared(circle_rotation(0.618));
  const ExpansionContext two = ExpansionContext::whole_fiber(constant_cocycle(circle, scalar(2.0)));
  const Point x = Point::on_torus({0.25});
  for (std::ptrdiff_t n : {1, 7, 100}) CHECK(nue_block_average(two, x, 1, n) == doctest::Approx(-std::log(2.0)));

  const Point y = Point::on_torus({0.3, 0.6});
  CHECK(nue_block_average(cat_cu(), y, 3, 300) == doctest::Approx(-oracle::cat_exponent()).epsilon(1e-9));
  CHECK(nue_block_average(isometric(), x, 2, 50) == 0.0);
  CHECK(nue_block_average(cat_cu(), y, 1, 500) == doctest::Approx(nue_limsup_average(cat_cu(), y, 500)).epsilon(1e-10));
}

TEST_CASE("Birkhoff average of alternating one-step norms") {
  const auto shift = shared(full_shift(2));
  const ExpansionContext alt = ExpansionContext::whole_fiber(symbolic_cocycle(shift, {scalar(2.0), scalar(0.5)}));
  const Point p = Point::periodic(Symbols{0, 1});
  CHECK(std::abs(nue_limsup_average(alt, p, 1000)) < 1e-12);
  // Every block of even length telescopes to 1.
  CHECK(std::abs(nue_block_average(alt, p, 2, 500)) < 1e-12);

  const ExpansionContext id = ExpansionContext::whole_fiber(constant_cocycle(shared(identity_torus(2)), Matrix::Identity(2, 2)));
  CHECK(nue_limsup_average(id, Point::on_torus({0.1, 0.2}), 100) == 0.0);
}

TEST_CASE("tracked bundle matches the constant eigenline") {
  const ExpansionContext tracked = ExpansionContext::tracked_bundle(derivative_cocycle(shared(cat_map())), 1, 200, 4);
  const Point y = Point::on_torus({0.3, 0.6});
  const auto bs = tracked.restricted_matrices(y, 100);
  REQUIRE(bs.size() == 100);
  for (const Matrix& b : bs) CHECK(std::abs(b(0, 0)) == doctest::Approx(static_cast<double>(oracle::golden_square())).epsilon(1e-8));
  CHECK(nue_limsup_average(tracked, y, 400) == doctest::Approx(-oracle::cat_exponent()).epsilon(1e-8));

  const ExpansionContext rot = ExpansionContext::tracked_bundle(rotation_cocycle(shared(circle_rotation(0.3)), 0.8), 1, 200);
  CHECK_THROWS_AS(rot.restricted_matrices(Point::on_torus({0.1}), 10), NonConvergenceError);
  CHECK_THROWS_AS(ExpansionContext::tracked_bundle(derivative_cocycle(shared(cat_map())), 2, 200), std::invalid_argument);
  Matrix line(2, 1);
  line << 1, 0;
  CHECK_THROWS_AS(ExpansionContext::constant_bundle(derivative_cocycle(shared(cat_map())), line), InvarianceError);
}

TEST_CASE("search for lambda and K") {
  const auto cat = shared(cat_map());
  const auto sample = sample_initial_points(*cat, 100, 1);
  const ExpansionReport r = theorem_a_search(cat_cu(), sample, std::vector<Point>{}, 4, 2000);
  CHECK(r.status == CheckStatus::passed);
  CHECK(r.K == 1);
  CHECK(r.lambda == doctest::Approx(oracle::cat_exponent() / 2).epsilon(1e-6));
  CHECK(r.coverage == 1.0);
  CHECK(r.gate_vacuous);

  const auto circle = shared(circle_rotation(0.618));
  bool asked = false;
  const ExpansionReport iso = theorem_a_search(
      isometric(), sample_initial_points(*circle, 50, 1),
      [&] {
        asked = true;
        return std::vector<Point>{};
      },
      4, 1000);
  CHECK(iso.status == CheckStatus::refused);
  CHECK_FALSE(asked);
}

TEST_CASE("domination gate on rank-two bundles") {
  const auto cat = shared(cat_map());
  const auto sample = sample_initial_points(*cat, 20, 2);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 2;
  const ExpansionReport dom = theorem_a_search(ExpansionContext::whole_fiber(constant_cocycle(cat, d)), sample, sample, 3, 1000);
  CHECK_FALSE(dom.gate_vacuous);
  CHECK(dom.gate.verdict);
  CHECK(dom.status == CheckStatus::passed);
  CHECK(dom.lambda == doctest::Approx(std::log(2.0) / 2));

  // Conformal expansion: positivity holds but nothing dominates.
  Matrix conformal(2, 2);
  conformal << 0, -2, 2, 0;
  const ExpansionReport conf = theorem_a_search(ExpansionContext::whole_fiber(constant_cocycle(cat, conformal)), sample, sample, 3, 1000);
  CHECK(conf.positivity.holds);
  CHECK_FALSE(conf.gate.verdict);
  CHECK(conf.status == CheckStatus::refused);

  const ExpansionReport empty = theorem_a_search(ExpansionContext::whole_fiber(constant_cocycle(cat, d)), sample, std::vector<Point>{}, 3, 1000);
  CHECK(empty.status == CheckStatus::refused);
}

TEST_CASE("comparison hypotheses") {
  const Point y = Point::on_torus({0.3, 0.6});
  const ComparisonCheck c = tian_hypotheses_check(inverse_restricted_series(cat_cu(), y, 24), forward_restricted_series(cat_cu(), y, 24));
  CHECK(c.holds);
  CHECK(c.a_excess <= 1e-10);
  CHECK(c.comparison_excess <= 1e-10);

  const ExpansionContext whole = ExpansionContext::whole_fiber(derivative_cocycle(shared(cat_map())));
  CHECK(tian_hypotheses_check(inverse_restricted_series(whole, y, 20), forward_restricted_series(whole, y, 20)).holds);

  const ExpansionContext id = ExpansionContext::whole_fiber(constant_cocycle(shared(identity_torus(2)), Matrix::Identity(2, 2)));
  const ComparisonCheck ci = tian_hypotheses_check(inverse_restricted_series(id, y, 10), forward_restricted_series(id, y, 10));
  CHECK(ci.holds);
  CHECK(ci.a_excess == 0.0);
  CHECK(ci.b_excess == 0.0);
  CHECK(ci.comparison_excess == 0.0);
}
