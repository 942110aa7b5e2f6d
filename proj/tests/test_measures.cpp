#include "lyapobs/measures.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace lyapobs;

namespace {

// Canonical characters of T^2 listed by brute force: first nonzero entry
// positive, by l1 norm, then lexicographically descending.
std::vector<std::array<int, 2>> torus_characters() {
  std::vector<std::array<int, 2>> ks;
  for (int a = -8; a <= 8; ++a)
    for (int b = -8; b <= 8; ++b)
      if (a > 0 || (a == 0 && b > 0)) ks.push_back({a, b});
  std::sort(ks.begin(), ks.end(), [](const auto& p, const auto& q) {
    const int np = std::abs(p[0]) + std::abs(p[1]);
    const int nq = std::abs(q[0]) + std::abs(q[1]);
    return np != nq ? np < nq : p > q;
  });
  ks.resize(32);
  return ks;
}

double delta_distance(double x1, double y1, double x2, double y2) {
  const auto ks = torus_characters();
  double total = 0.0;
  double w = 0.5;
  for (const auto& k : ks) {
    const double t1 = 2 * std::numbers::pi * (k[0] * x1 + k[1] * y1);
    const double t2 = 2 * std::numbers::pi * (k[0] * x2 + k[1] * y2);
    total += w * std::abs(std::cos(t1) - std::cos(t2));
    w /= 2;
    total += w * std::abs(std::sin(t1) - std::sin(t2));
    w /= 2;
  }
  return total;
}

// Full-shift point whose orbit alternates between blocks of 0s and 1s with
// block ends at the cluster checkpoints n 2^{j-J}.
Point switching_point(std::ptrdiff_t n, int checkpoints) {
  Symbols w(static_cast<std::size_t>(n + 2 * kSymbolSlack), 0);
  const auto hs = cluster_horizons(n, checkpoints);
  std::ptrdiff_t start = 0;
  for (std::size_t j = 0; j < hs.size(); ++j) {
    for (std::ptrdiff_t i = start; i < hs[j]; ++i) w[static_cast<std::size_t>(i + kSymbolSlack)] = j % 2;
    start = hs[j];
  }
  return Point::symbolic(std::make_shared<const Symbols>(std::move(w)), kSymbolSlack);
}

}  // namespace

TEST_CASE("empirical measures of periodic orbits") {
  const System cat = cat_map();
  const EmpiricalMeasure fixed = empirical_measure(cat, Point::on_torus({0.0, 0.0}), 50, 16);
  REQUIRE(fixed.cells.size() == 1);
  CHECK(fixed.cells[0].first == cat.cell_index(Point::on_torus({0.0, 0.0}), 16));
  CHECK(fixed.cells[0].second == 1.0);

  const System shift = full_shift(2);
  const EmpiricalMeasure two = empirical_measure(shift, Point::periodic(Symbols{0, 1}), 100, 4);
  REQUIRE(two.cells.size() == 2);
  CHECK(two.cells[0].second == 0.5);
  CHECK(two.cells[1].second == 0.5);
  CHECK(two.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cat map orbit equidistributes") {
  const System cat = cat_map();
  const std::ptrdiff_t n = 100000;
  const EmpiricalMeasure m = empirical_measure(cat, Point::on_torus({0.1234567, 0.7654321}), n, 16);
  const double p = 1.0 / 256;
  const double bound = 3 * std::sqrt(p * (1 - p) / n);
  CHECK(m.cells.size() == 256);
  std::size_t outside = 0;
  for (const auto& [cell, w] : m.cells) outside += std::abs(w - p) > bound;
  // A 3 sigma band holds cell-wise with probability 0.997; allow the
  // binomial expectation for 256 cells (about 0.7) plus slack.
  CHECK(outside <= 3);
  double sum = 0;
  for (const auto& c : m.cells) sum += c.second;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weak* distance between Dirac masses") {
  const System cat = cat_map();
  const EmpiricalMeasure a = empirical_measure(cat, Point::on_torus({0.0, 0.0}), 1);
  const EmpiricalMeasure b2 = empirical_measure(cat, Point::on_torus({0.5, 0.5}), 1);
  CHECK(weak_star_distance(a, a) == 0.0);
  const double expected = delta_distance(0.0, 0.0, 0.5, 0.5);
  CHECK(expected > 1.0);
  CHECK(weak_star_distance(a, b2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(weak_star_distance(b2, a) == weak_star_distance(a, b2));
  CHECK_THROWS_AS(weak_star_distance(a, empirical_measure(cat, Point::on_torus({0.0, 0.0}), 1, 8)), std::invalid_argument);

  for (double s : {0.1, 0.37, 0.81}) {
    const EmpiricalMeasure c = empirical_measure(cat, Point::on_torus({s, 1 - s}), 1);
    CHECK(weak_star_distance(a, c) == doctest::Approx(delta_distance(0, 0, s, 1 - s)).epsilon(1e-12));
  }
}

TEST_CASE("test family ordering") {
  const TestFamily f(cat_map());
  CHECK(f.describe(1) == "cos 2pi<1,0,x>");
  CHECK(f.describe(4) == "sin 2pi<0,1,x>");
  CHECK(f.describe(5) == "cos 2pi<2,0,x>");
  const TestFamily s(full_shift(2));
  CHECK(s.describe(1) == "[0]");
  CHECK(s.describe(3) == "[00]");
  CHECK(s.describe(7) == "[000]");
}

TEST_CASE("pushforward moves the empirical measure by at most 2/n") {
  const System cat = cat_map();
  const Point x = Point::on_torus({0.3, 0.1});
  for (std::ptrdiff_t n : {10, 100, 1000}) {
    const EmpiricalMeasure a = empirical_measure(cat, x, n, 8);
    const EmpiricalMeasure b = empirical_measure(cat, cat.forward(x), n, 8);
    CHECK(total_variation(a, b) <= 2.0 / static_cast<double>(n) + 1e-12);
  }
}

TEST_CASE("mixtures") {
  const System shift = full_shift(2);
  const EmpiricalMeasure zero = empirical_measure(shift, Point::periodic(Symbols{0}), 8, 3);
  const EmpiricalMeasure one = empirical_measure(shift, Point::periodic(Symbols{1}), 8, 3);
  const EmpiricalMeasure mix = mixture({&zero, &one}, {1.0, 3.0});
  CHECK(mix.total_mass() == doctest::Approx(1.0));
  CHECK(mix.weight(0) == doctest::Approx(0.25));
  CHECK(mix.weight(7) == doctest::Approx(0.75));
  CHECK(mix.moments[0] == doctest::Approx(0.25));
}

TEST_CASE("cluster points") {
  const System cat = cat_map();
  const ClusterSet fixed = cluster_points(cat, Point::on_torus({0.0, 0.0}), 1000, 8, 0.01);
  CHECK(fixed.clusters.size() == 1);
  CHECK(fixed.singleton());

  const ClusterSet generic = cluster_points(cat, Point::on_torus({0.1234567, 0.7654321}), 50000, 8, 0.02);
  REQUIRE(generic.singleton());
  const EmpiricalMeasure* centre = generic.limit_set().front();
  for (int k = 0; k < 8; ++k) CHECK(std::abs(centre->moments[static_cast<std::size_t>(k)]) < 0.02);

  const System shift = full_shift(2);
  const std::ptrdiff_t n = 1 << 14;
  const ClusterSet two = cluster_points(shift, switching_point(n, 8), n, 8, 0.05);
  REQUIRE(two.limit_set().size() == 2);
  double lo = 1.0;
  double hi = 0.0;
  for (const EmpiricalMeasure* m : two.limit_set()) {
    lo = std::min(lo, m->moments[0]);
    hi = std::max(hi, m->moments[0]);
  }
  CHECK(lo == doctest::Approx(1.0 / 3).epsilon(0.05));
  CHECK(hi == doctest::Approx(2.0 / 3).epsilon(0.05));
  for (std::size_t i = 0; i < two.clusters.size(); ++i)
    for (std::size_t j = i + 1; j < two.clusters.size(); ++j)
      CHECK(weak_star_distance(two.clusters[i].center, two.clusters[j].center) >= two.radius);
}

TEST_CASE("Wilson interval") {
  for (auto [k, n] : {std::pair<std::size_t, std::size_t>{0, 50}, {5, 50}, {50, 50}, {377, 500}}) {
    const Interval w = wilson_interval(k, n);
    const auto o = oracle::wilson(static_cast<double>(k), static_cast<double>(n));
    CHECK(w.lo == doctest::Approx(o[0]).epsilon(1e-12));
    CHECK(w.hi == doctest::Approx(o[1]).epsilon(1e-12));
  }
}

TEST_CASE("identity map has Dirac observables and no physical measure") {
  const System id = identity_torus(1);
  std::vector<Point> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(Point::on_torus({0.1 * i + 0.03}));
  ObservableSet obs = observable_candidates(id, pts, 200, 0.005);
  CHECK(obs.candidates.size() == 10);
  for (const auto& c : obs.candidates) CHECK(c.basin_mass == doctest::Approx(0.1));
  const PhysicalReport rep = classify_physical(id, obs, sample_initial_points(id, 200, 9));
  CHECK(rep.physical_count == 0);
  for (const auto& c : obs.candidates) CHECK_FALSE(c.physical);
}

TEST_CASE("cat map has one physical observable") {
  const System cat = cat_map();
  ObservableSet obs = observable_candidates(cat, sample_initial_points(cat, 100, 4), 20000, 0.05);
  REQUIRE(obs.candidates.size() == 1);
  CHECK(obs.candidates[0].basin_mass >= 0.99);
  CHECK(obs.coverage >= 0.99);
  const PhysicalReport rep = classify_physical(cat, obs, sample_initial_points(cat, 100, 5));
  CHECK(rep.physical_count == 1);
  CHECK(obs.candidates[0].physical);
  CHECK(rep.physical_coverage >= 0.99);
  CHECK_THROWS_AS(observable_candidates(cat, {}, 100, 0.05), std::invalid_argument);
}
