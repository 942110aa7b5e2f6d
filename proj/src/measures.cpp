#include "lyapobs/measures.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace lyapobs {
namespace {

void characters_with_norm(int dim, int remaining, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  const auto pos = static_cast<int>(cur.size());
  if (pos == dim) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int v = -remaining; v <= remaining; ++v) {
    cur.push_back(v);
    characters_with_norm(dim, remaining - std::abs(v), cur, out);
    cur.pop_back();
  }
}

bool canonical_sign(const std::vector<int>& k) {
  for (int v : k) {
    if (v != 0) return v > 0;
  }
  return false;
}

// Running occupation counts and test-function sums along one orbit.
class OrbitTally {
 public:
  OrbitTally(const System& system, const TestFamily& family, int resolution)
      : system_(system), family_(family), resolution_(resolution) {
    sums_.fill(0.0);
  }

  void add(const Point& y) {
    ++counts_[system_.cell_index(y, resolution_)];
    family_.evaluate(y, scratch_);
    for (int k = 0; k < kTestFunctions; ++k) sums_[static_cast<std::size_t>(k)] += scratch_[static_cast<std::size_t>(k)];
    ++n_;
  }

  EmpiricalMeasure snapshot() const {
    EmpiricalMeasure m;
    m.system = system_.name();
    m.kind = system_.kind();
    m.resolution = resolution_;
    m.samples = n_;
    m.cells.reserve(counts_.size());
    const auto n = static_cast<double>(n_);
    for (const auto& [cell, count] : counts_) m.cells.emplace_back(cell, static_cast<double>(count) / n);
    std::sort(m.cells.begin(), m.cells.end());
    for (int k = 0; k < kTestFunctions; ++k) m.moments[static_cast<std::size_t>(k)] = sums_[static_cast<std::size_t>(k)] / n;
    return m;
  }

 private:
  const System& system_;
  const TestFamily& family_;
  int resolution_;
  std::unordered_map<std::uint64_t, std::size_t> counts_;
  Moments sums_{};
  Moments scratch_{};
  std::ptrdiff_t n_ = 0;
};

void check_orbit_horizon(const System& system, const Point& x, std::ptrdiff_t n, int resolution) {
  system.check_point(x);
  if (x.is_symbolic() && x.forward_extent() < n + std::max(resolution, 8)) {
    throw HorizonError("symbolic window too short for an empirical measure of length " + std::to_string(n));
  }
}

void check_compatible(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.system != b.system || a.kind != b.kind) throw std::invalid_argument("measures live on different systems");
  if (a.resolution != b.resolution) throw std::invalid_argument("measures have different resolutions");
}

int resolve_resolution(const System& system, int resolution) {
  if (resolution < 0) throw std::invalid_argument("resolution must be positive");
  const int r = resolution == 0 ? default_resolution(system) : resolution;
  system.cell_count(r);  // validates the grid size
  return r;
}

}  // namespace

// --- test functions --------------------------------------------------------

TestFamily::TestFamily(const System& system) : kind_(system.kind()) {
  if (system.is_toral()) {
    dimension_ = system.dimension();
    constexpr std::size_t wanted = kTestFunctions / 2;
    for (int l1 = 1; indices_.size() < wanted; ++l1) {
      std::vector<std::vector<int>> level;
      std::vector<int> cur;
      characters_with_norm(dimension_, l1, cur, level);
      level.erase(std::remove_if(level.begin(), level.end(), [](const auto& k) { return !canonical_sign(k); }), level.end());
      std::sort(level.begin(), level.end(), std::greater<>());
      for (auto& k : level) {
        if (indices_.size() == wanted) break;
        for (int v : k) max_frequency_ = std::max(max_frequency_, std::abs(v));
        indices_.push_back(std::move(k));
      }
    }
  } else {
    dimension_ = system.alphabet();
    for (int len = 1; static_cast<int>(indices_.size()) < kTestFunctions; ++len) {
      std::vector<int> word(static_cast<std::size_t>(len), 0);
      while (static_cast<int>(indices_.size()) < kTestFunctions) {
        indices_.push_back(word);
        int i = len - 1;
        while (i >= 0 && word[static_cast<std::size_t>(i)] == dimension_ - 1) word[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
        ++word[static_cast<std::size_t>(i)];
      }
      max_frequency_ = len;
    }
  }
}

std::string TestFamily::describe(int k) const {
  if (k < 1 || k > kTestFunctions) throw std::out_of_range("test function index out of range");
  std::string s;
  if (kind_ == SystemKind::toral) {
    const auto& ch = indices_[static_cast<std::size_t>((k - 1) / 2)];
    s = (k % 2 == 1 ? "cos 2pi<" : "sin 2pi<");
    for (std::size_t i = 0; i < ch.size(); ++i) s += (i ? "," : "") + std::to_string(ch[i]);
    return s + ",x>";
  }
  s = "[";
  for (int v : indices_[static_cast<std::size_t>(k - 1)]) s += std::to_string(v);
  return s + "]";
}

void TestFamily::evaluate(const Point& x, Moments& out) const {
  if (kind_ == SystemKind::toral) {
    const Coords& c = x.coords();
    const auto stride = static_cast<std::size_t>(max_frequency_) + 1;
    // Plain real arithmetic: std::complex multiplication goes through the
    // NaN-safe library routine, which dominates the cost here.
    std::array<double, kMaxTorusDim * 40> re;
    std::array<double, kMaxTorusDim * 40> im;
    for (int j = 0; j < dimension_; ++j) {
      const double angle = 2.0 * std::numbers::pi * c[j];
      const double zr = std::cos(angle);
      const double zi = std::sin(angle);
      double pr = 1.0;
      double pi = 0.0;
      for (std::size_t m = 0; m < stride; ++m) {
        re[static_cast<std::size_t>(j) * stride + m] = pr;
        im[static_cast<std::size_t>(j) * stride + m] = pi;
        const double t = pr * zr - pi * zi;
        pi = pr * zi + pi * zr;
        pr = t;
      }
    }
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      double vr = 1.0;
      double vi = 0.0;
      const auto& k = indices_[i];
      for (int j = 0; j < dimension_; ++j) {
        const int kj = k[static_cast<std::size_t>(j)];
        if (kj == 0) continue;
        const std::size_t at = static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(std::abs(kj));
        const double pr = re[at];
        const double pi = kj > 0 ? im[at] : -im[at];
        const double t = vr * pr - vi * pi;
        vi = vr * pi + vi * pr;
        vr = t;
      }
      out[2 * i] = vr;
      out[2 * i + 1] = vi;
    }
    return;
  }
  std::array<int, kTestFunctions> prefix{};
  for (int i = 0; i < max_frequency_; ++i) prefix[static_cast<std::size_t>(i)] = x.symbol(i);
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const auto& w = indices_[i];
    bool match = true;
    for (std::size_t p = 0; p < w.size() && match; ++p) match = prefix[p] == w[p];
    out[i] = match ? 1.0 : 0.0;
  }
}

// --- empirical measures ----------------------------------------------------

double EmpiricalMeasure::weight(std::uint64_t cell) const {
  const auto it = std::lower_bound(cells.begin(), cells.end(), std::pair<std::uint64_t, double>{cell, -1.0});
  return it != cells.end() && it->first == cell ? it->second : 0.0;
}

double EmpiricalMeasure::total_mass() const {
  std::vector<double> w;
  w.reserve(cells.size());
  for (const auto& [cell, weight] : cells) w.push_back(weight);
  return pairwise_sum(w);
}

int default_resolution(const System& system) { return system.is_toral() ? 32 : 8; }

EmpiricalMeasure empirical_measure(const System& system, const Point& x, std::ptrdiff_t n, int resolution) {
  if (n < 1) throw std::invalid_argument("empirical measure needs n >= 1");
  const int r = resolve_resolution(system, resolution);
  check_orbit_horizon(system, x, n, r);
  const TestFamily family(system);
  OrbitTally tally(system, family, r);
  Point y = x;
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    tally.add(y);
    if (j + 1 < n) y = system.forward(y);
  }
  return tally.snapshot();
}

EmpiricalMeasure periodic_measure(const System& system, const OrbitSegment& cycle, int resolution) {
  if (cycle.length() < 1 || !cycle.points.back().identical(cycle.start())) {
    throw std::invalid_argument("orbit segment is not closed");
  }
  const int r = resolve_resolution(system, resolution);
  const TestFamily family(system);
  OrbitTally tally(system, family, r);
  for (const Point& p : cycle.cycle()) tally.add(p);
  return tally.snapshot();
}

EmpiricalMeasure mixture(const std::vector<const EmpiricalMeasure*>& parts, const std::vector<double>& weights) {
  if (parts.empty() || parts.size() != weights.size()) throw std::invalid_argument("mixture needs one weight per part");
  const double total = pairwise_sum(weights);
  if (!(total > 0.0)) throw std::invalid_argument("mixture weights must have positive sum");
  EmpiricalMeasure m;
  m.system = parts.front()->system;
  m.kind = parts.front()->kind;
  m.resolution = parts.front()->resolution;
  std::unordered_map<std::uint64_t, double> cells;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    check_compatible(*parts.front(), *parts[i]);
    if (weights[i] < 0.0) throw std::invalid_argument("mixture weights must be nonnegative");
    const double w = weights[i] / total;
    m.samples += parts[i]->samples;
    for (const auto& [cell, weight] : parts[i]->cells) cells[cell] += w * weight;
    for (int k = 0; k < kTestFunctions; ++k) m.moments[static_cast<std::size_t>(k)] += w * parts[i]->moments[static_cast<std::size_t>(k)];
  }
  for (const auto& [cell, weight] : cells) {
    if (weight > 0.0) m.cells.emplace_back(cell, weight);
  }
  std::sort(m.cells.begin(), m.cells.end());
  return m;
}

double weak_star_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  check_compatible(a, b);
  double d = 0.0;
  for (int k = 0; k < kTestFunctions; ++k) {
    d += std::ldexp(std::abs(a.moments[static_cast<std::size_t>(k)] - b.moments[static_cast<std::size_t>(k)]), -(k + 1));
  }
  return d;
}

double total_variation(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  check_compatible(a, b);
  std::vector<double> diffs;
  auto ia = a.cells.begin();
  auto ib = b.cells.begin();
  while (ia != a.cells.end() || ib != b.cells.end()) {
    if (ib == b.cells.end() || (ia != a.cells.end() && ia->first < ib->first)) {
      diffs.push_back(ia++->second);
    } else if (ia == a.cells.end() || ib->first < ia->first) {
      diffs.push_back(ib++->second);
    } else {
      diffs.push_back(std::abs(ia++->second - ib++->second));
    }
  }
  return 0.5 * pairwise_sum(diffs);
}

// --- cluster points --------------------------------------------------------

std::vector<const EmpiricalMeasure*> ClusterSet::limit_set() const {
  std::vector<const EmpiricalMeasure*> out;
  for (const Cluster& c : clusters) {
    if (c.in_final_half) out.push_back(&c.center);
  }
  return out;
}

double ClusterSet::distance_to(const EmpiricalMeasure& mu) const {
  double best = std::numeric_limits<double>::infinity();
  for (const EmpiricalMeasure* m : limit_set()) best = std::min(best, weak_star_distance(*m, mu));
  return best;
}

std::vector<std::ptrdiff_t> cluster_horizons(std::ptrdiff_t n, int checkpoints) {
  if (checkpoints < 4 || checkpoints > 40) throw std::invalid_argument("checkpoint count must be in [4, 40]");
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  std::vector<std::ptrdiff_t> out;
  for (int j = 1; j <= checkpoints; ++j) {
    const std::ptrdiff_t div = std::ptrdiff_t{1} << (checkpoints - j);
    out.push_back((n + div - 1) / div);
  }
  return out;
}

ClusterSet cluster_points(const System& system, const Point& x, std::ptrdiff_t n, int checkpoints, double radius,
                          int resolution) {
  if (!(radius > 0.0)) throw std::invalid_argument("clustering radius must be positive");
  const int r = resolve_resolution(system, resolution);
  check_orbit_horizon(system, x, n, r);
  ClusterSet set;
  set.radius = radius;
  set.horizons = cluster_horizons(n, checkpoints);

  const TestFamily family(system);
  OrbitTally tally(system, family, r);
  std::vector<EmpiricalMeasure> snaps;
  Point y = x;
  std::size_t next = 0;
  for (std::ptrdiff_t j = 1; j <= n; ++j) {
    tally.add(y);
    while (next < set.horizons.size() && set.horizons[next] == j) {
      snaps.push_back(tally.snapshot());
      ++next;
    }
    if (j < n) y = system.forward(y);
  }

  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < snaps.size(); ++i) clusters.push_back({snaps[i], {i}, 0.0, false});
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = weak_star_distance(clusters[i].center, clusters[j].center);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (best >= radius) break;
    Cluster& a = clusters[bi];
    Cluster& b = clusters[bj];
    a.center = mixture({&a.center, &b.center},
                       {static_cast<double>(a.members.size()), static_cast<double>(b.members.size())});
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    std::sort(a.members.begin(), a.members.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  const std::size_t first_final = snaps.size() - snaps.size() / 2;
  const auto final_count = static_cast<double>(snaps.size() - first_final);
  for (Cluster& c : clusters) {
    const auto in_final = std::count_if(c.members.begin(), c.members.end(), [&](std::size_t m) { return m >= first_final; });
    c.in_final_half = in_final > 0;
    c.stability = static_cast<double>(in_final) / final_count;
  }
  set.clusters = std::move(clusters);
  return set;
}

Interval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) throw std::invalid_argument("no trials");
  constexpr double z = 1.959963984540054;
  const auto n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// --- observable candidates -------------------------------------------------

namespace {

struct LimitSets {
  std::vector<std::vector<EmpiricalMeasure>> per_point;
  std::vector<bool> singleton;
};

LimitSets compute_limit_sets(const System& system, const std::vector<Point>& sample, std::ptrdiff_t n, double epsilon,
                             const ObservableOptions& options) {
  const double radius = options.radius > 0.0 ? options.radius : epsilon / 2.0;
  if (!(epsilon > radius)) throw std::invalid_argument("epsilon must exceed the clustering radius");
  auto sets = parallel_map(sample.size(), [&](std::size_t i) {
    const ClusterSet cs = cluster_points(system, sample[i], n, options.checkpoints, radius, options.resolution);
    std::vector<EmpiricalMeasure> out;
    for (const EmpiricalMeasure* m : cs.limit_set()) out.push_back(*m);
    return out;
  });
  LimitSets ls;
  for (auto& s : sets) {
    ls.singleton.push_back(s.size() == 1);
    ls.per_point.push_back(std::move(s));
  }
  return ls;
}

double set_distance(const std::vector<EmpiricalMeasure>& v, const EmpiricalMeasure& mu) {
  double best = std::numeric_limits<double>::infinity();
  for (const EmpiricalMeasure& m : v) best = std::min(best, weak_star_distance(m, mu));
  return best;
}

// Leader clustering; leaders are taken in order of decreasing local density
// (number of other measures within radius / 2). Returns member lists, the
// leader first.
std::vector<std::vector<std::size_t>> leader_groups(const std::vector<const EmpiricalMeasure*>& reps, double radius) {
  const std::size_t m = reps.size();
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      dist[i * m + j] = dist[j * m + i] = weak_star_distance(*reps[i], *reps[j]);
    }
  }
  std::vector<std::size_t> density(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) density[i] += (i != j && dist[i * m + j] < radius / 2.0) ? 1 : 0;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return density[a] > density[b]; });

  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t idx : order) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_group = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double d = dist[idx * m + groups[g].front()];
      if (d < best) {
        best = d;
        best_group = g;
      }
    }
    if (best < radius) {
      groups[best_group].push_back(idx);
    } else {
      groups.push_back({idx});
    }
  }
  return groups;
}

}  // namespace

ObservableSet observable_candidates(const System& system, const std::vector<Point>& sample, std::ptrdiff_t n,
                                    double epsilon, const ObservableOptions& options) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const LimitSets ls = compute_limit_sets(system, sample, n, epsilon, options);

  std::vector<const EmpiricalMeasure*> reps;
  for (const auto& v : ls.per_point) {
    for (const auto& m : v) reps.push_back(&m);
  }
  const auto groups = leader_groups(reps, epsilon);

  ObservableSet out;
  out.epsilon = epsilon;
  out.horizon = n;
  out.sample_size = sample.size();
  for (const auto& g : groups) {
    std::vector<const EmpiricalMeasure*> parts;
    for (std::size_t i : g) parts.push_back(reps[i]);
    EmpiricalMeasure centroid = mixture(parts, std::vector<double>(parts.size(), 1.0));
    bool centroid_covers = true;
    for (const EmpiricalMeasure* p : parts) centroid_covers = centroid_covers && weak_star_distance(*p, centroid) < epsilon;
    ObservableCandidate c;
    c.representative = centroid_covers ? std::move(centroid) : *reps[g.front()];
    c.epsilon = epsilon;
    c.members = g.size();
    out.candidates.push_back(std::move(c));
  }

  std::vector<double> nearest(sample.size(), std::numeric_limits<double>::infinity());
  for (ObservableCandidate& c : out.candidates) {
    const auto d = parallel_map(sample.size(), [&](std::size_t i) { return set_distance(ls.per_point[i], c.representative); });
    std::size_t hits = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] < epsilon) ++hits;
      nearest[i] = std::min(nearest[i], d[i]);
    }
    c.basin_mass = static_cast<double>(hits) / static_cast<double>(sample.size());
    c.basin_interval = wilson_interval(hits, sample.size());
  }
  out.coverage = static_cast<double>(std::count_if(nearest.begin(), nearest.end(), [&](double d) { return d < epsilon; })) /
                 static_cast<double>(sample.size());
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const ObservableCandidate& a, const ObservableCandidate& b) { return a.basin_mass > b.basin_mass; });
  return out;
}

PhysicalReport classify_physical(const System& system, ObservableSet& candidates, const std::vector<Point>& held_out,
                                 const PhysicalOptions& options, const ObservableOptions& cluster_options) {
  if (held_out.empty()) throw std::invalid_argument("empty held-out sample");
  const double eps = candidates.epsilon;
  const LimitSets ls = compute_limit_sets(system, held_out, candidates.horizon, eps, cluster_options);
  const auto total = held_out.size();

  PhysicalReport report;
  report.sample_size = total;
  std::vector<bool> physical_hit(total, false);
  std::vector<bool> observable_hit(total, false);
  for (ObservableCandidate& c : candidates.candidates) {
    const auto d = parallel_map(total, [&](std::size_t i) { return set_distance(ls.per_point[i], c.representative); });
    std::size_t coarse = 0;
    std::size_t fine = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (d[i] < eps) observable_hit[i] = true;
      if (!ls.singleton[i]) continue;
      if (d[i] < eps) ++coarse;
      if (d[i] < eps / 4.0) ++fine;
    }
    CandidateVerdict v;
    v.mass = static_cast<double>(coarse) / static_cast<double>(total);
    v.mass_fine = static_cast<double>(fine) / static_cast<double>(total);
    v.fine_interval = wilson_interval(fine, total);
    v.physical = v.fine_interval.lo >= options.floor && fine > 0 && v.mass_fine >= options.scale_retention * v.mass;
    c.physical = v.physical;
    if (v.physical) {
      ++report.physical_count;
      for (std::size_t i = 0; i < total; ++i) {
        if (ls.singleton[i] && d[i] < eps) physical_hit[i] = true;
      }
    }
    report.verdicts.push_back(v);
  }
  const auto frac = [&](const std::vector<bool>& hits) {
    return static_cast<double>(std::count(hits.begin(), hits.end(), true)) / static_cast<double>(total);
  };
  report.physical_coverage = frac(physical_hit);
  report.observable_coverage = frac(observable_hit);

  std::vector<const EmpiricalMeasure*> reps;
  for (const auto& v : ls.per_point) {
    for (const auto& m : v) reps.push_back(&m);
  }
  report.count_at_epsilon = leader_groups(reps, eps).size();
  report.count_at_half_epsilon = leader_groups(reps, eps / 2.0).size();
  report.count_stable = report.count_at_epsilon == report.count_at_half_epsilon;
  return report;
}

}  // namespace lyapobs
