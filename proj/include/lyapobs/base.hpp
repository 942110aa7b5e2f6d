#pragma once

// Base dynamical systems: invertible maps of a torus or a full shift, with
// orbit generation, Lebesgue sampling and periodic-orbit enumeration.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace lyapobs {

inline constexpr int kMaxTorusDim = 8;

// Extra symbols kept on each side of a sampled shift window, beyond the
// horizon. Covers cylinder depths and the shift metric.
inline constexpr std::ptrdiff_t kSymbolSlack = 64;

// Positions |i| <= kMetricDepth enter the shift metric.
inline constexpr std::ptrdiff_t kMetricDepth = 16;

using Coords = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxTorusDim, 1>;
using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using Symbols = std::vector<std::uint8_t>;

// State of a base system: a point of [0,1)^k, or a finite window of a
// bi-infinite symbol sequence. Periodic windows are stored as one cycle and
// indexed modulo its length, so they have unbounded horizon.
class Point {
 public:
  // Coordinates are reduced mod 1 into [0, 1).
  static Point on_torus(const Coords& coords);
  static Point on_torus(std::initializer_list<double> coords);

  // `origin` is the index in `window` of position 0.
  static Point symbolic(std::shared_ptr<const Symbols> window, std::ptrdiff_t origin);
  static Point periodic(std::shared_ptr<const Symbols> cycle, std::ptrdiff_t phase = 0);
  static Point periodic(const Symbols& cycle, std::ptrdiff_t phase = 0);

  bool is_torus() const noexcept { return std::holds_alternative<Torus>(rep_); }
  bool is_symbolic() const noexcept { return !is_torus(); }
  bool is_periodic() const noexcept;

  const Coords& coords() const;
  int torus_dimension() const;

  // Symbol x_i at position i relative to the current position.
  int symbol(std::ptrdiff_t i) const;
  // Number of positions i >= 0 (resp. i < 0) available.
  std::ptrdiff_t forward_extent() const;
  std::ptrdiff_t backward_extent() const;
  // Window moved by n positions; throws HorizonError past its ends.
  Point shifted(std::ptrdiff_t n) const;

  // Stable text form, used for ordering and reports.
  std::string encode() const;
  // Bitwise identity (same coordinates, or same window and position).
  bool identical(const Point& other) const noexcept;
  std::size_t hash() const noexcept;

 private:
  struct Torus {
    Coords coords;
  };
  struct Window {
    std::shared_ptr<const Symbols> symbols;
    std::ptrdiff_t origin = 0;
    bool periodic = false;
  };
  explicit Point(Torus t) : rep_(std::move(t)) {}
  explicit Point(Window w) : rep_(std::move(w)) {}
  const Window& window() const;

  std::variant<Torus, Window> rep_;
};

enum class SystemKind { toral, shift };

// An invertible base map T : X -> X. Toral systems are affine maps
// x -> Mx + b (mod 1) with M integer unimodular; shift systems are full
// shifts on {0, ..., s-1}.
class System {
 public:
  static System toral(std::string name, const IntMatrix& matrix, const Coords& translation = Coords());
  // Windows of sampled points cover `horizon` forward steps plus slack.
  static System shift(std::string name, int alphabet, std::ptrdiff_t horizon);

  const std::string& name() const noexcept { return name_; }
  SystemKind kind() const noexcept { return kind_; }
  bool is_toral() const noexcept { return kind_ == SystemKind::toral; }
  // Torus dimension k; 0 for shifts.
  int dimension() const noexcept { return static_cast<int>(matrix_.rows()); }
  int alphabet() const noexcept { return alphabet_; }
  std::ptrdiff_t horizon() const noexcept { return horizon_; }
  const IntMatrix& matrix() const noexcept { return matrix_; }
  const IntMatrix& inverse_matrix() const noexcept { return inverse_; }
  const Coords& translation() const noexcept { return translation_; }
  bool is_linear() const noexcept;

  Point forward(const Point& x) const;
  Point inverse(const Point& x) const;
  // Flat metric on the torus; 2^-m on shifts, m the first |i| <= kMetricDepth
  // where the sequences disagree.
  double distance(const Point& a, const Point& b) const;

  // Grid cells: resolution r gives r^k boxes on the torus, and cylinders of
  // depth r (s^r cells) on a shift.
  std::uint64_t cell_count(int resolution) const;
  std::uint64_t cell_index(const Point& x, int resolution) const;
  // A point drawn uniformly from the cell (random past and future for shifts).
  Point sample_in_cell(std::uint64_t cell, int resolution, std::uint64_t seed, std::uint64_t stream) const;

  void check_point(const Point& x) const;

 private:
  System() = default;

  std::string name_;
  SystemKind kind_ = SystemKind::toral;
  IntMatrix matrix_;
  IntMatrix inverse_;
  Coords translation_;
  int alphabet_ = 0;
  std::ptrdiff_t horizon_ = 0;
};

// Built-in systems.
System toral_automorphism(const IntMatrix& matrix, std::string name = "toral");
IntMatrix cat_matrix();
System cat_map();
// f(x, y, z) = (x, g(y, z)) on T^3, g a toral automorphism of T^2.
System skew_product(const IntMatrix& fiber);
// Direct product of two toral systems.
System product(const System& a, const System& b);
System identity_torus(int dimension);
System circle_rotation(double alpha);
System full_shift(int alphabet, std::ptrdiff_t horizon = 4096);

struct OrbitSegment {
  // x, T(x), ..., T^n(x)
  std::vector<Point> points;

  std::ptrdiff_t length() const noexcept { return static_cast<std::ptrdiff_t>(points.size()) - 1; }
  const Point& start() const { return points.front(); }
  // For closed (periodic) segments: the distinct points of the cycle.
  std::vector<Point> cycle() const { return {points.begin(), points.end() - 1}; }
  std::string encode() const;
};

// T^n(x); negative n uses the inverse map.
Point iterate(const System& system, const Point& x, std::ptrdiff_t n);
OrbitSegment orbit(const System& system, const Point& x, std::ptrdiff_t n);
// i.i.d. Lebesgue points (Bernoulli windows on shifts). Point i depends only
// on (seed, i).
std::vector<Point> sample_initial_points(const System& system, std::size_t count, std::uint64_t seed);
// Toral maps: rational points with denominator <= max_denominator grouped
// into orbits of period <= max_period. Shifts: one orbit per primitive cycle
// of length <= max_period. Every segment satisfies points.back() == start.
std::vector<OrbitSegment> periodic_orbits(const System& system, int max_period, int max_denominator);

}  // namespace lyapobs
