#pragma once

// Linear cocycles over a base system and their n-step products.

#include "lyapobs/base.hpp"
#include "lyapobs/linalg.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lyapobs {

using Generator = std::function<Matrix(const Point&)>;

// A : X -> GL(d, R) over a base map T. A^n(x) = A(T^{n-1}x) ... A(x).
class Cocycle {
 public:
  Cocycle(std::shared_ptr<const System> base, int dim, Generator generator, std::string label = "");

  const System& base() const noexcept { return *base_; }
  const std::shared_ptr<const System>& base_ptr() const noexcept { return base_; }
  int dim() const noexcept { return dim_; }
  const std::string& label() const noexcept { return label_; }

  // A(x), checked for shape and finite entries.
  Matrix operator()(const Point& x) const;

  // Set when the generator does not depend on the point.
  const std::optional<Matrix>& constant_value() const noexcept { return constant_; }
  Cocycle with_constant(Matrix value) &&;

 private:
  std::shared_ptr<const System> base_;
  int dim_;
  Generator generator_;
  std::string label_;
  std::optional<Matrix> constant_;
};

Cocycle constant_cocycle(std::shared_ptr<const System> base, const Matrix& value, std::string label = "constant");
// A(x) = table[x_0] over a shift.
Cocycle symbolic_cocycle(std::shared_ptr<const System> base, std::vector<Matrix> table, std::string label = "symbolic");
// Constant planar rotation by `angle`.
Cocycle rotation_cocycle(std::shared_ptr<const System> base, double angle);
// Exact Jacobian of a toral map (its integer matrix); UnsupportedError otherwise.
Cocycle derivative_cocycle(std::shared_ptr<const System> base);
// x -> q A(x) q^T for a fixed orthogonal q.
Cocycle conjugated_cocycle(const Cocycle& c, const Matrix& q);
// x -> factor * A(x).
Cocycle scaled_cocycle(const Cocycle& c, double factor);

// Product of log-norms along an orbit with the scale factored out at every
// step. Tracks the compound matrices Lambda^k for k <= max_k, so every
// partial sum log sigma_1 + ... + log sigma_k stays accurate even when the
// singular values spread beyond double precision.
struct LogProduct {
  int dim = 0;
  std::ptrdiff_t steps = 0;
  double log_norm = 0.0;
  // log m(A) = -log ||A^{-1}||; NaN when max_k < d - 1.
  double log_conorm = 0.0;
  double log_abs_det = 0.0;
  // log ||Lambda^k||, k = 0..d (entry 0 is 0); NaN where not tracked.
  std::vector<double> log_exterior;
  // product = exp(log_scale) * residual
  Matrix residual;
  double log_scale = 0.0;

  // log sigma_1 >= ... >= log sigma_d.
  std::vector<double> log_singular_values() const;
  Matrix reconstruct() const;
};

enum class ProductDirection {
  forward,  // P <- A P
  inverse,  // P <- P A^{-1}
};

class LogAccumulator {
 public:
  explicit LogAccumulator(int dim, ProductDirection direction = ProductDirection::forward, int max_k = -1);

  void push(const Matrix& a);
  std::ptrdiff_t steps() const noexcept { return steps_; }
  double log_norm() const;
  double log_abs_det() const noexcept { return log_det_; }
  double log_exterior(int k) const;
  LogProduct result() const;

 private:
  struct Power {
    std::vector<std::vector<int>> subsets;
    Matrix residual;
    double log_scale = 0.0;
    Matrix scratch;
    Matrix compound;
  };
  int dim_;
  ProductDirection direction_;
  int max_k_;
  std::vector<Power> powers_;  // index k - 1
  Matrix inverse_;
  double log_det_ = 0.0;
  std::ptrdiff_t steps_ = 0;
};

LogProduct product(const Cocycle& c, const Point& x, std::ptrdiff_t n, int max_k = -1);
// (A^n(x))^{-1} = A(x)^{-1} ... A(T^{n-1}x)^{-1}, accumulated from inverses.
LogProduct inverse_product(const Cocycle& c, const Point& x, std::ptrdiff_t n, int max_k = -1);
LogProduct product_of_sequence(const std::vector<Matrix>& factors, int max_k = -1);

// log ||A^n(x)|| for n = 1..count along the orbit of x (entry n - 1).
std::vector<double> log_norm_prefixes(const Cocycle& c, const Point& x, std::ptrdiff_t count);

// log ||Lambda^k A^n(x)||.
double exterior_power_norm(const LogProduct& lp, int k);

// --- bundles ---------------------------------------------------------------

struct BundleFrame {
  Point base;
  Matrix frame;  // d x k, orthonormal columns
};

// Frames over a set of points: constant, or looked up along stored orbits.
class FrameField {
 public:
  static FrameField constant(const Matrix& frame);
  static FrameField along_orbit(const std::vector<BundleFrame>& frames);

  int ambient_dim() const noexcept { return static_cast<int>(rows_); }
  int rank() const noexcept { return static_cast<int>(cols_); }
  bool is_constant() const noexcept { return constant_.has_value(); }
  bool covers(const Point& x) const;
  // CoverageError when x has no frame.
  const Matrix& at(const Point& x) const;
  const std::vector<BundleFrame>& frames() const noexcept { return frames_; }

 private:
  FrameField() = default;
  const BundleFrame* find(const Point& x) const;

  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::optional<Matrix> constant_;
  std::vector<BundleFrame> frames_;
  std::unordered_multimap<std::size_t, std::size_t> index_;
};

inline constexpr double kInvarianceTolerance = 1e-6;

// Sine distance between span(A(x) F(x)) and span(F(Tx)).
double frame_invariance_defect(const Cocycle& c, const FrameField& frames, const Point& x);

// k x k cocycle F(Tx)^T A(x) F(x). Invariance is checked on `check_points`
// (for orbit fields, every stored point whose image is also stored when the
// list is empty); InvarianceError beyond kInvarianceTolerance.
Cocycle restrict_to_bundle(const Cocycle& c, const FrameField& frames, const std::vector<Point>& check_points = {});

// Pushes two random k-frames forward from x, re-orthonormalizing each step.
// After n_transient steps, frames at T^{n_transient + j} x, j = 0..n_keep,
// are stored. NonConvergenceError if the two frames disagree by more than
// kInvarianceTolerance at any stored step.
FrameField compute_bundle_frames(const Cocycle& c, const Point& x, int k, std::ptrdiff_t n_transient,
                                 std::ptrdiff_t n_keep = 64, std::uint64_t seed = 0);

}  // namespace lyapobs
