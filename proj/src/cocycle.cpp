#include "lyapobs/cocycle.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/rng.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lyapobs {
namespace {

constexpr double kMinAbsDet = 1e-300;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLog2 = 0.6931471805599453;

double checked_log_abs_det(const Matrix& a) {
  const double det = a.rows() == 1   ? a(0, 0)
                     : a.rows() == 2 ? a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)
                                     : a.partialPivLu().determinant();
  if (!std::isfinite(det) || std::abs(det) <= kMinAbsDet) {
    throw SingularMatrixError("cocycle value is not invertible (|det| <= 1e-300)");
  }
  return std::log(std::abs(det));
}

}  // namespace

// --- Cocycle ---------------------------------------------------------------

Cocycle::Cocycle(std::shared_ptr<const System> base, int dim, Generator generator, std::string label)
    : base_(std::move(base)), dim_(dim), generator_(std::move(generator)), label_(std::move(label)) {
  if (!base_) throw std::invalid_argument("cocycle needs a base system");
  if (dim_ < 1) throw std::invalid_argument("fiber dimension must be >= 1");
  if (!generator_) throw std::invalid_argument("cocycle needs a generator");
}

Matrix Cocycle::operator()(const Point& x) const {
  if (constant_) return *constant_;
  Matrix a = generator_(x);
  if (a.rows() != dim_ || a.cols() != dim_) throw std::invalid_argument("generator returned a matrix of the wrong shape");
  if (!a.allFinite()) throw std::invalid_argument("generator returned non-finite entries");
  return a;
}

Cocycle Cocycle::with_constant(Matrix value) && {
  if (value.rows() != dim_ || value.cols() != dim_ || !value.allFinite()) {
    throw std::invalid_argument("constant cocycle value has the wrong shape");
  }
  constant_ = std::move(value);
  return std::move(*this);
}

Cocycle constant_cocycle(std::shared_ptr<const System> base, const Matrix& value, std::string label) {
  if (value.rows() != value.cols()) throw std::invalid_argument("cocycle values must be square");
  Cocycle c(std::move(base), static_cast<int>(value.rows()), [value](const Point&) { return value; }, std::move(label));
  return std::move(c).with_constant(value);
}

Cocycle symbolic_cocycle(std::shared_ptr<const System> base, std::vector<Matrix> table, std::string label) {
  if (!base || base->is_toral()) throw std::invalid_argument("symbolic cocycles live over a shift");
  if (static_cast<int>(table.size()) != base->alphabet()) throw std::invalid_argument("one matrix per symbol is required");
  const auto dim = table.front().rows();
  for (const Matrix& m : table) {
    if (m.rows() != dim || m.cols() != dim) throw std::invalid_argument("symbol matrices must share one square shape");
  }
  auto shared = std::make_shared<const std::vector<Matrix>>(std::move(table));
  return Cocycle(std::move(base), static_cast<int>(dim),
                 [shared](const Point& x) { return (*shared)[static_cast<std::size_t>(x.symbol(0))]; }, std::move(label));
}

Cocycle rotation_cocycle(std::shared_ptr<const System> base, double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return constant_cocycle(std::move(base), r, "rotation");
}

Cocycle derivative_cocycle(std::shared_ptr<const System> base) {
  if (!base || !base->is_toral()) throw UnsupportedError("no analytic Jacobian for this system");
  const Matrix m = base->matrix().cast<double>();
  return constant_cocycle(std::move(base), m, "derivative");
}

Cocycle conjugated_cocycle(const Cocycle& c, const Matrix& q) {
  if (q.rows() != c.dim() || q.cols() != c.dim()) throw std::invalid_argument("conjugating matrix has the wrong shape");
  if (c.constant_value()) return constant_cocycle(c.base_ptr(), q * *c.constant_value() * q.transpose(), c.label() + "-conj");
  return Cocycle(c.base_ptr(), c.dim(), [c, q](const Point& x) -> Matrix { return q * c(x) * q.transpose(); },
                 c.label() + "-conj");
}

Cocycle scaled_cocycle(const Cocycle& c, double factor) {
  if (c.constant_value()) return constant_cocycle(c.base_ptr(), factor * *c.constant_value(), c.label());
  return Cocycle(c.base_ptr(), c.dim(), [c, factor](const Point& x) -> Matrix { return factor * c(x); }, c.label());
}

// --- products --------------------------------------------------------------

std::vector<double> LogProduct::log_singular_values() const {
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int k = 1; k <= dim; ++k) {
    out[static_cast<std::size_t>(k - 1)] = log_exterior[static_cast<std::size_t>(k)] - log_exterior[static_cast<std::size_t>(k - 1)];
  }
  return out;
}

Matrix LogProduct::reconstruct() const { return std::exp(log_scale) * residual; }

LogAccumulator::LogAccumulator(int dim, ProductDirection direction, int max_k)
    : dim_(dim), direction_(direction), max_k_(max_k < 0 ? dim : std::min(max_k, dim)) {
  if (dim_ < 1) throw std::invalid_argument("dimension must be >= 1");
  if (max_k_ < 1) max_k_ = 1;
  const int tracked = std::max(1, std::min(max_k_, dim_ - 1));
  for (int k = 1; k <= tracked; ++k) {
    Power p;
    p.subsets = index_subsets(dim_, k);
    const auto n = static_cast<Eigen::Index>(p.subsets.size());
    p.residual = Matrix::Identity(n, n);
    powers_.push_back(std::move(p));
  }
}

void LogAccumulator::push(const Matrix& a) {
  if (a.rows() != dim_ || a.cols() != dim_) throw std::invalid_argument("factor has the wrong shape");
  const double log_det = checked_log_abs_det(a);
  const Matrix* factor = &a;
  if (direction_ == ProductDirection::inverse) {
    if (dim_ == 1) {
      inverse_.setConstant(1, 1, 1.0 / a(0, 0));
    } else if (dim_ == 2) {
      const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
      inverse_.resize(2, 2);
      inverse_ << a(1, 1) / det, -a(0, 1) / det, -a(1, 0) / det, a(0, 0) / det;
    } else {
      inverse_ = a.partialPivLu().inverse();
    }
    factor = &inverse_;
    log_det_ -= log_det;
  } else {
    log_det_ += log_det;
  }
  for (Power& p : powers_) {
    const bool first = p.subsets.front().size() == 1;
    if (!first) p.compound = compound(*factor, p.subsets);
    const Matrix& c = first ? *factor : p.compound;
    if (direction_ == ProductDirection::forward) {
      p.scratch.noalias() = c * p.residual;
    } else {
      p.scratch.noalias() = p.residual * c;
    }
    p.residual.swap(p.scratch);
    const double scale = p.residual.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) throw SingularMatrixError("product lost rank");
    // Factor out the power of two nearest the largest entry: exact, and
    // keeps the log out of the per-step cost.
    int e = 0;
    std::frexp(scale, &e);
    if (e != 0) {
      p.residual *= std::ldexp(1.0, -e);
      p.log_scale += e * kLog2;
    }
  }
  ++steps_;
}

double LogAccumulator::log_exterior(int k) const {
  if (k < 0 || k > dim_) throw std::invalid_argument("exterior power out of range");
  if (k == 0) return 0.0;
  if (k == dim_) return log_det_;
  if (k > static_cast<int>(powers_.size())) return kNaN;
  const Power& p = powers_[static_cast<std::size_t>(k - 1)];
  return p.log_scale + std::log(spectral_norm(p.residual));
}

double LogAccumulator::log_norm() const {
  const Power& p = powers_.front();
  return p.log_scale + std::log(spectral_norm(p.residual));
}

LogProduct LogAccumulator::result() const {
  LogProduct lp;
  lp.dim = dim_;
  lp.steps = steps_;
  lp.log_abs_det = log_det_;
  lp.log_norm = log_norm();
  lp.log_exterior.resize(static_cast<std::size_t>(dim_) + 1);
  for (int k = 0; k <= dim_; ++k) lp.log_exterior[static_cast<std::size_t>(k)] = log_exterior(k);
  lp.log_exterior[1] = lp.log_norm;
  lp.log_conorm = dim_ == 1 ? log_det_ : log_det_ - lp.log_exterior[static_cast<std::size_t>(dim_ - 1)];
  lp.residual = powers_.front().residual;
  lp.log_scale = powers_.front().log_scale;
  return lp;
}

namespace {

LogProduct accumulate_along(const Cocycle& c, const Point& x, std::ptrdiff_t n, ProductDirection direction, int max_k) {
  if (n < 1) throw std::invalid_argument("product length must be >= 1");
  const System& base = c.base();
  base.check_point(x);
  if (x.is_symbolic() && x.forward_extent() < n) {
    throw HorizonError("symbolic window too short for a product of length " + std::to_string(n));
  }
  LogAccumulator acc(c.dim(), direction, max_k);
  Point y = x;
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    acc.push(c(y));
    if (j + 1 < n) y = base.forward(y);
  }
  return acc.result();
}

}  // namespace

LogProduct product(const Cocycle& c, const Point& x, std::ptrdiff_t n, int max_k) {
  return accumulate_along(c, x, n, ProductDirection::forward, max_k);
}

LogProduct inverse_product(const Cocycle& c, const Point& x, std::ptrdiff_t n, int max_k) {
  return accumulate_along(c, x, n, ProductDirection::inverse, max_k);
}

LogProduct product_of_sequence(const std::vector<Matrix>& factors, int max_k) {
  if (factors.empty()) throw std::invalid_argument("empty product");
  LogAccumulator acc(static_cast<int>(factors.front().rows()), ProductDirection::forward, max_k);
  for (const Matrix& a : factors) acc.push(a);
  return acc.result();
}

std::vector<double> log_norm_prefixes(const Cocycle& c, const Point& x, std::ptrdiff_t count) {
  if (count < 1) throw std::invalid_argument("prefix count must be >= 1");
  const System& base = c.base();
  base.check_point(x);
  LogAccumulator acc(c.dim(), ProductDirection::forward, 1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  Point y = x;
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    acc.push(c(y));
    out.push_back(acc.log_norm());
    if (j + 1 < count) y = base.forward(y);
  }
  return out;
}

double exterior_power_norm(const LogProduct& lp, int k) {
  if (k < 1 || k > lp.dim) throw std::invalid_argument("exterior power index must be in [1, d]");
  const double v = lp.log_exterior[static_cast<std::size_t>(k)];
  if (std::isnan(v)) throw std::invalid_argument("exterior power was not tracked for this product");
  return v;
}

// --- bundles ---------------------------------------------------------------

FrameField FrameField::constant(const Matrix& frame) {
  if (frame.cols() < 1 || frame.cols() > frame.rows()) throw std::invalid_argument("frame rank out of range");
  if (orthonormality_defect(frame) > 1e-10) throw std::invalid_argument("frame columns are not orthonormal");
  FrameField f;
  f.rows_ = frame.rows();
  f.cols_ = frame.cols();
  f.constant_ = frame;
  return f;
}

FrameField FrameField::along_orbit(const std::vector<BundleFrame>& frames) {
  if (frames.empty()) throw std::invalid_argument("empty frame table");
  FrameField f;
  f.rows_ = frames.front().frame.rows();
  f.cols_ = frames.front().frame.cols();
  for (const BundleFrame& b : frames) {
    if (b.frame.rows() != f.rows_ || b.frame.cols() != f.cols_) throw std::invalid_argument("frames of mixed shape");
    if (orthonormality_defect(b.frame) > 1e-10) throw std::invalid_argument("frame columns are not orthonormal");
    if (f.find(b.base) != nullptr) continue;
    f.index_.emplace(b.base.hash(), f.frames_.size());
    f.frames_.push_back(b);
  }
  return f;
}

const BundleFrame* FrameField::find(const Point& x) const {
  auto [lo, hi] = index_.equal_range(x.hash());
  for (auto it = lo; it != hi; ++it) {
    const BundleFrame& b = frames_[it->second];
    if (b.base.identical(x)) return &b;
  }
  return nullptr;
}

bool FrameField::covers(const Point& x) const { return constant_.has_value() || find(x) != nullptr; }

const Matrix& FrameField::at(const Point& x) const {
  if (constant_) return *constant_;
  const BundleFrame* b = find(x);
  if (b == nullptr) throw CoverageError("no bundle frame stored at " + x.encode());
  return b->frame;
}

double frame_invariance_defect(const Cocycle& c, const FrameField& frames, const Point& x) {
  const Matrix image = orthonormalize(c(x) * frames.at(x));
  return subspace_distance(frames.at(c.base().forward(x)), image);
}

Cocycle restrict_to_bundle(const Cocycle& c, const FrameField& frames, const std::vector<Point>& check_points) {
  if (frames.ambient_dim() != c.dim()) throw std::invalid_argument("frame dimension does not match the cocycle");
  std::vector<Point> checks = check_points;
  if (checks.empty()) {
    if (frames.is_constant()) {
      checks = sample_initial_points(c.base(), 16, 0x5eed);
    } else {
      for (const BundleFrame& b : frames.frames()) {
        if (frames.covers(c.base().forward(b.base))) checks.push_back(b.base);
      }
    }
  }
  for (const Point& x : checks) {
    const double defect = frame_invariance_defect(c, frames, x);
    if (defect > kInvarianceTolerance) {
      throw InvarianceError("bundle is not invariant at " + x.encode() + " (defect " + std::to_string(defect) + ")");
    }
  }
  auto shared = std::make_shared<const FrameField>(frames);
  if (frames.is_constant() && c.constant_value()) {
    const Matrix& f = frames.at(checks.front());
    return constant_cocycle(c.base_ptr(), f.transpose() * *c.constant_value() * f, c.label() + "|bundle");
  }
  return Cocycle(c.base_ptr(), frames.rank(),
                 [c, shared](const Point& x) -> Matrix {
                   const Matrix& from = shared->at(x);
                   const Matrix& to = shared->at(c.base().forward(x));
                   return to.transpose() * c(x) * from;
                 },
                 c.label() + "|bundle");
}

FrameField compute_bundle_frames(const Cocycle& c, const Point& x, int k, std::ptrdiff_t n_transient,
                                 std::ptrdiff_t n_keep, std::uint64_t seed) {
  const int d = c.dim();
  if (k < 1 || k >= d) throw std::invalid_argument("bundle rank must satisfy 1 <= k < d");
  if (n_transient < 1 || n_keep < 0) throw std::invalid_argument("transient must be >= 1");
  c.base().check_point(x);
  std::array<Matrix, 2> f;
  for (std::size_t t = 0; t < 2; ++t) {
    CounterRng rng(seed, t);
    Matrix m(d, k);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    f[t] = orthonormalize(m);
  }
  std::vector<BundleFrame> stored;
  Point y = x;
  const std::ptrdiff_t total = n_transient + n_keep;
  for (std::ptrdiff_t j = 0; j <= total; ++j) {
    if (j >= n_transient) {
      const double drift = subspace_distance(f[0], f[1]);
      if (drift > kInvarianceTolerance) {
        throw NonConvergenceError("bundle frames did not settle after " + std::to_string(n_transient) +
                                  " steps (drift " + std::to_string(drift) + ")");
      }
      stored.push_back({y, f[0]});
    }
    if (j == total) break;
    const Matrix a = c(y);
    for (auto& frame : f) frame = orthonormalize(a * frame);
    y = c.base().forward(y);
  }
  return FrameField::along_orbit(stored);
}

}  // namespace lyapobs
