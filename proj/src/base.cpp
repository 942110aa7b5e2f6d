#include "lyapobs/base.hpp"

#include "lyapobs/error.hpp"
#include "lyapobs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace lyapobs {
namespace {

double reduce_unit(double v) {
  double r = v - std::floor(v);
  if (r >= 1.0 || r < 0.0) r = 0.0;
  return r;
}

std::ptrdiff_t positive_mod(std::ptrdiff_t a, std::ptrdiff_t m) {
  const std::ptrdiff_t r = a % m;
  return r < 0 ? r + m : r;
}

long long integer_determinant(IntMatrix m) {
  // Bareiss fraction-free elimination; exact for the small matrices used here.
  const Eigen::Index n = m.rows();
  long long sign = 1;
  long long prev = 1;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      Eigen::Index swap = k + 1;
      while (swap < n && m(swap, k) == 0) ++swap;
      if (swap == n) return 0;
      m.row(k).swap(m.row(swap));
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      for (Eigen::Index j = k + 1; j < n; ++j) {
        m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
      }
    }
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

IntMatrix integer_inverse(const IntMatrix& m) {
  const long long det = integer_determinant(m);
  if (det != 1 && det != -1) {
    throw std::invalid_argument("toral map matrix must be unimodular (det = +-1)");
  }
  const Eigen::MatrixXd inv = m.cast<double>().inverse();
  IntMatrix rounded = inv.unaryExpr([](double v) { return static_cast<long long>(std::llround(v)); });
  if ((m * rounded - IntMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() != 0) {
    throw std::invalid_argument("toral map matrix entries too large for an exact inverse");
  }
  return rounded;
}

std::shared_ptr<const Symbols> random_window(int alphabet, std::ptrdiff_t length, CounterRng& rng) {
  auto symbols = std::make_shared<Symbols>(static_cast<std::size_t>(length));
  for (auto& s : *symbols) s = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(alphabet)));
  return symbols;
}

// Lyndon words of length <= max_len over {0..s-1}, in lexicographic order.
std::vector<Symbols> lyndon_words(int s, int max_len) {
  std::vector<Symbols> out;
  std::vector<int> w{-1};
  while (!w.empty()) {
    ++w.back();
    Symbols word(w.begin(), w.end());
    out.push_back(std::move(word));
    const std::size_t m = w.size();
    while (static_cast<int>(w.size()) < max_len) w.push_back(w[w.size() - m]);
    while (!w.empty() && w.back() == s - 1) w.pop_back();
  }
  return out;
}

}  // namespace

// --- Point -----------------------------------------------------------------

Point Point::on_torus(const Coords& coords) {
  if (coords.size() < 1 || coords.size() > kMaxTorusDim) {
    throw std::invalid_argument("torus dimension must be in [1, 8]");
  }
  Torus t{coords};
  for (Eigen::Index i = 0; i < t.coords.size(); ++i) {
    if (!std::isfinite(t.coords[i])) throw std::invalid_argument("torus coordinate is not finite");
    t.coords[i] = reduce_unit(t.coords[i]);
  }
  return Point(std::move(t));
}

Point Point::on_torus(std::initializer_list<double> coords) {
  Coords c(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (double v : coords) c[i++] = v;
  return on_torus(c);
}

Point Point::symbolic(std::shared_ptr<const Symbols> window, std::ptrdiff_t origin) {
  if (!window || window->empty()) throw std::invalid_argument("empty symbol window");
  if (origin < 0 || origin >= static_cast<std::ptrdiff_t>(window->size())) {
    throw std::invalid_argument("window origin outside the window");
  }
  return Point(Window{std::move(window), origin, false});
}

Point Point::periodic(std::shared_ptr<const Symbols> cycle, std::ptrdiff_t phase) {
  if (!cycle || cycle->empty()) throw std::invalid_argument("empty cycle");
  const auto len = static_cast<std::ptrdiff_t>(cycle->size());
  return Point(Window{std::move(cycle), positive_mod(phase, len), true});
}

Point Point::periodic(const Symbols& cycle, std::ptrdiff_t phase) {
  return periodic(std::make_shared<const Symbols>(cycle), phase);
}

bool Point::is_periodic() const noexcept {
  const auto* w = std::get_if<Window>(&rep_);
  return w != nullptr && w->periodic;
}

const Point::Window& Point::window() const {
  const auto* w = std::get_if<Window>(&rep_);
  if (w == nullptr) throw std::invalid_argument("point is not symbolic");
  return *w;
}

const Coords& Point::coords() const {
  const auto* t = std::get_if<Torus>(&rep_);
  if (t == nullptr) throw std::invalid_argument("point is not on a torus");
  return t->coords;
}

int Point::torus_dimension() const { return static_cast<int>(coords().size()); }

int Point::symbol(std::ptrdiff_t i) const {
  const Window& w = window();
  const auto len = static_cast<std::ptrdiff_t>(w.symbols->size());
  if (w.periodic) return (*w.symbols)[static_cast<std::size_t>(positive_mod(w.origin + i, len))];
  const std::ptrdiff_t idx = w.origin + i;
  if (idx < 0 || idx >= len) throw HorizonError("symbolic window too short for position " + std::to_string(i));
  return (*w.symbols)[static_cast<std::size_t>(idx)];
}

std::ptrdiff_t Point::forward_extent() const {
  const Window& w = window();
  if (w.periodic) return std::numeric_limits<std::ptrdiff_t>::max();
  return static_cast<std::ptrdiff_t>(w.symbols->size()) - w.origin;
}

std::ptrdiff_t Point::backward_extent() const {
  const Window& w = window();
  if (w.periodic) return std::numeric_limits<std::ptrdiff_t>::max();
  return w.origin;
}

Point Point::shifted(std::ptrdiff_t n) const {
  Window w = window();
  const auto len = static_cast<std::ptrdiff_t>(w.symbols->size());
  if (w.periodic) {
    w.origin = positive_mod(w.origin + n, len);
  } else {
    const std::ptrdiff_t idx = w.origin + n;
    if (idx < 0 || idx >= len) {
      throw HorizonError("symbolic window too short to shift by " + std::to_string(n));
    }
    w.origin = idx;
  }
  return Point(std::move(w));
}

std::string Point::encode() const {
  std::ostringstream os;
  if (const auto* t = std::get_if<Torus>(&rep_)) {
    os.precision(17);
    for (Eigen::Index i = 0; i < t->coords.size(); ++i) {
      if (i > 0) os << ',';
      os << t->coords[i];
    }
    return os.str();
  }
  const Window& w = window();
  if (w.periodic) {
    os << "cycle:";
    for (std::size_t i = 0; i < w.symbols->size(); ++i) os << symbol(static_cast<std::ptrdiff_t>(i));
    return os.str();
  }
  os << "window:";
  const std::ptrdiff_t shown = std::min<std::ptrdiff_t>(forward_extent(), 64);
  for (std::ptrdiff_t i = 0; i < shown; ++i) os << symbol(i);
  return os.str();
}

bool Point::identical(const Point& other) const noexcept {
  if (is_torus() != other.is_torus()) return false;
  if (is_torus()) {
    const auto& a = std::get<Torus>(rep_).coords;
    const auto& b = std::get<Torus>(other.rep_).coords;
    return a.size() == b.size() && (a.array() == b.array()).all();
  }
  const auto& a = std::get<Window>(rep_);
  const auto& b = std::get<Window>(other.rep_);
  return a.symbols == b.symbols && a.origin == b.origin && a.periodic == b.periodic;
}

std::size_t Point::hash() const noexcept {
  std::uint64_t h = 0x12345;
  if (is_torus()) {
    const auto& c = std::get<Torus>(rep_).coords;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      std::uint64_t bits;
      const double v = c[i];
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
  const auto& w = std::get<Window>(rep_);
  h = mix64(h ^ reinterpret_cast<std::uintptr_t>(w.symbols.get()));
  return static_cast<std::size_t>(mix64(h ^ static_cast<std::uint64_t>(w.origin)));
}

// --- System ----------------------------------------------------------------

System System::toral(std::string name, const IntMatrix& matrix, const Coords& translation) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1 || matrix.rows() > kMaxTorusDim) {
    throw std::invalid_argument("toral map matrix must be square with dimension in [1, 8]");
  }
  System s;
  s.name_ = std::move(name);
  s.kind_ = SystemKind::toral;
  s.matrix_ = matrix;
  s.inverse_ = integer_inverse(matrix);
  if (translation.size() == 0) {
    s.translation_ = Coords::Zero(matrix.rows());
  } else {
    if (translation.size() != matrix.rows()) throw std::invalid_argument("translation dimension mismatch");
    s.translation_ = translation;
  }
  return s;
}

System System::shift(std::string name, int alphabet, std::ptrdiff_t horizon) {
  if (alphabet < 2 || alphabet > 255) throw std::invalid_argument("alphabet size must be in [2, 255]");
  if (horizon < 1) throw std::invalid_argument("shift horizon must be positive");
  System s;
  s.name_ = std::move(name);
  s.kind_ = SystemKind::shift;
  s.alphabet_ = alphabet;
  s.horizon_ = horizon;
  return s;
}

bool System::is_linear() const noexcept {
  return is_toral() && (translation_.array() == 0.0).all();
}

void System::check_point(const Point& x) const {
  if (is_toral()) {
    if (!x.is_torus() || x.torus_dimension() != dimension()) {
      throw std::invalid_argument("point does not belong to " + name_);
    }
  } else {
    if (!x.is_symbolic() || x.symbol(0) >= alphabet_) {
      throw std::invalid_argument("point does not belong to " + name_);
    }
  }
}

Point System::forward(const Point& x) const {
  if (!is_toral()) return x.shifted(1);
  const Coords& c = x.coords();
  Coords y = matrix_.cast<double>() * c + translation_;
  return Point::on_torus(y);
}

Point System::inverse(const Point& x) const {
  if (!is_toral()) return x.shifted(-1);
  const Coords& c = x.coords();
  Coords y = inverse_.cast<double>() * (c - translation_);
  return Point::on_torus(y);
}

double System::distance(const Point& a, const Point& b) const {
  if (is_toral()) {
    const Coords& ca = a.coords();
    const Coords& cb = b.coords();
    if (ca.size() != cb.size()) throw std::invalid_argument("points of different dimension");
    double s = 0.0;
    for (Eigen::Index i = 0; i < ca.size(); ++i) {
      const double d = std::abs(ca[i] - cb[i]);
      const double w = std::min(d, 1.0 - d);
      s += w * w;
    }
    return std::sqrt(s);
  }
  for (std::ptrdiff_t m = 0; m <= kMetricDepth; ++m) {
    if (a.symbol(m) != b.symbol(m) || (m > 0 && a.symbol(-m) != b.symbol(-m))) {
      return std::ldexp(1.0, -static_cast<int>(m));
    }
  }
  return 0.0;
}

std::uint64_t System::cell_count(int resolution) const {
  if (resolution < 1) throw std::invalid_argument("resolution must be positive");
  const int base = is_toral() ? resolution : alphabet_;
  const int exponent = is_toral() ? dimension() : resolution;
  const double total = std::pow(static_cast<double>(base), exponent);
  if (total > 1e15) throw std::invalid_argument("grid too fine");
  std::uint64_t count = 1;
  for (int i = 0; i < exponent; ++i) count *= static_cast<std::uint64_t>(base);
  return count;
}

std::uint64_t System::cell_index(const Point& x, int resolution) const {
  std::uint64_t idx = 0;
  if (is_toral()) {
    const Coords& c = x.coords();
    for (Eigen::Index i = c.size() - 1; i >= 0; --i) {
      auto cell = static_cast<std::uint64_t>(c[i] * resolution);
      if (cell >= static_cast<std::uint64_t>(resolution)) cell = static_cast<std::uint64_t>(resolution - 1);
      idx = idx * static_cast<std::uint64_t>(resolution) + cell;
    }
    return idx;
  }
  for (int i = 0; i < resolution; ++i) idx = idx * static_cast<std::uint64_t>(alphabet_) + static_cast<std::uint64_t>(x.symbol(i));
  return idx;
}

Point System::sample_in_cell(std::uint64_t cell, int resolution, std::uint64_t seed, std::uint64_t stream) const {
  if (cell >= cell_count(resolution)) throw std::invalid_argument("cell index out of range");
  CounterRng rng(seed, stream);
  if (is_toral()) {
    Coords c(dimension());
    std::uint64_t rest = cell;
    for (int i = 0; i < dimension(); ++i) {
      const auto r = static_cast<std::uint64_t>(resolution);
      c[i] = (static_cast<double>(rest % r) + rng.uniform()) / resolution;
      rest /= r;
    }
    return Point::on_torus(c);
  }
  const std::ptrdiff_t length = horizon_ + 2 * kSymbolSlack;
  auto window = std::const_pointer_cast<Symbols>(random_window(alphabet_, length, rng));
  std::uint64_t rest = cell;
  for (int i = resolution - 1; i >= 0; --i) {
    (*window)[static_cast<std::size_t>(kSymbolSlack + i)] = static_cast<std::uint8_t>(rest % static_cast<std::uint64_t>(alphabet_));
    rest /= static_cast<std::uint64_t>(alphabet_);
  }
  return Point::symbolic(std::move(window), kSymbolSlack);
}

// --- built-ins -------------------------------------------------------------

System toral_automorphism(const IntMatrix& matrix, std::string name) {
  return System::toral(std::move(name), matrix);
}

IntMatrix cat_matrix() {
  IntMatrix m(2, 2);
  m << 2, 1, 1, 1;
  return m;
}

System cat_map() { return System::toral("cat-map", cat_matrix()); }

System skew_product(const IntMatrix& fiber) {
  if (fiber.rows() != 2 || fiber.cols() != 2) throw std::invalid_argument("skew product fiber map must be 2x2");
  IntMatrix m = IntMatrix::Zero(3, 3);
  m(0, 0) = 1;
  m.block(1, 1, 2, 2) = fiber;
  return System::toral("skew-product", m);
}

System product(const System& a, const System& b) {
  if (!a.is_toral() || !b.is_toral()) throw UnsupportedError("products are implemented for toral systems");
  const int da = a.dimension();
  const int db = b.dimension();
  IntMatrix m = IntMatrix::Zero(da + db, da + db);
  m.block(0, 0, da, da) = a.matrix();
  m.block(da, da, db, db) = b.matrix();
  Coords t(da + db);
  t << a.translation(), b.translation();
  return System::toral(a.name() + "*" + b.name(), m, t);
}

System identity_torus(int dimension) {
  return System::toral("identity-T" + std::to_string(dimension), IntMatrix::Identity(dimension, dimension));
}

System circle_rotation(double alpha) {
  Coords t(1);
  t[0] = alpha;
  return System::toral("rotation", IntMatrix::Identity(1, 1), t);
}

System full_shift(int alphabet, std::ptrdiff_t horizon) {
  return System::shift("full-shift-" + std::to_string(alphabet), alphabet, horizon);
}

// --- orbits ----------------------------------------------------------------

std::string OrbitSegment::encode() const {
  std::string out;
  for (const Point& p : points) {
    if (!out.empty()) out += ';';
    out += p.encode();
  }
  return out;
}

Point iterate(const System& system, const Point& x, std::ptrdiff_t n) {
  system.check_point(x);
  if (!system.is_toral()) return x.shifted(n);
  Point y = x;
  if (n >= 0) {
    for (std::ptrdiff_t i = 0; i < n; ++i) y = system.forward(y);
  } else {
    for (std::ptrdiff_t i = 0; i < -n; ++i) y = system.inverse(y);
  }
  return y;
}

OrbitSegment orbit(const System& system, const Point& x, std::ptrdiff_t n) {
  if (n < 1) throw std::invalid_argument("orbit length must be >= 1");
  system.check_point(x);
  if (!system.is_toral() && !x.is_periodic() && x.forward_extent() <= n) {
    throw HorizonError("symbolic window too short for an orbit of length " + std::to_string(n));
  }
  OrbitSegment seg;
  seg.points.reserve(static_cast<std::size_t>(n) + 1);
  seg.points.push_back(x);
  for (std::ptrdiff_t i = 0; i < n; ++i) seg.points.push_back(system.forward(seg.points.back()));
  return seg;
}

std::vector<Point> sample_initial_points(const System& system, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample count must be >= 1");
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, i);
    if (system.is_toral()) {
      Coords c(system.dimension());
      for (int j = 0; j < system.dimension(); ++j) c[j] = rng.uniform();
      out.push_back(Point::on_torus(c));
    } else {
      const std::ptrdiff_t length = system.horizon() + 2 * kSymbolSlack;
      out.push_back(Point::symbolic(random_window(system.alphabet(), length, rng), kSymbolSlack));
    }
  }
  return out;
}

std::vector<OrbitSegment> periodic_orbits(const System& system, int max_period, int max_denominator) {
  if (max_period < 1) throw std::invalid_argument("max_period must be >= 1");
  std::vector<OrbitSegment> out;

  if (!system.is_toral()) {
    if (max_period > 24) throw std::invalid_argument("max_period too large for cycle enumeration");
    for (const Symbols& word : lyndon_words(system.alphabet(), max_period)) {
      auto cycle = std::make_shared<const Symbols>(word);
      OrbitSegment seg;
      for (std::size_t j = 0; j <= word.size(); ++j) seg.points.push_back(Point::periodic(cycle, static_cast<std::ptrdiff_t>(j)));
      out.push_back(std::move(seg));
    }
  } else {
    if (!system.is_linear()) throw UnsupportedError("periodic orbits are enumerated for toral automorphisms only");
    if (max_denominator < 1) throw std::invalid_argument("max_denominator must be >= 1");
    const int k = system.dimension();
    const IntMatrix& m = system.matrix();
    for (long long q = 1; q <= max_denominator; ++q) {
      const double cells = std::pow(static_cast<double>(q), k);
      if (cells > 5e6) throw std::invalid_argument("rational grid too large");
      const auto total = static_cast<long long>(cells);
      std::vector<char> visited(static_cast<std::size_t>(total), 0);
      auto decode = [&](long long idx) {
        Eigen::Matrix<long long, Eigen::Dynamic, 1> a(k);
        for (int i = 0; i < k; ++i) {
          a[i] = idx % q;
          idx /= q;
        }
        return a;
      };
      auto encode = [&](const Eigen::Matrix<long long, Eigen::Dynamic, 1>& a) {
        long long idx = 0;
        for (int i = k - 1; i >= 0; --i) idx = idx * q + a[i];
        return idx;
      };
      for (long long idx = 0; idx < total; ++idx) {
        if (visited[static_cast<std::size_t>(idx)]) continue;
        const auto a0 = decode(idx);
        long long g = q;
        for (int i = 0; i < k; ++i) g = std::gcd(g, a0[i]);
        if (g != 1) continue;  // belongs to a smaller denominator
        std::vector<Eigen::Matrix<long long, Eigen::Dynamic, 1>> cyc{a0};
        visited[static_cast<std::size_t>(idx)] = 1;
        while (true) {
          Eigen::Matrix<long long, Eigen::Dynamic, 1> next = m * cyc.back();
          for (int i = 0; i < k; ++i) next[i] = ((next[i] % q) + q) % q;
          const long long nidx = encode(next);
          if (nidx == idx) break;
          visited[static_cast<std::size_t>(nidx)] = 1;
          cyc.push_back(next);
        }
        if (static_cast<int>(cyc.size()) > max_period) continue;
        OrbitSegment seg;
        for (const auto& a : cyc) {
          Coords c(k);
          for (int i = 0; i < k; ++i) c[i] = static_cast<double>(a[i]) / static_cast<double>(q);
          seg.points.push_back(Point::on_torus(c));
        }
        seg.points.push_back(seg.points.front());
        out.push_back(std::move(seg));
      }
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const OrbitSegment& a, const OrbitSegment& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return a.encode() < b.encode();
  });
  return out;
}

}  // namespace lyapobs
