#include "lyapobs/cli/config.hpp"

#include "lyapobs/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lyapobs::cli {

const std::vector<std::string> kOperations = {"lyapunov",   "dominate",    "cones",         "kappa",
                                              "empirical",  "observables", "ergopt",        "theorem-4-1",
                                              "theorem-a",  "corollary-6-2", "entropy"};

namespace {

const std::set<std::string> kTopLevel = {"operation", "seed",   "system", "cocycle",
                                         "bundle",    "params", "expect", "description"};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

IntMatrix int_matrix(const json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), what + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  IntMatrix m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == rows, what + " must be square");
    for (Eigen::Index c = 0; c < rows; ++c) {
      require(row[static_cast<std::size_t>(c)].is_number_integer(), what + " entries must be integers");
      m(r, c) = row[static_cast<std::size_t>(c)].get<long long>();
    }
  }
  return m;
}

Matrix real_matrix(const json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), what + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  require(j[0].is_array() && !j[0].empty(), what + " rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, what + " rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      require(row[static_cast<std::size_t>(c)].is_number(), what + " entries must be numbers");
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

std::string kind_of(const json& spec, const std::string& what) {
  require(spec.is_object(), what + " must be an object");
  require(spec.contains("kind") && spec["kind"].is_string(), what + ".kind must be a string");
  return spec["kind"].get<std::string>();
}

void only_keys(const json& spec, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& [key, value] : spec.items()) {
    require(allowed.count(key) > 0, "unknown key '" + key + "' in " + what);
  }
}

constexpr double kGoldenAngle = 0.6180339887498949;

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  require(doc.is_object(), "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    require(kTopLevel.count(key) > 0, "unknown top-level key '" + key + "'");
  }
  ExperimentConfig cfg;
  require(doc.contains("operation") && doc["operation"].is_string(), "operation is required");
  cfg.operation = doc["operation"].get<std::string>();
  require(std::find(kOperations.begin(), kOperations.end(), cfg.operation) != kOperations.end(),
          "unknown operation '" + cfg.operation + "'");
  require(doc.contains("seed"), "seed is required");
  require(doc["seed"].is_number_unsigned() || (doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0),
          "seed must be a non-negative integer");
  cfg.seed = doc["seed"].get<std::uint64_t>();
  require(doc.contains("system"), "system is required");
  cfg.system = doc["system"];
  kind_of(cfg.system, "system");
  if (doc.contains("cocycle")) {
    cfg.cocycle = doc["cocycle"];
    kind_of(cfg.cocycle, "cocycle");
  }
  if (doc.contains("bundle")) {
    require(cfg.operation == "theorem-a", "bundle applies to theorem-a only");
    cfg.bundle = doc["bundle"];
    kind_of(cfg.bundle, "bundle");
  }
  if (doc.contains("params")) {
    require(doc["params"].is_object(), "params must be an object");
    cfg.params = doc["params"];
  }
  if (doc.contains("expect")) {
    require(doc["expect"].is_object(), "expect must be an object");
    cfg.expect = doc["expect"];
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig cfg = parse_config(doc);
  cfg.source = path.filename().string();
  return cfg;
}

json echo(const ExperimentConfig& cfg) {
  json j;
  j["operation"] = cfg.operation;
  j["seed"] = cfg.seed;
  j["system"] = cfg.system;
  if (!cfg.cocycle.is_null()) j["cocycle"] = cfg.cocycle;
  if (!cfg.bundle.is_null()) j["bundle"] = cfg.bundle;
  j["params"] = cfg.params;
  if (!cfg.expect.empty()) j["expect"] = cfg.expect;
  return j;
}

// --- params ----------------------------------------------------------------

Params::Params(const json& params) : params_(params) {}

bool Params::has(const std::string& key) const { return params_.contains(key); }

std::int64_t Params::integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
  used_.insert(key);
  if (!params_.contains(key)) return fallback;
  const json& v = params_[key];
  require(v.is_number_integer(), "params." + key + " must be an integer");
  const auto x = v.get<std::int64_t>();
  require(x >= lo && x <= hi,
          "params." + key + " = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

double Params::real(const std::string& key, double fallback, double lo, double hi) {
  used_.insert(key);
  if (!params_.contains(key)) return fallback;
  const json& v = params_[key];
  require(v.is_number(), "params." + key + " must be a number");
  const double x = v.get<double>();
  std::ostringstream range;
  range << "[" << lo << ", " << hi << "]";
  require(std::isfinite(x) && x >= lo && x <= hi, "params." + key + " outside " + range.str());
  return x;
}

bool Params::flag(const std::string& key, bool fallback) {
  used_.insert(key);
  if (!params_.contains(key)) return fallback;
  require(params_[key].is_boolean(), "params." + key + " must be a boolean");
  return params_[key].get<bool>();
}

const json& Params::raw(const std::string& key) {
  used_.insert(key);
  static const json null_value;
  return params_.contains(key) ? params_[key] : null_value;
}

void Params::finish() const {
  for (const auto& [key, value] : params_.items()) {
    require(used_.count(key) > 0, "unknown parameter '" + key + "' for this operation");
  }
}

// --- builders --------------------------------------------------------------

bool is_isometric_example(const json& system_spec) {
  return system_spec.is_object() && system_spec.value("kind", "") == "isometric-bundle-example";
}

std::shared_ptr<const System> build_system(const json& spec) {
  const std::string kind = kind_of(spec, "system");
  try {
    if (kind == "cat-map") {
      only_keys(spec, {"kind"}, "system");
      return std::make_shared<System>(cat_map());
    }
    if (kind == "toral") {
      only_keys(spec, {"kind", "matrix", "name"}, "system");
      require(spec.contains("matrix"), "toral system needs a matrix");
      return std::make_shared<System>(toral_automorphism(int_matrix(spec["matrix"], "system.matrix"),
                                                         spec.value("name", std::string("toral"))));
    }
    if (kind == "skew-product") {
      only_keys(spec, {"kind", "fiber"}, "system");
      return std::make_shared<System>(skew_product(spec.contains("fiber") ? int_matrix(spec["fiber"], "system.fiber")
                                                                          : cat_matrix()));
    }
    if (kind == "product") {
      only_keys(spec, {"kind", "factors"}, "system");
      require(spec.contains("factors") && spec["factors"].is_array() && spec["factors"].size() == 2,
              "product needs exactly two factors");
      const auto a = build_system(spec["factors"][0]);
      const auto b = build_system(spec["factors"][1]);
      return std::make_shared<System>(product(*a, *b));
    }
    if (kind == "identity") {
      only_keys(spec, {"kind", "dimension"}, "system");
      const int d = spec.value("dimension", 2);
      require(d >= 1 && d <= kMaxTorusDim, "identity dimension out of range");
      return std::make_shared<System>(identity_torus(d));
    }
    if (kind == "rotation") {
      only_keys(spec, {"kind", "alpha"}, "system");
      return std::make_shared<System>(circle_rotation(spec.value("alpha", kGoldenAngle)));
    }
    if (kind == "isometric-bundle-example") {
      only_keys(spec, {"kind"}, "system");
      return std::make_shared<System>(circle_rotation(kGoldenAngle));
    }
    if (kind == "full-shift") {
      only_keys(spec, {"kind", "alphabet", "horizon"}, "system");
      const int s = spec.value("alphabet", 2);
      const auto horizon = spec.value("horizon", std::ptrdiff_t{4096});
      require(s >= 2 && s <= 16, "alphabet must lie in [2, 16]");
      require(horizon >= 1 && horizon <= 10'000'000, "horizon must lie in [1, 1e7]");
      return std::make_shared<System>(full_shift(s, horizon));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("system: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  throw ConfigError("unknown system kind '" + kind + "'");
}

Cocycle build_cocycle(const json& spec, std::shared_ptr<const System> system) {
  if (spec.is_null()) {
    try {
      return derivative_cocycle(system);
    } catch (const UnsupportedError&) {
      throw ConfigError("system has no derivative cocycle; give a cocycle");
    }
  }
  const std::string kind = kind_of(spec, "cocycle");
  auto scaled = [&](Cocycle c) {
    if (!spec.contains("scale")) return c;
    require(spec["scale"].is_number() && spec["scale"].get<double>() > 0.0, "cocycle.scale must be positive");
    return scaled_cocycle(c, spec["scale"].get<double>());
  };
  try {
    if (kind == "derivative") {
      only_keys(spec, {"kind", "scale"}, "cocycle");
      return scaled(build_cocycle(json(), system));
    }
    if (kind == "constant") {
      only_keys(spec, {"kind", "matrix", "scale"}, "cocycle");
      require(spec.contains("matrix"), "constant cocycle needs a matrix");
      const Matrix m = real_matrix(spec["matrix"], "cocycle.matrix");
      require(m.rows() == m.cols(), "cocycle.matrix must be square");
      return scaled(constant_cocycle(system, m));
    }
    if (kind == "table") {
      only_keys(spec, {"kind", "matrices", "scale"}, "cocycle");
      require(!system->is_toral(), "table cocycles need a shift");
      require(spec.contains("matrices") && spec["matrices"].is_array(), "table cocycle needs matrices");
      require(static_cast<int>(spec["matrices"].size()) == system->alphabet(), "one matrix per symbol is required");
      std::vector<Matrix> table;
      for (const auto& m : spec["matrices"]) table.push_back(real_matrix(m, "cocycle.matrices[]"));
      return scaled(symbolic_cocycle(system, std::move(table)));
    }
    if (kind == "rotation") {
      only_keys(spec, {"kind", "angle", "scale"}, "cocycle");
      return scaled(rotation_cocycle(system, spec.value("angle", 1.0)));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cocycle: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("cocycle: ") + e.what());
  }
  throw ConfigError("unknown cocycle kind '" + kind + "'");
}

std::vector<Point> build_points(const json& spec, const System& system) {
  require(spec.is_array() && !spec.empty(), "params.points must be a non-empty array");
  std::vector<Point> out;
  for (const auto& p : spec) {
    require(p.is_object(), "each point must be an object");
    if (p.contains("coords")) {
      require(system.is_toral(), "coords given for a shift");
      require(p["coords"].is_array() && static_cast<int>(p["coords"].size()) == system.dimension(),
              "coords must match the torus dimension");
      Coords c(system.dimension());
      for (int i = 0; i < system.dimension(); ++i) c[i] = p["coords"][static_cast<std::size_t>(i)].get<double>();
      out.push_back(Point::on_torus(c));
    } else if (p.contains("cycle")) {
      require(!system.is_toral(), "cycle given for a torus");
      require(p["cycle"].is_string() && !p["cycle"].get<std::string>().empty(), "cycle must be a non-empty string");
      Symbols s;
      for (char ch : p["cycle"].get<std::string>()) {
        const int v = ch >= '0' && ch <= '9' ? ch - '0' : (ch >= 'a' && ch <= 'f' ? ch - 'a' + 10 : -1);
        require(v >= 0 && v < system.alphabet(), "cycle symbol outside the alphabet");
        s.push_back(static_cast<std::uint8_t>(v));
      }
      out.push_back(Point::periodic(s));
    } else {
      throw ConfigError("each point needs coords or cycle");
    }
  }
  return out;
}

namespace {

// Dominant rank-k invariant subspace of a constant matrix by subspace
// iteration.
Matrix dominant_subspace(const Matrix& a, int k) {
  Matrix q = orthonormalize(Matrix::Identity(a.rows(), k) + 0.1 * Matrix::Ones(a.rows(), k));
  for (int it = 0; it < 2000; ++it) {
    const Matrix next = orthonormalize(a * q);
    const double moved = subspace_distance(q, next);
    q = next;
    if (moved < 1e-15) break;
  }
  return q;
}

}  // namespace

ExpansionContext build_bundle(const json& spec, Cocycle c, std::uint64_t seed) {
  if (spec.is_null()) return ExpansionContext::whole_fiber(std::move(c));
  const std::string kind = kind_of(spec, "bundle");
  try {
    if (kind == "whole") {
      only_keys(spec, {"kind"}, "bundle");
      return ExpansionContext::whole_fiber(std::move(c));
    }
    if (kind == "basis") {
      only_keys(spec, {"kind", "vectors"}, "bundle");
      require(spec.contains("vectors"), "basis bundle needs vectors");
      const Matrix rows = real_matrix(spec["vectors"], "bundle.vectors");
      require(rows.cols() == c.dim(), "bundle vectors must have the fiber dimension");
      return ExpansionContext::constant_bundle(std::move(c), rows.transpose());
    }
    if (kind == "dominant") {
      only_keys(spec, {"kind", "rank"}, "bundle");
      const int k = spec.value("rank", 1);
      require(k >= 1 && k < c.dim(), "bundle rank must lie in [1, d)");
      require(c.constant_value().has_value(), "dominant bundle needs a constant cocycle; use tracked");
      const Matrix basis = dominant_subspace(*c.constant_value(), k);
      return ExpansionContext::constant_bundle(std::move(c), basis);
    }
    if (kind == "tracked") {
      only_keys(spec, {"kind", "rank", "transient"}, "bundle");
      const int k = spec.value("rank", 1);
      const auto transient = spec.value("transient", std::ptrdiff_t{200});
      require(k >= 1 && k < c.dim(), "bundle rank must lie in [1, d)");
      require(transient >= 1 && transient <= 100000, "transient must lie in [1, 1e5]");
      return ExpansionContext::tracked_bundle(std::move(c), k, transient, seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bundle: ") + e.what());
  }
  throw ConfigError("unknown bundle kind '" + kind + "'");
}

}  // namespace lyapobs::cli
