#include "rpfield/config.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>

#include "rpfield/error.hpp"

namespace rpf {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// A JSON object together with its pointer; every lookup checks the type and
/// unknown keys are rejected.
class Node {
 public:
  Node(const json& value, std::string path) : v_(value), path_(std::move(path)) {}

  const json& value() const { return v_; }
  const std::string& path() const { return path_; }
  std::string at_path(const std::string& key) const { return path_ + "/" + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const { throw ConfigError(at_path(key), what); }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_.empty() ? "/" : path_, what); }

  void require_object() const {
    if (!v_.is_object()) fail("expected an object");
  }
  void allow_only(std::initializer_list<const char*> keys) const {
    require_object();
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = v_.begin(); it != v_.end(); ++it)
      if (!ok.count(it.key())) fail(it.key(), "unknown field");
  }
  bool has(const std::string& key) const { return v_.contains(key); }
  Node child(const std::string& key) const {
    if (!has(key)) fail(key, "missing field");
    return Node(v_.at(key), at_path(key));
  }

  double number(const std::string& key) const {
    const auto& x = child(key).v_;
    if (!x.is_number()) fail(key, "expected a number");
    const double d = x.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) const {
    const auto& x = child(key).v_;
    if (!x.is_number_integer()) fail(key, "expected an integer");
    return x.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const long long v = integer(key);
    if (v < 0) fail(key, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& x = v_.at(key);
    if (!x.is_boolean()) fail(key, "expected true or false");
    return x.get<bool>();
  }

  std::string string(const std::string& key) const {
    const auto& x = child(key).v_;
    if (!x.is_string()) fail(key, "expected a string");
    return x.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) const {
    const Node n = child(key);
    if (!n.v_.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.v_.size(); ++i) {
      const auto& x = n.v_[i];
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        throw ConfigError(n.path_ + "/" + std::to_string(i), "expected a finite number");
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? numbers(key) : fallback;
  }

  std::vector<int> integers(const std::string& key) const {
    const Node n = child(key);
    if (!n.v_.is_array()) fail(key, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < n.v_.size(); ++i) {
      const auto& x = n.v_[i];
      if (!x.is_number_integer()) throw ConfigError(n.path_ + "/" + std::to_string(i), "expected an integer");
      out.push_back(x.get<int>());
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(const std::string& key) const {
    const Node n = child(key);
    if (!n.v_.is_array()) fail(key, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < n.v_.size(); ++i) {
      Node row(n.v_[i], n.path_ + "/" + std::to_string(i));
      if (!row.v_.is_array()) row.fail("expected an array of numbers");
      std::vector<double> r;
      for (std::size_t j = 0; j < row.v_.size(); ++j) {
        const auto& x = row.v_[j];
        if (!x.is_number() || !std::isfinite(x.get<double>()))
          throw ConfigError(row.path_ + "/" + std::to_string(j), "expected a finite number");
        r.push_back(x.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    if (!has(key)) return {};
    const Node n = child(key);
    if (!n.v_.is_array()) fail(key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n.v_.size(); ++i) {
      if (!n.v_[i].is_string()) throw ConfigError(n.path_ + "/" + std::to_string(i), "expected a string");
      out.push_back(n.v_[i].get<std::string>());
    }
    return out;
  }

 private:
  const json& v_;
  std::string path_;
};

/// Runs `f`, turning InvalidArgument and SupportError into ConfigError at `path`.
template <class F>
void guarded(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

LatticeSpec parse_lattice(const Node& n) {
  n.allow_only({"dim", "sites", "length", "components"});
  LatticeSpec spec;
  const auto sites = n.integer("sites");
  if (sites < 2 || sites % 2 != 0) n.fail("sites", "expected an even number of sites >= 2");
  guarded(n.path(), [&] {
    spec = LatticeSpec::build(static_cast<int>(n.integer("dim")), static_cast<int>(n.integer("sites")),
                              n.number("length"), static_cast<int>(n.integer("components", 1)));
  });
  return spec;
}

QuadratureConfig parse_quadrature(const Node& n, const LatticeSpec& lattice) {
  n.allow_only({"scheme", "abs_tol", "rel_tol", "max_depth", "max_angular"});
  QuadratureConfig q;
  const auto scheme = n.string("scheme", "radial_adaptive");
  if (scheme == "lattice_sum") {
    q = QuadratureConfig::lattice_sum_on(lattice);
  } else if (scheme != "radial_adaptive") {
    n.fail("scheme", "expected radial_adaptive or lattice_sum");
  }
  q.abs_tol = n.number("abs_tol", q.abs_tol);
  q.rel_tol = n.number("rel_tol", q.rel_tol);
  q.max_depth = static_cast<int>(n.integer("max_depth", q.max_depth));
  q.max_angular = static_cast<int>(n.integer("max_angular", q.max_angular));
  if (!(q.abs_tol > 0.0) && !(q.rel_tol > 0.0)) n.fail("abs_tol", "one of abs_tol, rel_tol must be positive");
  if (q.max_depth < 1) n.fail("max_depth", "must be >= 1");
  if (q.max_angular < 4) n.fail("max_angular", "must be >= 4");
  if (q.scheme == QuadratureConfig::Scheme::radial_adaptive && lattice.dim > 3)
    n.fail("scheme", "radial_adaptive supports D <= 3");
  return q;
}

TestFunction parse_test_function(const Node& n, const LatticeSpec& lattice) {
  n.allow_only({"family", "center", "width", "amplitude", "component", "support_radius"});
  const auto family = n.string("family", "gaussian");
  std::vector<double> e(static_cast<std::size_t>(lattice.components), 0.0);
  e[0] = 1.0;
  const auto center = n.numbers("center", std::vector<double>(static_cast<std::size_t>(lattice.dim), 0.0));
  const auto component = n.numbers("component", e);
  const double width = n.number("width");
  const double amplitude = n.number("amplitude", 1.0);
  if (static_cast<int>(center.size()) != lattice.dim) n.fail("center", "length must equal the lattice dimension");
  if (static_cast<int>(component.size()) != lattice.components)
    n.fail("component", "length must equal the number of components");
  TestFunction tf;
  guarded(n.path(), [&] {
    if (family == "gaussian") {
      if (n.has("support_radius")) n.fail("support_radius", "only the truncated family has a support radius");
      tf = TestFunction::gaussian(center, width, amplitude, component);
    } else if (family == "truncated") {
      tf = TestFunction::truncated(center, width, n.number("support_radius"), amplitude, component);
    } else {
      n.fail("family", "expected gaussian or truncated");
    }
  });
  return tf;
}

json emit_test_function(const TestFunction& tf) {
  ordered_json j;
  j["family"] = tf.family == BumpFamily::gaussian ? "gaussian" : "truncated";
  j["center"] = tf.center;
  j["width"] = tf.width;
  j["amplitude"] = tf.amplitude;
  j["component"] = tf.component;
  if (tf.family == BumpFamily::truncated) j["support_radius"] = tf.support_radius;
  return j;
}

OuterFunction parse_outer(const Node& n) {
  n.allow_only({"kind", "amplitude", "phase", "clip", "weights", "coefficients", "factors"});
  const auto kind = n.string("kind");
  OuterFunction f;
  if (kind == "cosine") {
    f = OuterFunction::cosine(n.numbers("weights"), n.number("amplitude", 1.0), n.number("phase", 0.0));
  } else if (kind == "bounded_rational") {
    f = OuterFunction::bounded_rational(n.numbers("weights"), n.number("amplitude", 1.0));
  } else if (kind == "clipped_polynomial") {
    f = OuterFunction::clipped_polynomial(n.matrix("coefficients"), n.number("clip"));
  } else if (kind == "product") {
    const Node fs = n.child("factors");
    if (!fs.value().is_array() || fs.value().empty()) n.fail("factors", "expected a nonempty array");
    std::vector<OuterFunction> factors;
    for (std::size_t i = 0; i < fs.value().size(); ++i)
      factors.push_back(parse_outer(Node(fs.value()[i], fs.path() + "/" + std::to_string(i))));
    f = OuterFunction::product(std::move(factors));
  } else {
    n.fail("kind", "expected cosine, bounded_rational, clipped_polynomial or product");
  }
  // the generic fields override factory defaults so that emitted text parses back exactly
  f.amplitude = n.number("amplitude", f.amplitude);
  f.phase = n.number("phase", f.phase);
  f.clip = n.number("clip", f.clip);
  if (f.arity() < 1) n.fail("an outer function needs at least one argument");
  return f;
}

ordered_json emit_outer(const OuterFunction& f) {
  ordered_json j;
  switch (f.kind) {
    case OuterFunction::Kind::cosine: j["kind"] = "cosine"; break;
    case OuterFunction::Kind::bounded_rational: j["kind"] = "bounded_rational"; break;
    case OuterFunction::Kind::clipped_polynomial: j["kind"] = "clipped_polynomial"; break;
    case OuterFunction::Kind::product: j["kind"] = "product"; break;
  }
  j["amplitude"] = f.amplitude;
  j["phase"] = f.phase;
  j["clip"] = f.clip;
  if (f.kind == OuterFunction::Kind::cosine || f.kind == OuterFunction::Kind::bounded_rational) j["weights"] = f.weights;
  if (f.kind == OuterFunction::Kind::clipped_polynomial) j["coefficients"] = f.coefficients;
  if (f.kind == OuterFunction::Kind::product) {
    j["factors"] = ordered_json::array();
    for (const auto& g : f.factors) j["factors"].push_back(emit_outer(g));
  }
  return j;
}

Lagrangian parse_lagrangian(const Node& n, int components) {
  n.allow_only({"kind", "jet_order", "coefficients", "clip", "amplitude", "scales", "strength", "rows",
                "bounded_constraint", "epsilon", "lambda", "sup", "value"});
  const auto kind = n.string("kind");
  Lagrangian l;
  guarded(n.path(), [&] {
    if (kind == "zero") {
      l = Lagrangian::zero();
    } else if (kind == "constant") {
      l = Lagrangian::constant(n.number("value"));
    } else if (kind == "clipped_quartic") {
      l = Lagrangian::clipped_quartic(n.number("lambda"), n.number("sup"));
    } else if (kind == "polynomial") {
      std::optional<double> clip;
      if (n.has("clip")) clip = n.number("clip");
      l = Lagrangian::polynomial(n.matrix("coefficients"), clip);
    } else if (kind == "bounded_rational") {
      l = Lagrangian::bounded_rational(n.numbers("scales"), n.number("amplitude"));
    } else if (kind == "quadratic") {
      l = Lagrangian::quadratic(n.matrix("rows"), n.number("strength"), static_cast<int>(n.integer("jet_order", 0)));
    } else if (kind == "sigma_model") {
      l = Lagrangian::sigma_model(n.number("strength"), n.boolean("bounded_constraint", false));
    } else {
      n.fail("kind",
             "expected zero, constant, clipped_quartic, polynomial, bounded_rational, quadratic or sigma_model");
    }
    if (n.has("jet_order")) l.jet_order = static_cast<int>(n.integer("jet_order"));
    if (n.has("epsilon")) {
      const double eps = n.number("epsilon");
      if (eps < 0.0) n.fail("epsilon", "must be >= 0");
      l.epsilon = eps;
    }
    l.validate(components);
  });
  return l;
}

ordered_json emit_lagrangian(const Lagrangian& l) {
  ordered_json j;
  switch (l.kind) {
    case Lagrangian::Kind::polynomial:
      j["kind"] = "polynomial";
      j["coefficients"] = l.coefficients;
      if (l.clip) j["clip"] = *l.clip;
      break;
    case Lagrangian::Kind::bounded_rational:
      j["kind"] = "bounded_rational";
      j["scales"] = l.scales;
      j["amplitude"] = l.amplitude;
      break;
    case Lagrangian::Kind::quadratic:
      j["kind"] = "quadratic";
      j["rows"] = l.rows;
      j["strength"] = l.strength;
      break;
    case Lagrangian::Kind::sigma_model:
      j["kind"] = "sigma_model";
      j["strength"] = l.strength;
      j["bounded_constraint"] = l.bounded_constraint;
      break;
  }
  j["jet_order"] = l.jet_order;
  j["epsilon"] = l.epsilon;
  return j;
}

DiffOperator parse_operator(const Node& n, const LatticeSpec& lattice) {
  n.allow_only({"name", "rows", "cols", "terms"});
  const auto name = n.string("name");
  DiffOperator op;
  if (n.has("terms")) {
    op.name = name;
    op.rows = static_cast<int>(n.integer("rows"));
    op.cols = static_cast<int>(n.integer("cols", lattice.components));
    const Node ts = n.child("terms");
    if (!ts.value().is_array()) n.fail("terms", "expected an array");
    for (std::size_t i = 0; i < ts.value().size(); ++i) {
      const Node t(ts.value()[i], ts.path() + "/" + std::to_string(i));
      t.allow_only({"alpha", "matrix"});
      op.terms.push_back({t.integers("alpha"), t.matrix("matrix")});
    }
  } else if (name == "identity") {
    op = DiffOperator::identity(lattice.components);
  } else if (name == "divergence") {
    op = DiffOperator::divergence(lattice.dim);
  } else if (name == "laplacian") {
    op = DiffOperator::laplacian(lattice.dim, lattice.components);
  } else {
    n.fail("name", "unknown operator; give explicit terms or one of identity, divergence, laplacian");
  }
  guarded(n.path(), [&] { op.validate(lattice.dim, lattice.components); });
  return op;
}

GrowthLaw parse_law(const Node& n) {
  n.allow_only({"base", "exponent", "log_power", "rate"});
  GrowthLaw g;
  g.base = n.number("base");
  g.exponent = n.number("exponent", 0.0);
  g.log_power = n.number("log_power", 0.0);
  g.rate = n.number("rate", 1.0);
  if (!(g.base > 0.0)) n.fail("base", "must be positive");
  if (!(g.rate > 0.0)) n.fail("rate", "must be positive");
  return g;
}

ordered_json emit_law(const GrowthLaw& g) {
  return ordered_json{{"base", g.base}, {"exponent", g.exponent}, {"log_power", g.log_power}, {"rate", g.rate}};
}

EuclideanTransform parse_transform(const Node& n, const LatticeSpec& lattice) {
  n.allow_only({"kind", "steps", "permutation", "axis"});
  const auto kind = n.string("kind");
  EuclideanTransform t;
  guarded(n.path(), [&] {
    if (kind == "identity") {
      t = EuclideanTransform::identity();
    } else if (kind == "translation") {
      t = EuclideanTransform::translation(n.integers("steps"));
    } else if (kind == "permutation") {
      t = EuclideanTransform::axis_permutation(n.integers("permutation"));
    } else if (kind == "flip") {
      t = EuclideanTransform::axis_flip(static_cast<int>(n.integer("axis")));
    } else {
      n.fail("kind", "expected identity, translation, permutation or flip");
    }
    t.validate(lattice);
  });
  return t;
}

ordered_json emit_transform(const EuclideanTransform& t) {
  ordered_json j;
  switch (t.kind) {
    case EuclideanTransform::Kind::identity: j["kind"] = "identity"; break;
    case EuclideanTransform::Kind::translation:
      j["kind"] = "translation";
      j["steps"] = t.steps;
      break;
    case EuclideanTransform::Kind::permutation:
      j["kind"] = "permutation";
      j["permutation"] = t.permutation;
      break;
    case EuclideanTransform::Kind::flip:
      j["kind"] = "flip";
      j["axis"] = t.axis;
      break;
  }
  return j;
}

const char* method_name(PenalizedSolveOptions::Method m) {
  switch (m) {
    case PenalizedSolveOptions::Method::dense: return "dense";
    case PenalizedSolveOptions::Method::cg: return "cg";
    default: return "automatic";
  }
}

const char* format_name(OutputFormat f) {
  switch (f) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::both: return "both";
    default: return "json";
  }
}

void parse_commands(const Node& n, RunConfig& c) {
  n.allow_only({"covariance", "sample", "estimate", "constrain-sweep", "verify-rp", "verify-invariance",
                "verify-markov", "schedule-check"});
  if (n.has("covariance")) {
    const Node b = n.child("covariance");
    b.allow_only({"pairs"});
    const Node ps = b.child("pairs");
    if (!ps.value().is_array()) b.fail("pairs", "expected an array of [f, g] name pairs");
    for (std::size_t i = 0; i < ps.value().size(); ++i) {
      const auto& p = ps.value()[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
        throw ConfigError(ps.path() + "/" + std::to_string(i), "expected [f, g] with two test-function names");
      c.covariance.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
  }
  if (n.has("sample")) {
    const Node b = n.child("sample");
    b.allow_only({"snapshots", "probes", "sigmas", "allowed_failures"});
    c.sample.snapshots = b.count("snapshots", 0);
    c.sample.probes = b.strings("probes");
    c.sample.sigmas = b.number("sigmas", 4.0);
    c.sample.allowed_failures = b.count("allowed_failures", 2);
  }
  if (n.has("estimate")) {
    const Node b = n.child("estimate");
    b.allow_only({"observables", "limit_tolerance"});
    c.estimate.observables = b.strings("observables");
    c.estimate.limit_tolerance = b.number("limit_tolerance", 1e-3);
  }
  if (n.has("constrain-sweep")) {
    const Node b = n.child("constrain-sweep");
    b.allow_only({"f", "g", "limit_tolerance", "method", "dense_limit", "solver_tolerance"});
    c.sweep.f = b.string("f");
    c.sweep.g = b.string("g", c.sweep.f);
    c.sweep.limit_tolerance = b.number("limit_tolerance", 1e-6);
    const auto m = b.string("method", "automatic");
    if (m == "dense") c.sweep.method = PenalizedSolveOptions::Method::dense;
    else if (m == "cg") c.sweep.method = PenalizedSolveOptions::Method::cg;
    else if (m != "automatic") b.fail("method", "expected automatic, dense or cg");
    c.sweep.dense_limit = b.count("dense_limit", 2048);
    c.sweep.solver_tolerance = b.number("solver_tolerance", 1e-12);
    if (!(c.sweep.solver_tolerance > 0.0)) b.fail("solver_tolerance", "must be positive");
  }
  if (n.has("verify-rp")) {
    const Node b = n.child("verify-rp");
    b.allow_only({"observables", "sigmas", "free_tolerance", "cross_check"});
    c.rp.observables = b.strings("observables");
    c.rp.sigmas = b.number("sigmas", 4.0);
    c.rp.free_tolerance = b.number("free_tolerance", 1e-12);
    c.rp.cross_check = b.boolean("cross_check", false);
  }
  if (n.has("verify-invariance")) {
    const Node b = n.child("verify-invariance");
    b.allow_only({"observable", "transform", "calibration_index", "sigmas", "c0"});
    c.invariance.observable = b.string("observable");
    c.invariance.transform = parse_transform(b.child("transform"), c.lattice);
    c.invariance.calibration_index = static_cast<int>(b.integer("calibration_index", 1));
    c.invariance.sigmas = b.number("sigmas", 3.0);
    if (b.has("c0")) {
      c.invariance.c0 = b.number("c0");
      if (*c.invariance.c0 < 0.0) b.fail("c0", "must be >= 0");
    }
    if (c.invariance.calibration_index < 1) b.fail("calibration_index", "must be >= 1");
  }
  if (n.has("verify-markov")) {
    const Node b = n.child("verify-markov");
    b.allow_only({"band_width", "band_offset", "tolerance"});
    c.markov.band_width = static_cast<int>(b.integer("band_width", 1));
    c.markov.band_offset = static_cast<int>(b.integer("band_offset", 0));
    c.markov.tolerance = b.number("tolerance", 1e-10);
  }
  if (n.has("schedule-check")) {
    const Node b = n.child("schedule-check");
    b.allow_only({"scan_limit"});
    c.schedule_check.scan_limit = static_cast<int>(b.integer("scan_limit", 10000));
    if (c.schedule_check.scan_limit < 10) b.fail("scan_limit", "must be >= 10");
  }
}

}  // namespace

MonteCarloConfig RunConfig::monte_carlo(std::uint64_t stream_seed) const {
  MonteCarloConfig mc;
  mc.samples = samples;
  mc.seed = stream_seed;
  mc.threads = threads;
  mc.min_ess = min_ess;
  mc.max_samples = max_samples;
  return mc;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"covariance",      "sample",    "estimate",
                                                 "constrain-sweep", "verify-rp", "verify-invariance",
                                                 "verify-markov",   "schedule-check"};
  return names;
}

bool is_command(const std::string& name) {
  for (const auto& c : command_names())
    if (c == name) return true;
  return false;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("malformed JSON: ") + e.what());
  }
  const Node root(doc, "");
  root.allow_only({"schema", "seed", "threads", "lattice", "quadrature", "samples", "test_functions", "observables",
                   "lagrangian", "constraints", "schedule", "commands", "output"});
  if (root.string("schema") != kConfigSchema) root.fail("schema", std::string("expected \"") + kConfigSchema + "\"");

  RunConfig c;
  if (root.has("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      root.fail("seed", "expected an unsigned 64-bit integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.threads = static_cast<int>(root.integer("threads", 1));
  if (c.threads < 0) root.fail("threads", "must be >= 0 (0 = all cores)");

  c.lattice = parse_lattice(root.child("lattice"));
  c.quadrature = root.has("quadrature") ? parse_quadrature(root.child("quadrature"), c.lattice)
                                        : parse_quadrature(Node(json::object(), "/quadrature"), c.lattice);

  if (root.has("samples")) {
    const Node s = root.child("samples");
    s.allow_only({"count", "min_ess", "max_samples"});
    c.samples = s.count("count", c.samples);
    c.min_ess = s.number("min_ess", c.min_ess);
    c.max_samples = s.count("max_samples", c.max_samples);
    if (c.samples < 2) s.fail("count", "need at least 2 samples");
    if (!(c.min_ess >= 1.0)) s.fail("min_ess", "must be >= 1");
    if (c.max_samples < c.samples) s.fail("max_samples", "must be >= count");
  }

  if (root.has("test_functions")) {
    const Node tfs = root.child("test_functions");
    tfs.require_object();
    for (auto it = doc["test_functions"].begin(); it != doc["test_functions"].end(); ++it)
      c.test_functions.emplace(it.key(), parse_test_function(tfs.child(it.key()), c.lattice));
  }

  if (root.has("observables")) {
    const Node obs = root.child("observables");
    obs.require_object();
    for (auto it = doc["observables"].begin(); it != doc["observables"].end(); ++it) {
      const Node o = obs.child(it.key());
      o.allow_only({"outer", "inner"});
      const auto outer = parse_outer(o.child("outer"));
      const auto names = o.strings("inner");
      std::vector<TestFunction> inner;
      for (std::size_t i = 0; i < names.size(); ++i) {
        auto f = c.test_functions.find(names[i]);
        if (f == c.test_functions.end())
          throw ConfigError(o.at_path("inner") + "/" + std::to_string(i), "unknown test function '" + names[i] + "'");
        inner.push_back(f->second);
      }
      if (static_cast<int>(inner.size()) != outer.arity())
        o.fail("inner", "outer function takes " + std::to_string(outer.arity()) + " arguments, got " +
                            std::to_string(inner.size()));
      c.observables.emplace(it.key(), CylindricalFunction(outer, std::move(inner)));
      c.observable_inner.emplace(it.key(), names);
    }
  }

  if (root.has("lagrangian")) c.lagrangian = parse_lagrangian(root.child("lagrangian"), c.lattice.components);

  if (root.has("constraints")) {
    const Node cs = root.child("constraints");
    cs.allow_only({"tau", "operators"});
    c.has_constraints = true;
    c.constraints.tau = cs.number("tau", c.constraints.tau);
    if (cs.has("operators")) {
      const Node ops = cs.child("operators");
      if (!ops.value().is_array()) cs.fail("operators", "expected an array");
      for (std::size_t i = 0; i < ops.value().size(); ++i)
        c.constraints.ops.push_back(parse_operator(Node(ops.value()[i], ops.path() + "/" + std::to_string(i)), c.lattice));
    }
    guarded(cs.path(), [&] { c.constraints.validate(c.lattice.dim, c.lattice.components); });
  }

  c.schedule.dim = c.lattice.dim;
  if (root.has("schedule")) {
    const Node s = root.child("schedule");
    s.allow_only({"r", "Lambda", "M", "a", "indices"});
    c.schedule.r = parse_law(s.child("r"));
    c.schedule.Lambda = parse_law(s.child("Lambda"));
    c.schedule.M = s.has("M") ? parse_law(s.child("M")) : GrowthLaw{};
    if (s.has("a")) c.schedule.a = parse_law(s.child("a"));
    if (s.has("indices")) {
      c.indices = s.integers("indices");
      if (c.indices.empty()) s.fail("indices", "need at least one index");
      for (std::size_t i = 0; i < c.indices.size(); ++i)
        if (c.indices[i] < 1) throw ConfigError(s.at_path("indices") + "/" + std::to_string(i), "indices start at 1");
    }
  }

  if (root.has("commands")) parse_commands(root.child("commands"), c);

  if (root.has("output")) {
    const Node o = root.child("output");
    o.allow_only({"directory", "prefix", "format"});
    c.output.directory = o.string("directory", ".");
    c.output.prefix = o.string("prefix", "rpfield");
    const auto f = o.string("format", "json");
    if (f == "csv") c.output.format = OutputFormat::csv;
    else if (f == "both") c.output.format = OutputFormat::both;
    else if (f != "json") o.fail("format", "expected json, csv or both");
    if (c.output.prefix.empty() || c.output.prefix.find('/') != std::string::npos)
      o.fail("prefix", "must be a nonempty file name stem");
  }
  return c;
}

std::string emit_config(const RunConfig& c) {
  ordered_json j;
  j["schema"] = kConfigSchema;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["lattice"] = ordered_json{{"dim", c.lattice.dim},
                              {"sites", c.lattice.sites},
                              {"length", c.lattice.length},
                              {"components", c.lattice.components}};
  j["quadrature"] = ordered_json{
      {"scheme", c.quadrature.scheme == QuadratureConfig::Scheme::lattice_sum ? "lattice_sum" : "radial_adaptive"},
      {"abs_tol", c.quadrature.abs_tol},
      {"rel_tol", c.quadrature.rel_tol},
      {"max_depth", c.quadrature.max_depth},
      {"max_angular", c.quadrature.max_angular}};
  j["samples"] = ordered_json{{"count", c.samples}, {"min_ess", c.min_ess}, {"max_samples", c.max_samples}};

  j["test_functions"] = ordered_json::object();
  for (const auto& [name, tf] : c.test_functions) j["test_functions"][name] = emit_test_function(tf);
  j["observables"] = ordered_json::object();
  for (const auto& [name, F] : c.observables)
    j["observables"][name] = ordered_json{{"outer", emit_outer(F.outer)}, {"inner", c.observable_inner.at(name)}};

  j["lagrangian"] = emit_lagrangian(c.lagrangian);
  if (c.has_constraints) {
    ordered_json ops = ordered_json::array();
    for (const auto& op : c.constraints.ops) {
      ordered_json terms = ordered_json::array();
      for (const auto& t : op.terms) terms.push_back(ordered_json{{"alpha", t.alpha}, {"matrix", t.matrix}});
      ops.push_back(ordered_json{{"name", op.name}, {"rows", op.rows}, {"cols", op.cols}, {"terms", terms}});
    }
    j["constraints"] = ordered_json{{"tau", c.constraints.tau}, {"operators", ops}};
  }

  ordered_json s{{"r", emit_law(c.schedule.r)}, {"Lambda", emit_law(c.schedule.Lambda)}, {"M", emit_law(c.schedule.M)}};
  if (c.schedule.a) s["a"] = emit_law(*c.schedule.a);
  s["indices"] = c.indices;
  j["schedule"] = s;

  ordered_json cmd;
  ordered_json pairs = ordered_json::array();
  for (const auto& [f, g] : c.covariance.pairs) pairs.push_back({f, g});
  cmd["covariance"] = ordered_json{{"pairs", pairs}};
  cmd["sample"] = ordered_json{{"snapshots", c.sample.snapshots},
                               {"probes", c.sample.probes},
                               {"sigmas", c.sample.sigmas},
                               {"allowed_failures", c.sample.allowed_failures}};
  cmd["estimate"] =
      ordered_json{{"observables", c.estimate.observables}, {"limit_tolerance", c.estimate.limit_tolerance}};
  ordered_json sweep;
  if (!c.sweep.f.empty()) {
    sweep["f"] = c.sweep.f;
    sweep["g"] = c.sweep.g;
    sweep["limit_tolerance"] = c.sweep.limit_tolerance;
    sweep["method"] = method_name(c.sweep.method);
    sweep["dense_limit"] = c.sweep.dense_limit;
    sweep["solver_tolerance"] = c.sweep.solver_tolerance;
    cmd["constrain-sweep"] = sweep;
  }
  cmd["verify-rp"] = ordered_json{{"observables", c.rp.observables},
                                  {"sigmas", c.rp.sigmas},
                                  {"free_tolerance", c.rp.free_tolerance},
                                  {"cross_check", c.rp.cross_check}};
  if (!c.invariance.observable.empty()) {
    ordered_json inv{{"observable", c.invariance.observable},
                     {"transform", emit_transform(c.invariance.transform)},
                     {"calibration_index", c.invariance.calibration_index},
                     {"sigmas", c.invariance.sigmas}};
    if (c.invariance.c0) inv["c0"] = *c.invariance.c0;
    cmd["verify-invariance"] = inv;
  }
  cmd["verify-markov"] = ordered_json{{"band_width", c.markov.band_width},
                                      {"band_offset", c.markov.band_offset},
                                      {"tolerance", c.markov.tolerance}};
  cmd["schedule-check"] = ordered_json{{"scan_limit", c.schedule_check.scan_limit}};
  j["commands"] = cmd;

  j["output"] = ordered_json{
      {"directory", c.output.directory}, {"prefix", c.output.prefix}, {"format", format_name(c.output.format)}};
  return j.dump(2) + "\n";
}

namespace {

const TestFunction& lookup_tf(const RunConfig& c, const std::string& name, const std::string& path) {
  auto it = c.test_functions.find(name);
  if (it == c.test_functions.end()) throw ConfigError(path, "unknown test function '" + name + "'");
  return it->second;
}

const CylindricalFunction& lookup_obs(const RunConfig& c, const std::string& name, const std::string& path) {
  auto it = c.observables.find(name);
  if (it == c.observables.end()) throw ConfigError(path, "unknown observable '" + name + "'");
  return it->second;
}

void check_schedule_margins(const RunConfig& c, bool need_condition) {
  const double half = c.lattice.length / 2.0;
  for (std::size_t i = 0; i < c.indices.size(); ++i) {
    const auto pt = c.schedule.at(c.indices[i]);
    const std::string at = "/schedule/indices/" + std::to_string(i);
    if (!(pt.r < half)) throw ConfigError(at, "r_n = " + std::to_string(pt.r) + " does not fit in the torus (L/2)");
    if (!(pt.delta() < half)) throw ConfigError(at, "1/Lambda_n exceeds L/2");
    if (!(pt.M > 0.0)) throw ConfigError(at, "M_n must be positive");
    if (c.lagrangian.bounded()) {
      const double sup = std::max(std::abs(c.lagrangian.upper_bound()), std::abs(c.lagrangian.lower_bound()));
      if (sup > pt.M * (1.0 + 1e-12))
        throw ConfigError(at, "M_n = " + std::to_string(pt.M) + " is below sup |L| = " + std::to_string(sup));
    }
  }
  if (need_condition) {
    const auto check = check_schedule(c.schedule);
    if (!check.pass) throw ConfigError("/schedule", "schedule condition fails: " + check.reason);
  }
}

void check_observables_fit(const RunConfig& c, const std::vector<std::string>& names, const std::string& path) {
  if (names.empty()) throw ConfigError(path, "no observables listed");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& F = lookup_obs(c, names[i], path + "/" + std::to_string(i));
    for (const auto& g : F.inner) guarded(path + "/" + std::to_string(i), [&] { g.check_fits(c.lattice); });
  }
}

}  // namespace

void validate_config(const RunConfig& c, const std::string& command) {
  if (!is_command(command)) throw ConfigError("/commands", "unknown command '" + command + "'");
  for (const auto& [name, tf] : c.test_functions)
    guarded("/test_functions/" + name, [&] { tf.check_fits(c.lattice); });

  if (command == "covariance") {
    if (c.covariance.pairs.empty()) throw ConfigError("/commands/covariance/pairs", "no pairs listed");
    for (std::size_t i = 0; i < c.covariance.pairs.size(); ++i) {
      const std::string at = "/commands/covariance/pairs/" + std::to_string(i);
      lookup_tf(c, c.covariance.pairs[i].first, at + "/0");
      lookup_tf(c, c.covariance.pairs[i].second, at + "/1");
    }
  } else if (command == "sample") {
    for (std::size_t i = 0; i < c.sample.probes.size(); ++i)
      lookup_tf(c, c.sample.probes[i], "/commands/sample/probes/" + std::to_string(i));
  } else if (command == "estimate") {
    check_observables_fit(c, c.estimate.observables, "/commands/estimate/observables");
    check_schedule_margins(c, true);
  } else if (command == "constrain-sweep") {
    if (c.sweep.f.empty()) throw ConfigError("/commands/constrain-sweep/f", "missing field");
    lookup_tf(c, c.sweep.f, "/commands/constrain-sweep/f");
    lookup_tf(c, c.sweep.g, "/commands/constrain-sweep/g");
    if (!c.has_constraints || c.constraints.empty())
      throw ConfigError("/constraints", "constrain-sweep needs at least one constraint operator");
    if (!c.schedule.a) throw ConfigError("/schedule/a", "constrain-sweep needs a penalty law a_n");
    check_schedule_margins(c, false);
  } else if (command == "verify-rp") {
    check_observables_fit(c, c.rp.observables, "/commands/verify-rp/observables");
    if (!c.lagrangian.bounded()) throw ConfigError("/lagrangian", "reflection positivity needs a bounded Lagrangian");
    check_schedule_margins(c, true);
    std::vector<CylindricalFunction> Fs;
    for (const auto& name : c.rp.observables) Fs.push_back(c.observables.at(name));
    for (std::size_t i = 0; i < c.indices.size(); ++i)
      guarded("/commands/verify-rp/observables", [&] { check_upper_support(Fs, c.schedule.at(c.indices[i])); });
  } else if (command == "verify-invariance") {
    if (c.invariance.observable.empty()) throw ConfigError("/commands/verify-invariance/observable", "missing field");
    const auto& F = lookup_obs(c, c.invariance.observable, "/commands/verify-invariance/observable");
    guarded("/commands/verify-invariance/transform", [&] {
      for (const auto& g : F.inner) g.check_fits(c.lattice);
      apply_transform(F, c.invariance.transform, c.lattice);
    });
    if (!c.lagrangian.bounded())
      throw ConfigError("/lagrangian", "the invariance bound needs a bounded Lagrangian (sup = M_n)");
    check_schedule_margins(c, true);
    if (c.indices.size() < 2) throw ConfigError("/schedule/indices", "the invariance trend needs at least two indices");
  } else if (command == "verify-markov") {
    if (c.lattice.volume() > 4096) throw ConfigError("/lattice", "verify-markov needs N^D <= 4096");
    if (c.markov.band_width < 1 || c.markov.band_width >= c.lattice.sites / 2)
      throw ConfigError("/commands/verify-markov/band_width", "bands must leave both sides nonempty");
  } else if (command == "schedule-check") {
    // the check itself is the result
  }
}

}  // namespace rpf
