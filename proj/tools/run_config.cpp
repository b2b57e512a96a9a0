#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "polyharm/errors.hpp"

namespace polyharm::cli {

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"problem",
     {"N", "m", "p", "q", "domain", "length", "width", "radius", "nodes", "nodes_y", "bc", "f", "f_q", "f_a", "f_L",
      "f_nu", "f_coefficient", "f_table", "alpha"}},
    {"solver", {"path_nodes", "gradient_tolerance", "max_iterations", "shrink", "max_halvings", "max_doublings"}},
    {"sweep",
     {"lambdas", "lambda_min", "lambda_max", "lambda_points", "include_zero", "amplitude_cap", "candidate_threshold",
      "residual_factor", "h1_s0", "jobs"}},
    {"truncate", {"samples", "range"}},
    {"identity", {"field", "a"}},
    {"probe", {"radius", "random_points"}},
};

// Keys of [problem] that only some nonlinearities read.
const std::map<std::string, std::set<std::string>> kNonlinearityKeys = {
    {"zero", {}},
    {"pure-power", {"f_q", "f_coefficient"}},
    {"power-exp", {"f_q", "f_a"}},
    {"linear-exp", {"f_L", "f_q"}},
    {"negative-singular", {"f_nu", "f_a"}},
    {"sampled", {"f_table"}},
};

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ValidationError("config key " + key + ": " + what);
}

std::string strip_quotes(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
  return v;
}

class Values {
 public:
  explicit Values(const boost::property_tree::ptree& tree) {
    for (const auto& [section, body] : tree) {
      if (body.empty()) fail(section, "keys must sit inside a [section]");
      const auto known = kSchema.find(section);
      if (known == kSchema.end()) throw ValidationError("config: unknown section [" + section + "]");
      for (const auto& [key, value] : body) {
        if (!known->second.count(key)) fail(section + "." + key, "unknown key");
        values_[section + "." + key] = strip_quotes(value.get_value<std::string>());
      }
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  template <class T>
  void read(const std::string& key, T& out) const {
    const auto v = text(key);
    if (v) out = convert<T>(key, *v);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) const {
    const auto v = text(key);
    if (v) out = convert<T>(key, *v);
  }

  template <class T>
  static T convert(const std::string& key, const std::string& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      fail(key, "expected a boolean, got '" + v + "'");
    } else if constexpr (std::is_same_v<T, Rational>) {
      try {
        return parse_rational(v);
      } catch (const ValidationError&) {
        fail(key, "expected a rational \"a/b\", got '" + v + "'");
      }
    } else {
      T out{};
      const char* end = v.data() + v.size();
      const auto [ptr, ec] = std::from_chars(v.data(), end, out);
      if (ec != std::errc() || ptr != end) {
        if constexpr (std::is_integral_v<T>) fail(key, "expected an integer, got '" + v + "'");
        else fail(key, "expected a number, got '" + v + "'");
      }
      if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(out)) fail(key, "expected a finite number, got '" + v + "'");
      return out;
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) fail(key, "empty entry in list");
    out.push_back(Values::convert<double>(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) fail(key, "empty list");
  return out;
}

int default_nodes(Shape shape) { return shape == Shape::Rectangle ? 40 : 400; }

void validate_exponents(const RunConfig& c) {
  const bool ball = c.shape == Shape::RadialBall;
  const bool needs_dimension = ball || c.subcommand == Subcommand::Exponents;
  if (needs_dimension && c.dimension < 2 * c.order + 1) fail("problem.N", "N ≥ 2m+1 violated");

  const bool p_matters = c.subcommand != Subcommand::Spectrum &&
                         !(c.subcommand == Subcommand::Identity && c.identity_field == IdentityField::Manufactured);
  if (!p_matters) return;
  if (c.dimension >= 2 * c.order + 1) {
    const PClass cls = classify_p(ProblemExponents(c.dimension, c.order, c.p, c.q));
    const bool wide_ok = c.subcommand == Subcommand::Sweep && cls == PClass::WideSubcritical;
    if (cls != PClass::StrictSubcritical && !wide_ok)
      fail("problem.p", "p is " + std::string(to_string(cls)) + "; need 1 " +
                            (c.subcommand == Subcommand::Sweep ? "≤" : "<") + " p < (N+2m)/(N-2m) = " +
                            to_string(critical_exponent(c.dimension, c.order)));
  } else if (c.subcommand == Subcommand::Sweep ? c.p < 1 : c.p <= 1) {
    fail("problem.p", c.subcommand == Subcommand::Sweep ? "p ≥ 1 violated" : "p > 1 violated");
  }
}

}  // namespace

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Exponents: return "exponents";
    case Subcommand::Truncate: return "truncate";
    case Subcommand::Solve: return "solve";
    case Subcommand::TwoSolutions: return "two-solutions";
    case Subcommand::Identity: return "identity";
    case Subcommand::Sweep: return "sweep";
    case Subcommand::Spectrum: return "spectrum";
  }
  return "?";
}

Subcommand parse_subcommand(const std::string& name) {
  for (auto s : {Subcommand::Exponents, Subcommand::Truncate, Subcommand::Solve, Subcommand::TwoSolutions,
                 Subcommand::Identity, Subcommand::Sweep, Subcommand::Spectrum})
    if (to_string(s) == name) return s;
  throw ValidationError("unknown subcommand '" + name + "'");
}

DomainSpec RunConfig::domain() const {
  switch (shape) {
    case Shape::Interval: return DomainSpec::interval(length, nodes);
    case Shape::Rectangle: return DomainSpec::rectangle(length, width, nodes, nodes_y);
    case Shape::RadialBall: return DomainSpec::radial_ball(length, dimension, nodes);
  }
  throw InternalError("unhandled shape");
}

NonlinearitySpec RunConfig::nonlinearity() const {
  const auto& pr = f.params;
  switch (parse_nonlinearity_kind(f.kind)) {
    case NonlinearityKind::Zero: return NonlinearitySpec::zero();
    case NonlinearityKind::PurePower: return NonlinearitySpec::pure_power(pr.q, pr.coefficient);
    case NonlinearityKind::PowerExp: return NonlinearitySpec::power_exp(pr.q, pr.a);
    case NonlinearityKind::LinearExp: return NonlinearitySpec::linear_exp(pr.L, pr.q);
    case NonlinearityKind::NegativeSingular: return NonlinearitySpec::negative_singular(pr.nu, pr.a);
    case NonlinearityKind::Sampled: return NonlinearitySpec::from_csv(f.table);
  }
  throw InternalError("unhandled nonlinearity");
}

Problem RunConfig::problem() const {
  Problem pr;
  pr.domain = domain();
  pr.order = order;
  pr.bc = bc;
  pr.p = p;
  pr.q = q;
  pr.f = nonlinearity();
  return pr;
}

std::vector<double> RunConfig::probe() const { return probe_grid(probe_radius, seed, probe_random_points); }

RunConfig parse_config(const std::string& text, Subcommand subcommand, std::uint64_t seed) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  const Values v(tree);

  RunConfig c;
  c.subcommand = subcommand;
  c.seed = seed;

  std::string shape = to_string(Shape::RadialBall);
  v.read("problem.domain", shape);
  try {
    c.shape = parse_shape(shape);
  } catch (const ValidationError& e) {
    fail("problem.domain", e.what());
  }
  if (c.shape != Shape::RadialBall && subcommand != Subcommand::Exponents) {
    const int implied = c.shape == Shape::Interval ? 1 : 2;
    if (v.has("problem.N") && Values::convert<int>("problem.N", *v.text("problem.N")) != implied)
      fail("problem.N", to_string(c.shape) + " fixes N = " + std::to_string(implied));
    c.dimension = implied;
  }
  v.read("problem.N", c.dimension);
  v.read("problem.m", c.order);
  if (c.order < 1) fail("problem.m", "m ≥ 1 violated");
  v.read("problem.p", c.p);
  if (c.p <= 0) fail("problem.p", "p > 0 violated");

  if (c.shape == Shape::RadialBall) {
    if (v.has("problem.length")) fail("problem.length", "use radius for radial-ball");
    if (v.has("problem.width")) fail("problem.width", "does not apply to radial-ball");
    v.read("problem.radius", c.length);
  } else {
    if (v.has("problem.radius")) fail("problem.radius", "applies to radial-ball only");
    if (c.shape == Shape::Interval && v.has("problem.width")) fail("problem.width", "does not apply to interval");
    v.read("problem.length", c.length);
    v.read("problem.width", c.width);
  }
  c.nodes = default_nodes(c.shape);
  v.read("problem.nodes", c.nodes);
  if (c.shape == Shape::Rectangle) {
    c.nodes_y = c.nodes;
    v.read("problem.nodes_y", c.nodes_y);
  } else if (v.has("problem.nodes_y")) {
    fail("problem.nodes_y", "applies to rectangle only");
  }

  std::string bc = to_string(BoundaryCondition::Dirichlet);
  v.read("problem.bc", bc);
  try {
    c.bc = parse_boundary_condition(bc);
  } catch (const ValidationError& e) {
    fail("problem.bc", e.what());
  }
  if (c.bc == BoundaryCondition::Dirichlet && c.order > 2) fail("problem.bc", "Dirichlet supported for m ≤ 2");

  v.read("problem.f", c.f.kind);
  const auto kind_keys = kNonlinearityKeys.find(c.f.kind);
  if (kind_keys == kNonlinearityKeys.end()) fail("problem.f", "unknown nonlinearity id '" + c.f.kind + "'");
  for (const std::string key : {"f_q", "f_a", "f_L", "f_nu", "f_coefficient", "f_table"})
    if (v.has("problem." + key) && !kind_keys->second.count(key))
      fail("problem." + key, "does not apply to f = " + c.f.kind);
  for (const auto& key : kind_keys->second)
    if (key != "f_coefficient" && !v.has("problem." + key)) fail("problem." + key, "required for f = " + c.f.kind);
  v.read("problem.f_q", c.f.params.q);
  v.read("problem.f_a", c.f.params.a);
  v.read("problem.f_L", c.f.params.L);
  v.read("problem.f_nu", c.f.params.nu);
  v.read("problem.f_coefficient", c.f.params.coefficient);
  v.read("problem.f_table", c.f.table);
  try {
    (void)c.nonlinearity();
  } catch (const ValidationError& e) {
    fail("problem.f", e.what());
  }

  v.read("problem.q", c.q);
  if (!c.q && (c.f.kind == "pure-power" || c.f.kind == "power-exp")) {
    // q defaults to the growth exponent of f when f is a power.
    try {
      c.q = parse_rational(*v.text("problem.f_q"));
    } catch (const ValidationError&) {
      fail("problem.q", "cannot default to f_q = " + *v.text("problem.f_q") + "; set q as \"a/b\"");
    }
  }
  if (c.q && *c.q <= 0) fail("problem.q", "q > 0 violated");
  if (subcommand == Subcommand::Sweep) {
    if (!c.q) fail("problem.q", "required for sweep");
    if (*c.q <= c.p) fail("problem.q", "q > p violated");
    if (c.bc != BoundaryCondition::Dirichlet && c.order > 1) fail("problem.bc", "sweep requires dirichlet");
  }
  if (subcommand == Subcommand::TwoSolutions && c.bc != BoundaryCondition::Navier && c.order > 1)
    fail("problem.bc", "two-solutions requires navier for m ≥ 2");

  v.read("problem.alpha", c.alpha);
  if (!(c.alpha > 0 && c.alpha <= 1)) fail("problem.alpha", "0 < alpha ≤ 1 violated");

  try {
    c.domain().validate();
  } catch (const ValidationError& e) {
    fail("problem.nodes", e.what());
  }

  v.read("solver.path_nodes", c.solve.path_nodes);
  v.read("solver.gradient_tolerance", c.solve.gradient_tolerance);
  v.read("solver.max_iterations", c.solve.max_iterations);
  v.read("solver.shrink", c.solve.shrink);
  v.read("solver.max_halvings", c.solve.max_halvings);
  v.read("solver.max_doublings", c.solve.max_doublings);
  try {
    c.solve.validate();
  } catch (const ValidationError& e) {
    fail("solver", e.what());
  }

  if (const auto list = v.text("sweep.lambdas")) {
    for (const std::string key : {"lambda_min", "lambda_max", "lambda_points", "include_zero"})
      if (v.has("sweep." + key)) fail("sweep." + key, "conflicts with sweep.lambdas");
    c.lambda_list = parse_list("sweep.lambdas", *list);
    c.sweep.lambdas = c.lambda_list;
  } else {
    v.read("sweep.lambda_min", c.lambda_min);
    v.read("sweep.lambda_max", c.lambda_max);
    v.read("sweep.lambda_points", c.lambda_points);
    v.read("sweep.include_zero", c.include_zero);
    if (!(c.lambda_min > 0)) fail("sweep.lambda_min", "lambda_min > 0 violated");
    if (c.lambda_points < 1) fail("sweep.lambda_points", "lambda_points ≥ 1 violated");
    if (c.lambda_points > 1 && !(c.lambda_max > c.lambda_min)) fail("sweep.lambda_max", "lambda_max > lambda_min violated");
    if (c.include_zero) c.sweep.lambdas.push_back(0.0);
    const double lo = std::log10(c.lambda_min), hi = std::log10(c.lambda_max);
    for (int k = 0; k < c.lambda_points; ++k)
      c.sweep.lambdas.push_back(c.lambda_points == 1 ? c.lambda_min
                                                     : std::pow(10.0, lo + (hi - lo) * k / (c.lambda_points - 1)));
  }
  v.read("sweep.amplitude_cap", c.sweep.amplitude_cap);
  v.read("sweep.candidate_threshold", c.sweep.candidate_threshold);
  v.read("sweep.residual_factor", c.sweep.residual_factor);
  v.read("sweep.h1_s0", c.sweep.h1_s0);
  v.read("sweep.jobs", c.sweep.jobs);
  if (!(c.sweep.amplitude_cap > 0)) fail("sweep.amplitude_cap", "amplitude_cap > 0 violated");
  if (!(c.sweep.candidate_threshold > 0)) fail("sweep.candidate_threshold", "candidate_threshold > 0 violated");
  if (!(c.sweep.residual_factor > 0)) fail("sweep.residual_factor", "residual_factor > 0 violated");
  if (!(c.sweep.h1_s0 > 0)) fail("sweep.h1_s0", "h1_s0 > 0 violated");
  if (c.sweep.jobs < 1) fail("sweep.jobs", "jobs ≥ 1 violated");
  c.sweep.solve = c.solve;

  v.read("truncate.samples", c.samples);
  v.read("truncate.range", c.sample_range);
  if (c.samples < 2) fail("truncate.samples", "samples ≥ 2 violated");
  if (c.sample_range && !(*c.sample_range > 0)) fail("truncate.range", "range > 0 violated");

  std::string field = "solution";
  v.read("identity.field", field);
  if (field == "solution") c.identity_field = IdentityField::Solution;
  else if (field == "manufactured") c.identity_field = IdentityField::Manufactured;
  else fail("identity.field", "expected solution or manufactured, got '" + field + "'");
  v.read("identity.a", c.identity_a);
  validate_exponents(c);
  if (c.identity_field == IdentityField::Manufactured && (c.shape != Shape::RadialBall || c.order != 1))
    fail("identity.field", "manufactured field needs domain = radial-ball and m = 1");
  if (subcommand == Subcommand::Identity && c.bc == BoundaryCondition::Navier && c.order > 1)
    fail("problem.bc", "identity needs a boundary trace: m = 1 or dirichlet m = 2");

  v.read("probe.radius", c.probe_radius);
  v.read("probe.random_points", c.probe_random_points);
  if (!(c.probe_radius > 0)) fail("probe.radius", "radius > 0 violated");
  if (c.probe_random_points < 0) fail("probe.random_points", "random_points ≥ 0 violated");
  return c;
}

nlohmann::ordered_json config_echo(const RunConfig& c) {
  using nlohmann::ordered_json;
  ordered_json problem;
  problem["N"] = c.dimension;
  problem["m"] = c.order;
  problem["p"] = to_string(c.p);
  problem["q"] = c.q ? ordered_json(to_string(*c.q)) : ordered_json(nullptr);
  problem["domain"] = to_string(c.shape);
  if (c.shape == Shape::RadialBall) {
    problem["radius"] = c.length;
  } else {
    problem["length"] = c.length;
    if (c.shape == Shape::Rectangle) problem["width"] = c.width;
  }
  problem["nodes"] = c.nodes;
  if (c.shape == Shape::Rectangle) problem["nodes_y"] = c.nodes_y;
  problem["bc"] = to_string(c.bc);
  problem["f"] = c.f.kind;
  const auto& keys = kNonlinearityKeys.at(c.f.kind);
  if (keys.count("f_q")) problem["f_q"] = c.f.params.q;
  if (keys.count("f_a")) problem["f_a"] = c.f.params.a;
  if (keys.count("f_L")) problem["f_L"] = c.f.params.L;
  if (keys.count("f_nu")) problem["f_nu"] = c.f.params.nu;
  if (keys.count("f_coefficient")) problem["f_coefficient"] = c.f.params.coefficient;
  if (keys.count("f_table")) problem["f_table"] = c.f.table;
  problem["alpha"] = c.alpha;

  ordered_json solver;
  solver["path_nodes"] = c.solve.path_nodes;
  solver["gradient_tolerance"] = c.solve.gradient_tolerance;
  solver["max_iterations"] = c.solve.max_iterations;
  solver["shrink"] = c.solve.shrink;
  solver["max_halvings"] = c.solve.max_halvings;
  solver["max_doublings"] = c.solve.max_doublings;

  ordered_json sweep;
  if (!c.lambda_list.empty()) {
    sweep["lambdas"] = c.lambda_list;
  } else {
    sweep["lambda_min"] = c.lambda_min;
    sweep["lambda_max"] = c.lambda_max;
    sweep["lambda_points"] = c.lambda_points;
    sweep["include_zero"] = c.include_zero;
  }
  sweep["lambda_grid"] = c.sweep.lambdas;
  sweep["amplitude_cap"] = c.sweep.amplitude_cap;
  sweep["candidate_threshold"] = c.sweep.candidate_threshold;
  sweep["residual_factor"] = c.sweep.residual_factor;
  sweep["h1_s0"] = c.sweep.h1_s0;
  sweep["jobs"] = c.sweep.jobs;

  ordered_json truncate;
  truncate["samples"] = c.samples;
  truncate["range"] = c.sample_range ? ordered_json(*c.sample_range) : ordered_json("2 s0'/alpha");

  ordered_json identity;
  identity["field"] = c.identity_field == IdentityField::Solution ? "solution" : "manufactured";
  identity["a"] = c.identity_a ? ordered_json(*c.identity_a) : ordered_json("(N-2m)/2");

  ordered_json probe;
  probe["radius"] = c.probe_radius;
  probe["random_points"] = c.probe_random_points;
  probe["seed"] = c.seed;

  ordered_json out;
  out["subcommand"] = to_string(c.subcommand);
  out["problem"] = problem;
  out["solver"] = solver;
  out["sweep"] = sweep;
  out["truncate"] = truncate;
  out["identity"] = identity;
  out["probe"] = probe;
  return out;
}

}  // namespace polyharm::cli
