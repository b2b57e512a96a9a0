#include "polyharm/identity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "polyharm/errors.hpp"

namespace polyharm {

void verify_star_shaped(const std::vector<BoundaryPoint>& boundary, const Point& y) {
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const auto& b = boundary[i];
    const double dot = (b.x[0] - y[0]) * b.normal[0] + (b.x[1] - y[1]) * b.normal[1];
    if (dot < 0) {
      std::ostringstream msg;
      msg << "domain is not star-shaped about (" << y[0] << ", " << y[1] << "): (x-y).nu = " << dot
          << " at boundary sample " << i << " (" << b.x[0] << ", " << b.x[1] << ")";
      throw ValidationError(msg.str());
    }
  }
}

Point star_center(const Grid& grid) {
  const auto& spec = grid.spec();
  Point y{};
  switch (spec.shape) {
    case Shape::Interval:
      y = {spec.length / 2, 0.0};
      break;
    case Shape::Rectangle:
      y = {spec.length / 2, spec.width / 2};
      break;
    case Shape::RadialBall:
      y = {0.0, 0.0};
      break;
  }
  verify_star_shaped(grid.boundary(), y);
  return y;
}

std::string to_string(FoufouVerdict v) {
  switch (v) {
    case FoufouVerdict::Consistent: return "identity-consistent";
    case FoufouVerdict::Violated: return "identity-violated";
    case FoufouVerdict::Undefined: return "undefined";
  }
  return "?";
}

IdentityReport pucci_serrin(const PolyharmonicOperator& op, const GridField& u, const Nonlinearity& g,
                            std::optional<double> a, std::optional<Point> y) {
  if (u.grid != op.grid()) throw ValidationError("field does not match operator domain");
  const Grid& grid = *op.grid();
  const int n = grid.spec().dimension;
  const int m = op.order();

  IdentityReport rep;
  rep.y = y ? *y : star_center(grid);
  if (y) verify_star_shaped(grid.boundary(), rep.y);
  rep.a = a ? *a : (n - 2.0 * m) / 2.0;
  rep.nodes = grid.size();
  rep.interior_coefficient = n / 2.0 - rep.a - m;

  // Throws on boundary-condition violations and unsupported (m, bc).
  const std::vector<double> trace = op.boundary_trace(u);

  const auto& w = grid.weights();
  const Eigen::VectorXd& v = u.values;
  long double load = 0, potential = 0, abs_load = 0, abs_potential = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const long double gu = static_cast<long double>(g.g(v[i])) * v[i];
    const long double G = g.G(v[i]);
    load += w[i] * gu;
    potential += w[i] * G;
    abs_load += w[i] * std::abs(gu);
    abs_potential += w[i] * std::abs(G);
  }
  const long double dirichlet = rep.interior_coefficient == 0.0 ? 0.0L : op.form(v);
  rep.interior_term = static_cast<double>(rep.interior_coefficient * dirichlet + rep.a * load - n * potential);

  long double flux = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& b = grid.boundary()[k];
    const double dot = (b.x[0] - rep.y[0]) * b.normal[0] + (b.x[1] - rep.y[1]) * b.normal[1];
    flux += static_cast<long double>(b.weight) * trace[k] * trace[k] * dot;
  }
  rep.boundary_term = static_cast<double>(-0.5L * flux);
  rep.residual = rep.interior_term - rep.boundary_term;

  if (n != 2 * m) {
    const double ratio = 2.0 * n / (n - 2.0 * m);
    rep.foufou = static_cast<double>(load - ratio * potential);
    rep.foufou_scale = static_cast<double>(1.0L + abs_load + std::abs(ratio) * abs_potential);
    rep.verdict = *rep.foufou <= kFoufouTolerance * rep.foufou_scale ? FoufouVerdict::Consistent
                                                                     : FoufouVerdict::Violated;
  }
  return rep;
}

std::string to_string(TheoremAVerdict v) {
  return v == TheoremAVerdict::NoNontrivialSolution ? "no-nontrivial-solution" : "outside-theorem-A";
}

TheoremAVerdict theorem_A_verdict(double lambda, const Rational& q, int dimension, int order) {
  const Rational critical = critical_exponent(dimension, order);
  if ((lambda < 0 && q >= critical) || (lambda == 0 && q > critical)) return TheoremAVerdict::NoNontrivialSolution;
  return TheoremAVerdict::Outside;
}

// ---------------------------------------------------------------------------
// Nonexistence sweep

std::string to_string(RowOutcome o) {
  switch (o) {
    case RowOutcome::Candidate: return "candidate";
    case RowOutcome::Collapse: return "collapse";
    case RowOutcome::NotConverged: return "not-converged";
  }
  return "?";
}

namespace {

SweepRow run_row(const Problem& problem, const PolyharmonicOperator& op, const Eigenpair& eig, double lambda,
                 const SweepConfig& cfg) {
  const double p = to_double(problem.p);
  SweepRow row;
  row.lambda = lambda;
  if (problem.domain.dimension > 2 * problem.order)
    row.theorem_a = theorem_A_verdict(lambda, *problem.q, problem.domain.dimension, problem.order);

  const Nonlinearity g = untruncated(problem.f, lambda, p);
  SolveConfig solve = cfg.solve;
  solve.amplitude_cap = cfg.amplitude_cap;
  PathResult r;
  try {
    r = mountain_pass(op, g, eig.w0.values, solve);
  } catch (const GeometryFailure& e) {
    row.outcome = RowOutcome::Collapse;
    row.solver_status = std::string("geometry-failure: ") + e.what();
    return row;
  }
  row.solver_status = to_string(r.status);
  row.iterations = r.iterations;
  row.raw_amplitude = r.sup_u;
  if (r.status == SolveStatus::CapExceeded) {
    row.outcome = RowOutcome::Collapse;
    return row;
  }
  if (!r.converged) {
    row.outcome = RowOutcome::NotConverged;
    return row;
  }
  const Eigen::VectorXd& u = r.u.values;
  const double scale = 1.0 + op.apply(u).cwiseAbs().maxCoeff();
  row.residual = r.residual_sup / scale;
  if (r.sup_u <= cfg.candidate_threshold) {
    row.outcome = RowOutcome::Collapse;
    return row;
  }
  if (row.residual > cfg.residual_factor) {
    row.outcome = RowOutcome::NotConverged;
    return row;
  }
  row.outcome = RowOutcome::Candidate;
  row.amplitude = r.sup_u;
  row.form = r.form;
  const auto& w = op.grid()->weights();
  long double integral = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) integral += w[i] * std::pow(std::abs(u[i]), p + 1);
  row.power_integral = static_cast<double>(integral);
  if (problem.order == 1 || problem.bc == BoundaryCondition::Dirichlet)
    row.foufou = pucci_serrin(op, r.u, g).foufou;
  return row;
}

}  // namespace

ThresholdReport nonexistence_sweep(const Problem& problem, const SweepConfig& cfg, const std::vector<double>& probe) {
  if (cfg.lambdas.empty()) throw ValidationError("sweep needs a non-empty lambda grid");
  if (problem.bc != BoundaryCondition::Dirichlet && problem.order != 1)
    throw ValidationError("nonexistence sweep requires Dirichlet boundary conditions");
  if (!problem.q) throw ValidationError("nonexistence sweep requires q");
  if (*problem.q <= problem.p) throw ValidationError("nonexistence sweep requires q > p");
  if (!(cfg.amplitude_cap > 0)) throw ValidationError("amplitude cap must be positive");
  if (cfg.jobs < 1) throw ValidationError("jobs must be at least 1");
  cfg.solve.validate();
  const int n = problem.domain.dimension;
  if (n >= 2 * problem.order + 1) {
    const ProblemExponents pe(n, problem.order, problem.p, problem.q);
    const PClass c = classify_p(pe);
    if (c != PClass::StrictSubcritical && c != PClass::WideSubcritical)
      throw ValidationError("sweep requires 1 <= p < (N+2m)/(N-2m)");
  } else if (problem.p < 1) {
    throw ValidationError("sweep requires p >= 1");
  }

  ThresholdReport rep;
  const double q = to_double(*problem.q);
  rep.h1 = check_H1(problem.f, q, cfg.h1_s0, probe);
  if (!rep.h1.pass()) throw HypothesisFailure("f fails (H1) with q = " + to_string(*problem.q));

  const auto op = build_operator(problem.domain, problem.order, problem.bc);
  star_center(*op->grid());
  const Eigenpair eig = principal_eigenpair(*op);

  rep.rows.resize(cfg.lambdas.size());
  std::vector<std::exception_ptr> errors(cfg.lambdas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.lambdas.size(); i = next++) {
      try {
        rep.rows[i] = run_row(problem, *op, eig, cfg.lambdas[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(cfg.lambdas.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const double p = to_double(problem.p);
  rep.expected_slope = (p + 1) / (q - p);
  std::vector<double> x, y;
  for (const auto& row : rep.rows) {
    if (row.outcome != RowOutcome::Candidate) continue;
    if (!rep.lambda_star || row.lambda < *rep.lambda_star) rep.lambda_star = row.lambda;
    if (!(row.lambda > 0)) continue;
    x.push_back(std::log(row.lambda));
    y.push_back(std::log(row.power_integral));
    const double c1 = row.power_integral * std::pow(row.lambda, -rep.expected_slope);
    rep.c1 = rep.c1 ? std::max(*rep.c1, c1) : c1;
    if (p > 1) {
      const double c2 = row.power_integral * std::pow(row.lambda, (p + 1) / (p - 1));
      rep.c2 = rep.c2 ? std::min(*rep.c2, c2) : c2;
    }
    const double sob = std::pow(row.power_integral, 2 / (p + 1)) / row.form;
    rep.sobolev_constant = rep.sobolev_constant ? std::max(*rep.sobolev_constant, sob) : sob;
    const double load = row.form / (row.lambda * row.power_integral);
    rep.load_constant = rep.load_constant ? std::max(*rep.load_constant, load) : load;
  }
  rep.fit_points = static_cast<int>(x.size());
  if (x.size() >= 2) {
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx > 0) rep.fitted_slope = sxy / sxx;
  }
  if (rep.sobolev_constant && rep.load_constant) rep.klm = *rep.sobolev_constant * *rep.load_constant;

  ThresholdConstants constants;
  constants.c1 = rep.c1.value_or(0.0);
  constants.c2 = rep.c2.value_or(0.0);
  constants.klm = rep.klm.value_or(0.0);
  try {
    const LambdaLower lower = lambda_lower(constants, problem.p, *problem.q);
    rep.lambda_lower_empirical = lower.value;
    rep.delta = lower.delta;
  } catch (const ValidationError&) {
    // Not enough candidates to fit the constants.
  }

  if (rep.lambda_star)
    for (const auto& row : rep.rows)
      if (row.lambda < *rep.lambda_star / 100 && row.outcome != RowOutcome::Collapse) rep.all_below_collapse = false;
  return rep;
}

}  // namespace polyharm
