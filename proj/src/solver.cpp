#include "polyharm/solver.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "polyharm/errors.hpp"

namespace polyharm {

void SolveConfig::validate() const {
  if (path_nodes < 3) throw ValidationError("path_nodes must be >= 3");
  if (!(gradient_tolerance > 0)) throw ValidationError("gradient_tolerance must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be positive");
  if (!(shrink > 0 && shrink < 1)) throw ValidationError("shrink must lie in (0, 1)");
  if (max_halvings < 1) throw ValidationError("max_halvings must be positive");
  if (max_doublings < 1) throw ValidationError("max_doublings must be positive");
  if (amplitude_cap && !(*amplitude_cap > 0)) throw ValidationError("amplitude_cap must be positive");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::CapExceeded: return "cap-exceeded";
  }
  return "?";
}

std::string to_string(Sign s) {
  switch (s) {
    case Sign::Any: return "any";
    case Sign::Positive: return "positive";
    case Sign::Negative: return "negative";
  }
  return "?";
}

std::string to_string(ExistenceOutcome o) {
  switch (o) {
    case ExistenceOutcome::Certified: return "certified";
    case ExistenceOutcome::AlphaTooLarge: return "alpha-too-large";
    case ExistenceOutcome::NotConverged: return "not-converged";
    case ExistenceOutcome::ResidualCheckFailed: return "residual-check-failed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Functional

namespace {

Eigen::VectorXd map_values(const Eigen::VectorXd& u, const std::function<double(double)>& fn) {
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = fn(u[i]);
  return out;
}

long double potential(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u) {
  const auto& w = op.grid()->weights();
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < u.size(); ++i) sum += static_cast<long double>(w[i]) * g.G(u[i]);
  return sum;
}

// int g(t z) z
long double ray_load(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& z, double t) {
  const auto& w = op.grid()->weights();
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < z.size(); ++i) sum += static_cast<long double>(w[i]) * g.g(t * z[i]) * z[i];
  return sum;
}

}  // namespace

double energy(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u) {
  return static_cast<double>(0.5L * op.form(u) - potential(op, g, u));
}

Eigen::VectorXd euler_residual(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u) {
  return op.apply(u) - map_values(u, g.g);
}

Eigen::VectorXd sobolev_gradient(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u) {
  return u - op.solve(map_values(u, g.g));
}

double nehari_residual(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u) {
  return static_cast<double>(op.form(u) - ray_load(op, g, u, 1.0));
}

// ---------------------------------------------------------------------------
// Mountain pass

namespace {

// Node energies are stored relative to a reference state (the current path
// maximizer) and computed as differences,
//   I(x) - I(z) = 1/2 <x - z, A(x + z)> - sum_i w_i (G(x_i) - G(z_i)),
// so that the small decreases near convergence are not lost in the rounding
// of form(x), which grows like h^{-2m} relative to the differences.
class PathSolver {
 public:
  PathSolver(const PolyharmonicOperator& op, const Nonlinearity& g, const SolveConfig& cfg)
      : op_(op), g_(g), cfg_(cfg) {}

  PathResult run(const Eigen::VectorXd& direction) {
    PathResult result;
    endpoint_ = find_endpoint(direction, result.b0);

    const int n = cfg_.path_nodes;
    nodes_.assign(static_cast<std::size_t>(n), Eigen::VectorXd());
    for (int i = 0; i < n; ++i) nodes_[static_cast<std::size_t>(i)] = (static_cast<double>(i) / (n - 1)) * endpoint_;
    set_reference(Eigen::VectorXd::Zero(op_.size()), 0.0);
    evaluate();
    result.initial_path_max = path_max();
    if (!(path_max() > 0)) throw GeometryFailure("energy has no positive ridge along the initial path");

    // Move the path maximizer onto its ray maximum before descending.
    rebuild(ray_maximizer(nodes_[static_cast<std::size_t>(argmax_)]));
    adopt_maximizer();
    result.history.push_back(reference_energy_);

    double step = 1.0;
    int it = 0;
    for (;; ++it) {
      const Eigen::VectorXd z = reference_;
      const Eigen::VectorXd w = sobolev_gradient(op_, g_, z);
      const double gnorm = std::sqrt(std::max(0.0, op_.form(w)));
      result.gradient_norm = gnorm;
      if (cfg_.amplitude_cap && z.cwiseAbs().maxCoeff() > *cfg_.amplitude_cap) {
        result.status = SolveStatus::CapExceeded;
        break;
      }
      if (gnorm <= cfg_.gradient_tolerance) {
        result.status = SolveStatus::Converged;
        break;
      }
      if (it >= cfg_.max_iterations) {
        result.status = SolveStatus::MaxIterations;
        break;
      }
      if (!descend(z, w, step)) {
        result.status = SolveStatus::Stalled;
        break;
      }
      result.drops.push_back(-relative_[static_cast<std::size_t>(argmax_)]);
      adopt_maximizer();
      result.history.push_back(reference_energy_);
    }
    result.iterations = it;

    const Eigen::VectorXd& u = reference_;
    result.u = GridField(op_.grid(), u);
    result.energy = energy(op_, g_, u);
    result.form = op_.form(u);
    result.nehari_residual = nehari_residual(op_, g_, u);
    result.residual_sup = euler_residual(op_, g_, u).cwiseAbs().maxCoeff();
    result.sup_u = u.cwiseAbs().maxCoeff();
    result.converged = result.status == SolveStatus::Converged &&
                       std::abs(result.nehari_residual) <= 10.0 * cfg_.gradient_tolerance * (1.0 + result.form);
    return result;
  }

 private:
  Eigen::VectorXd find_endpoint(const Eigen::VectorXd& direction, double& b0) const {
    b0 = 1.0;
    for (int k = 0; k <= cfg_.max_doublings; ++k, b0 *= 2.0) {
      Eigen::VectorXd v = b0 * direction;
      if (energy(op_, g_, v) <= 0) return v;
    }
    throw GeometryFailure("I(b0 w0) stays positive after " + std::to_string(cfg_.max_doublings) +
                          " doublings of b0 (no mountain-pass geometry)");
  }

  // t z with t > 0 maximizing I(t z), i.e. the root of t form(z) - int g(t z) z.
  Eigen::VectorXd ray_maximizer(const Eigen::VectorXd& z) const {
    const long double fz = op_.form(z);
    auto slope = [&](double t) { return static_cast<double>(t * fz - ray_load(op_, g_, z, t)); };
    constexpr int kMaxBracket = 200;
    double lo = 1.0, hi = 1.0;
    if (slope(1.0) > 0) {
      int k = 0;
      do {
        lo = hi;
        hi *= 2.0;
        if (++k > kMaxBracket) throw GeometryFailure("energy increases without bound along a ray");
      } while (slope(hi) > 0);
    } else {
      int k = 0;
      do {
        hi = lo;
        lo *= 0.5;
        if (++k > kMaxBracket) throw GeometryFailure("energy decreases from 0 along a ray");
      } while (slope(lo) <= 0);
    }
    boost::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(slope, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                          max_iter);
    return (0.5 * (a + b)) * z;
  }

  // Broken line 0 -> z* -> T z* -> endpoint, with I(T z*) <= 0.
  void rebuild(const Eigen::VectorXd& zstar) {
    double T = 2.0;
    int k = 0;
    while (energy(op_, g_, T * zstar) > 0) {
      T *= 2.0;
      if (++k > cfg_.max_doublings) throw GeometryFailure("ray through the path maximizer never reaches I <= 0");
    }
    const int n = cfg_.path_nodes;
    const int n1 = std::max(2, n / 2);
    const int n3 = std::max(1, (n - n1) / 2);
    const int n2 = n - n1 - n3;
    std::vector<Eigen::VectorXd> nodes;
    nodes.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n1; ++j) nodes.push_back((static_cast<double>(j) / (n1 - 1)) * zstar);
    for (int j = 1; j <= n2; ++j) nodes.push_back((1.0 + (T - 1.0) * j / n2) * zstar);
    const Eigen::VectorXd far = n2 > 0 ? Eigen::VectorXd(T * zstar) : zstar;
    for (int j = 1; j <= n3; ++j) {
      const double s = static_cast<double>(j) / n3;
      nodes.push_back((1.0 - s) * far + s * endpoint_);
    }
    nodes.back() = endpoint_;
    nodes_ = std::move(nodes);
    evaluate();
  }

  void set_reference(Eigen::VectorXd z, double energy_value) {
    reference_ = std::move(z);
    reference_energy_ = energy_value;
    reference_image_ = op_.apply(reference_);
    reference_potential_.resize(reference_.size());
    for (Eigen::Index i = 0; i < reference_.size(); ++i) reference_potential_[i] = g_.G(reference_[i]);
  }

  // I(x) - I(reference)
  double relative_energy(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd diff = x - reference_;
    const Eigen::VectorXd image = op_.apply(x) + reference_image_;
    const auto& w = op_.grid()->weights();
    long double sum = 0.0L;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      sum += static_cast<long double>(w[i]) *
             (0.5L * diff[i] * image[i] - (static_cast<long double>(g_.G(x[i])) - reference_potential_[i]));
    return static_cast<double>(sum);
  }

  void evaluate() {
    relative_.assign(nodes_.size(), 0.0);
    argmax_ = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      relative_[i] = relative_energy(nodes_[i]);
      if (relative_[i] > relative_[static_cast<std::size_t>(argmax_)]) argmax_ = static_cast<int>(i);
    }
  }

  double path_max() const { return reference_energy_ + relative_[static_cast<std::size_t>(argmax_)]; }

  void adopt_maximizer() {
    const double level = path_max();
    set_reference(nodes_[static_cast<std::size_t>(argmax_)], level);
    const double shift = relative_[static_cast<std::size_t>(argmax_)];
    for (double& e : relative_) e -= shift;
  }

  // Backtracked step on the maximizer; accepted only if the path maximum drops.
  bool descend(const Eigen::VectorXd& z, const Eigen::VectorXd& w, double& step) {
    const auto saved_nodes = nodes_;
    const auto saved_relative = relative_;
    const int saved_argmax = argmax_;
    step = std::min(1.0, 2.0 * step);
    for (int h = 0; h <= cfg_.max_halvings; ++h, step *= cfg_.shrink) {
      const Eigen::VectorXd trial = z - step * w;
      if (trial.cwiseAbs().maxCoeff() == 0.0) continue;
      try {
        rebuild(ray_maximizer(trial));
      } catch (const GeometryFailure&) {
        continue;
      }
      // The reference is the current maximizer, so a drop is a negative maximum.
      if (relative_[static_cast<std::size_t>(argmax_)] < 0) return true;
    }
    nodes_ = saved_nodes;
    relative_ = saved_relative;
    argmax_ = saved_argmax;
    return false;
  }

  const PolyharmonicOperator& op_;
  const Nonlinearity& g_;
  const SolveConfig& cfg_;
  Eigen::VectorXd endpoint_;
  std::vector<Eigen::VectorXd> nodes_;
  std::vector<double> relative_;
  int argmax_ = 0;
  Eigen::VectorXd reference_;
  Eigen::VectorXd reference_image_;
  Eigen::VectorXd reference_potential_;
  double reference_energy_ = 0.0;
};

}  // namespace

PathResult mountain_pass(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& direction,
                         const SolveConfig& cfg) {
  cfg.validate();
  if (direction.size() != op.size()) throw ValidationError("endpoint direction does not match operator domain");
  return PathSolver(op, g, cfg).run(direction);
}

SolveReport mountain_pass(const PolyharmonicOperator& op, const TruncatedNonlinearity& tn, const Eigenpair& eig,
                          const SolveConfig& cfg, Sign sign) {
  const double alpha = tn.alpha();
  const double nu = tn.params().nu;
  const double p = tn.p();
  Eigen::VectorXd direction = std::pow(alpha, -nu / (p + 1.0)) * eig.w0.values;
  if (sign == Sign::Negative) direction = -direction;
  const Nonlinearity g = sign == Sign::Positive ? tn.plus() : sign == Sign::Negative ? tn.minus() : tn.full();

  SolveReport r;
  r.path = mountain_pass(op, g, direction, cfg);
  r.alpha = alpha;
  r.lambda = std::pow(alpha, 1.0 - p);
  r.nu = nu;
  r.sup_v = alpha * r.path.sup_u;
  r.za_constant = r.path.energy * std::pow(alpha, nu);
  r.eg_constant = r.path.form * std::pow(alpha, nu);
  return r;
}

// ---------------------------------------------------------------------------
// Existence pipeline

namespace {

struct Context {
  OperatorPtr op;
  Eigenpair eig;
  TruncationParams params;
  std::optional<TruncatedNonlinearity> tn;
  std::optional<ExponentLedger> ledger;
};

Context prepare(const Problem& problem, double alpha, const std::vector<double>& probe) {
  if (!(alpha > 0) || alpha > 1) throw ValidationError("alpha must lie in (0, 1]");
  Context ctx;
  const int n = problem.domain.dimension;
  if (n >= 2 * problem.order + 1) {
    const ProblemExponents pe(n, problem.order, problem.p, problem.q);
    if (classify_p(pe) != PClass::StrictSubcritical)
      throw ValidationError("p must satisfy 1 < p < (N+2m)/(N-2m) (p is " + std::string(to_string(classify_p(pe))) +
                            ")");
    ctx.ledger = bootstrap_chain(pe);
  } else if (problem.p <= 1) {
    throw ValidationError("p must exceed 1");
  }
  ctx.op = build_operator(problem.domain, problem.order, problem.bc);
  ctx.eig = principal_eigenpair(*ctx.op);
  ctx.params = calibrate_truncation(problem.f, ctx.eig.lambda1, probe);
  ctx.tn = truncate(problem.f, ctx.params, alpha, to_double(problem.p));
  return ctx;
}

ExistenceReport certify(const Problem& problem, const Context& ctx, const SolveConfig& cfg, Sign sign) {
  ExistenceReport rep;
  rep.solve = mountain_pass(*ctx.op, *ctx.tn, ctx.eig, cfg, sign);
  rep.truncation = ctx.params;
  rep.lambda1 = ctx.eig.lambda1;
  rep.exponents = ctx.ledger;

  const double alpha = rep.solve.alpha;
  const double p = to_double(problem.p);
  rep.v = GridField(ctx.op->grid(), alpha * rep.solve.path.u.values);
  // With f = 0 the truncation changes nothing, whatever the amplitude.
  const bool inactive = problem.f.kind() == NonlinearityKind::Zero;
  rep.detruncated = inactive || rep.solve.sup_v < ctx.params.s0p / 2.0;
  rep.sup_below_one = rep.solve.sup_v < 1.0;
  if (rep.exponents) {
    const Rational gamma = rep.exponents->gamma_paper && *rep.exponents->gamma_paper > rep.exponents->gamma_iterated
                               ? *rep.exponents->gamma_paper
                               : rep.exponents->gamma_iterated;
    rep.main_constant = rep.solve.path.sup_u * std::pow(alpha, to_double(gamma) * rep.solve.nu);
  }

  if (!rep.solve.path.converged) {
    rep.outcome = ExistenceOutcome::NotConverged;
    return rep;
  }
  if (!rep.detruncated) {
    rep.outcome = ExistenceOutcome::AlphaTooLarge;
    return rep;
  }
  // Untruncated residual; |v| < s0'/2 keeps f inside its admissible range.
  const Eigen::VectorXd& v = rep.v.values;
  const Eigen::VectorXd av = ctx.op->apply(v);
  const double lambda = rep.solve.lambda;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    worst = std::max(worst, std::abs(av[i] - problem.f.f(v[i]) - lambda * signed_power(v[i], p)));
  rep.residual_sup = worst;
  rep.residual_tolerance = 1e-4 * (1.0 + av.cwiseAbs().maxCoeff());
  rep.outcome = worst <= rep.residual_tolerance && (rep.sup_below_one || inactive)
                    ? ExistenceOutcome::Certified
                    : ExistenceOutcome::ResidualCheckFailed;
  return rep;
}

}  // namespace

ExistenceReport solve_existence(const Problem& problem, double alpha, const SolveConfig& cfg,
                                const std::vector<double>& probe) {
  const Context ctx = prepare(problem, alpha, probe);
  return certify(problem, ctx, cfg, Sign::Any);
}

TwoSignedReport solve_two_signed(const Problem& problem, double alpha, const SolveConfig& cfg,
                                 const std::vector<double>& probe) {
  if (problem.bc != BoundaryCondition::Navier && problem.order != 1)
    throw ValidationError("two signed solutions require Navier boundary conditions");
  for (double s : probe) {
    if (s == 0.0 || std::abs(s) > 1.0) continue;
    if (!(problem.f.f(s) * s > 0))
      throw HypothesisFailure("f(s)s > 0 fails at s=" + std::to_string(s));
  }
  const Context ctx = prepare(problem, alpha, probe);
  TwoSignedReport rep;
  rep.plus = certify(problem, ctx, cfg, Sign::Positive);
  rep.minus = certify(problem, ctx, cfg, Sign::Negative);
  const Eigen::VectorXd& up = rep.plus.solve.path.u.values;
  const Eigen::VectorXd& um = rep.minus.solve.path.u.values;
  rep.plus_positive = up.minCoeff() > 0;
  rep.minus_negative = um.maxCoeff() < 0;
  const Nonlinearity full = ctx.tn->full();
  rep.plus_full_residual = euler_residual(*ctx.op, full, up).cwiseAbs().maxCoeff();
  rep.minus_full_residual = euler_residual(*ctx.op, full, um).cwiseAbs().maxCoeff();
  rep.antisymmetry_gap = (up + um).cwiseAbs().maxCoeff();
  return rep;
}

}  // namespace polyharm
