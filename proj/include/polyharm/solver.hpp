#pragma once

// Mountain-pass solver for I(u) = 1/2 form(u) - sum_i w_i G(u_i) and the
// existence pipeline built on the truncated nonlinearities.

#include <optional>
#include <string>
#include <vector>

#include "polyharm/exponents.hpp"
#include "polyharm/nonlinearity.hpp"
#include "polyharm/operators.hpp"

namespace polyharm {

struct SolveConfig {
  int path_nodes = 40;
  double gradient_tolerance = 1e-6;  // H_m norm of the Sobolev gradient
  int max_iterations = 5000;
  double shrink = 0.5;
  int max_halvings = 40;
  int max_doublings = 60;  // for b0 and for the far end of the ray
  /// Stop with CapExceeded once the path maximizer leaves sup|u| <= cap.
  std::optional<double> amplitude_cap;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIterations, Stalled, CapExceeded };
std::string to_string(SolveStatus s);

/// Outcome of one mountain-pass run on a fixed nonlinearity.
struct PathResult {
  GridField u;
  double energy = 0.0;
  double form = 0.0;
  double gradient_norm = 0.0;
  double nehari_residual = 0.0;  // form(u) - int g(u) u
  double residual_sup = 0.0;     // sup |A u - g(u)|
  double sup_u = 0.0;
  double b0 = 0.0;
  double initial_path_max = 0.0;
  std::vector<double> history;  // path maximum after each accepted step
  // Decrease of the path maximum at each accepted step, computed as an energy
  // difference; it can be below the resolution of the history values.
  std::vector<double> drops;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  bool converged = false;
};

double energy(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u);
/// A u - g(u), pointwise.
Eigen::VectorXd euler_residual(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u);
/// u - A^{-1} g(u): the gradient of I in the H_m scalar product.
Eigen::VectorXd sobolev_gradient(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u);
/// I'(u)u = form(u) - int g(u) u.
double nehari_residual(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& u);

/// Path-deformation mountain pass between 0 and b0 * direction, where b0
/// doubles from 1 until I(b0 direction) <= 0. Throws GeometryFailure when no
/// such b0 exists within cfg.max_doublings or the path has no positive ridge.
PathResult mountain_pass(const PolyharmonicOperator& op, const Nonlinearity& g, const Eigen::VectorXd& direction,
                         const SolveConfig& cfg = {});

/// Mountain pass for the truncated problem at scale alpha.
struct SolveReport {
  PathResult path;
  double alpha = 1.0;
  double lambda = 1.0;  // alpha^{1-p}
  double nu = 0.0;
  double sup_v = 0.0;   // sup |alpha u|
  double za_constant = 0.0;  // I(u) alpha^nu
  double eg_constant = 0.0;  // form(u) alpha^nu
};

enum class Sign { Any, Positive, Negative };
std::string to_string(Sign s);

/// Endpoint v = b0 alpha^{-nu/(p+1)} (+-w0); Sign selects g_alpha, g_alpha^+ or g_alpha^-.
SolveReport mountain_pass(const PolyharmonicOperator& op, const TruncatedNonlinearity& tn, const Eigenpair& eig,
                          const SolveConfig& cfg = {}, Sign sign = Sign::Any);

/// Full problem description for the existence pipeline.
struct Problem {
  DomainSpec domain;
  int order = 1;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  Rational p{3};
  std::optional<Rational> q;
  NonlinearitySpec f = NonlinearitySpec::zero();
};

enum class ExistenceOutcome { Certified, AlphaTooLarge, NotConverged, ResidualCheckFailed };
std::string to_string(ExistenceOutcome o);

struct ExistenceReport {
  SolveReport solve;
  TruncationParams truncation;
  double lambda1 = 0.0;
  ExistenceOutcome outcome = ExistenceOutcome::NotConverged;
  bool detruncated = false;        // sup |v| < s0'/2
  double residual_sup = 0.0;       // sup |A v - f(v) - lambda |v|^{p-1} v|
  double residual_tolerance = 0.0; // 1e-4 (1 + sup |A v|)
  bool sup_below_one = false;
  std::optional<ExponentLedger> exponents;  // when N >= 2m+1
  std::optional<double> main_constant;      // sup |u| alpha^{gamma nu}
  GridField v;
};

/// Calibrates, truncates, solves, detruncates and certifies.
ExistenceReport solve_existence(const Problem& problem, double alpha, const SolveConfig& cfg = {},
                                const std::vector<double>& probe = probe_grid());

struct TwoSignedReport {
  ExistenceReport plus;
  ExistenceReport minus;
  bool plus_positive = false;   // min over interior nodes > 0
  bool minus_negative = false;  // max over interior nodes < 0
  double plus_full_residual = 0.0;   // sup |A u+ - g_alpha(u+)|
  double minus_full_residual = 0.0;
  double antisymmetry_gap = 0.0;     // sup |u+ + u-|
};

/// Requires Navier conditions (or m = 1) and f(s)s > 0 on 0 < |s| <= 1;
/// the latter failing raises HypothesisFailure.
TwoSignedReport solve_two_signed(const Problem& problem, double alpha, const SolveConfig& cfg = {},
                                 const std::vector<double>& probe = probe_grid());

}  // namespace polyharm
