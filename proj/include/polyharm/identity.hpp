#pragma once

// Pucci-Serrin identity terms, star-shapedness and the nonexistence sweep for
// the Dirichlet problem (-Delta)^m u = f(u) + lambda |u|^{p-1} u.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "polyharm/exponents.hpp"
#include "polyharm/nonlinearity.hpp"
#include "polyharm/operators.hpp"
#include "polyharm/solver.hpp"

namespace polyharm {

using Point = std::array<double, 2>;

/// Throws ValidationError naming the first boundary sample with (x-y).nu < 0.
void verify_star_shaped(const std::vector<BoundaryPoint>& boundary, const Point& y);

/// Centroid of an interval or rectangle, origin of a ball; verified against
/// the grid's boundary samples.
Point star_center(const Grid& grid);

enum class FoufouVerdict { Consistent, Violated, Undefined };
std::string to_string(FoufouVerdict v);

struct IdentityReport {
  double a = 0.0;
  Point y{};
  int nodes = 0;
  double interior_coefficient = 0.0;  // N/2 - a - m
  double interior_term = 0.0;         // int (N/2-a-m)|D^m u|^2 + a u g(u) - N G(u)
  double boundary_term = 0.0;         // -1/2 int_{boundary} |D^m u|^2 (x-y).nu
  double residual = 0.0;              // interior - boundary
  std::optional<double> foufou;       // int g(u)u - 2N/(N-2m) G(u); none when N = 2m
  double foufou_scale = 0.0;          // 1 + int |g(u)u| + |2N/(N-2m)| int |G(u)|
  FoufouVerdict verdict = FoufouVerdict::Undefined;
};

/// Consistent when foufou <= 1e-6 * foufou_scale.
constexpr double kFoufouTolerance = 1e-6;

/// Both sides of the identity. a defaults to (N-2m)/2 and y to star_center.
/// Needs a boundary trace: m = 1, or m = 2 with Dirichlet conditions.
IdentityReport pucci_serrin(const PolyharmonicOperator& op, const GridField& u, const Nonlinearity& g,
                            std::optional<double> a = std::nullopt, std::optional<Point> y = std::nullopt);

enum class TheoremAVerdict { NoNontrivialSolution, Outside };
std::string to_string(TheoremAVerdict v);

/// No nontrivial solution when lambda < 0 and q >= (N+2m)/(N-2m), or when
/// lambda = 0 and q is strictly above it.
TheoremAVerdict theorem_A_verdict(double lambda, const Rational& q, int dimension, int order);

// ---------------------------------------------------------------------------
// Nonexistence sweep

struct SweepConfig {
  std::vector<double> lambdas;
  /// Solves leaving sup|u| <= cap are outside the regime where f is
  /// controlled and count as collapse to zero.
  double amplitude_cap = 4.0;
  double candidate_threshold = 1e-3;  // sup|u| above this is nontrivial
  double residual_factor = 1e-4;      // sup|A u - g(u)| <= factor (1 + sup|A u|)
  double h1_s0 = 1.0;
  int jobs = 1;
  SolveConfig solve;
};

enum class RowOutcome { Candidate, Collapse, NotConverged };
std::string to_string(RowOutcome o);

struct SweepRow {
  double lambda = 0.0;
  RowOutcome outcome = RowOutcome::Collapse;
  std::string solver_status;          // solver status, or the geometry failure
  double amplitude = 0.0;             // sup|u| of the candidate, 0 on collapse
  double raw_amplitude = 0.0;         // sup|u| where the solver stopped
  double residual = 0.0;              // relative strong residual
  double power_integral = 0.0;        // int |u|^{p+1}
  double form = 0.0;
  std::optional<double> foufou;
  TheoremAVerdict theorem_a = TheoremAVerdict::Outside;
  int iterations = 0;
};

struct ThresholdReport {
  std::vector<SweepRow> rows;
  double expected_slope = 0.0;               // (p+1)/(q-p)
  std::optional<double> lambda_star;         // smallest lambda with a candidate
  std::optional<double> fitted_slope;        // log int|u|^{p+1} vs log lambda
  int fit_points = 0;
  std::optional<double> c1;                  // max int|u|^{p+1} lambda^{-(p+1)/(q-p)}
  std::optional<double> c2;                  // min int|u|^{p+1} lambda^{(p+1)/(p-1)}
  std::optional<double> sobolev_constant;    // max (int|u|^{p+1})^{2/(p+1)} / form
  std::optional<double> load_constant;       // max form / (lambda int|u|^{p+1})
  std::optional<double> klm;                 // product of the two
  std::optional<double> lambda_lower_empirical;
  std::optional<Rational> delta;
  H1Report h1;
  bool all_below_collapse = true;            // every lambda < lambda*/100 collapsed
};

/// Runs rows concurrently (cfg.jobs threads); rows keep the grid order.
/// Throws ValidationError on an empty grid, Navier conditions with m >= 2,
/// a missing q or q <= p, or p outside [1, critical); HypothesisFailure when
/// f fails (H1).
ThresholdReport nonexistence_sweep(const Problem& problem, const SweepConfig& cfg,
                                   const std::vector<double>& probe = probe_grid());

}  // namespace polyharm
