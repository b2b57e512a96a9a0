#pragma once

// Exact exponent and threshold calculus for (-Delta)^m u = f(u) + lambda |u|^{p-1} u.
//
// Everything here is rational arithmetic on arbitrary-precision integers;
// doubles only appear in scaling_alpha / scaling_lambda / lambda_lower, whose
// inputs are themselves floating point.

#include <optional>
#include <string_view>
#include <vector>

#include "polyharm/rational.hpp"

namespace polyharm {

/// Dimension N, order m, perturbation exponent p, optional supercritical q.
class ProblemExponents {
 public:
  /// Throws ValidationError unless N >= 2m + 1, m >= 1, p > 0 and q > 0.
  ProblemExponents(int dimension, int order, Rational p, std::optional<Rational> q = std::nullopt);

  int dimension() const { return dimension_; }
  int order() const { return order_; }
  const Rational& p() const { return p_; }
  const std::optional<Rational>& q() const { return q_; }

 private:
  int dimension_;
  int order_;
  Rational p_;
  std::optional<Rational> q_;
};

/// (N + 2m) / (N - 2m). Throws ValidationError when N <= 2m.
Rational critical_exponent(int dimension, int order);
Rational critical_exponent(const ProblemExponents& pe);

enum class PClass {
  Sublinear,          // 0 < p < 1: outside both admissible ranges
  WideSubcritical,    // p == 1: only 1 <= p < critical holds
  StrictSubcritical,  // 1 < p < critical
  Critical,           // p == critical
  Supercritical,      // p > critical
};

PClass classify_p(const ProblemExponents& pe);
std::string_view to_string(PClass c);

enum class Branch {
  Subconformal,  // 2mq < N
  Conformal,     // 2mq == N
  Terminal,      // 2mq > N
};

std::string_view to_string(Branch b);

/// One application of the Sobolev gain q -> q*.
struct StepResult {
  Branch branch;
  /// q* for the subconformal/conformal branches, absent when regularity is reached.
  std::optional<Rational> next;
};

/// Requires q > 1 (ValidationError otherwise).
StepResult sobolev_step(const Rational& q, const ProblemExponents& pe);

struct ChainEntry {
  Rational q;
  Branch branch;
};

/// Agreement of an iterated exponent with the closed-form affine recursion.
struct ClosedFormCheck {
  std::size_t index;  // 0-based index of q_{k+1} in the chain
  Rational iterated_inverse;
  Rational closed_form_inverse;
  bool agrees;
};

struct GammaNu {
  std::optional<Rational> gamma_paper;
  Rational gamma_iterated;
  Rational nu_lower;
  std::optional<Rational> beta_paper;
};

struct ExponentLedger {
  int dimension = 0;
  int order = 0;
  Rational p;
  Rational critical;
  std::vector<ChainEntry> chain;
  int k0 = 0;
  std::vector<ClosedFormCheck> closed_form;
  std::optional<Rational> gamma_paper;
  Rational gamma_iterated;
  Rational nu_lower;
  std::optional<Rational> beta_paper;
};

/// Iterates q_1 = 2N/(p(N-2m)), q_{k+1} = q_k^* / p until 2m q > N.
/// Requires strict-subcritical p. Throws InternalError past 1000 steps.
ExponentLedger bootstrap_chain(const ProblemExponents& pe);

/// The regularity exponent gamma in both readings and nu_lower = 1/max(gamma).
/// Throws ValidationError for p == 1.
GammaNu gamma_and_nu(const ProblemExponents& pe, const ExponentLedger& ledger);

/// delta = ((p+1)/(q-p) + (p+1)/(p-1))^{-1}. Requires q > p > 1; p == 1 has
/// its own threshold form (see lambda_lower).
Rational nonexistence_delta(const Rational& p, const Rational& q);

/// Constants entering the nonexistence threshold. c1 bounds the (p+1)-norm
/// from above, c2 from below; klm is the combined Sobolev/Poincare constant
/// used when p == 1.
struct ThresholdConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double klm = 0.0;
};

struct LambdaLower {
  enum class Form { Delta, LinearP } form;
  double value;
  std::optional<Rational> delta;
};

/// (c2/c1)^delta for p > 1, 1/klm for p == 1.
LambdaLower lambda_lower(const ThresholdConstants& constants, const Rational& p, const Rational& q);

/// alpha = lambda^{-1/(p-1)}; requires lambda > 0 and p > 1.
double scaling_alpha(double lambda, const Rational& p);
/// lambda = alpha^{1-p}; requires alpha in (0, 1] and p > 1.
double scaling_lambda(double alpha, const Rational& p);

}  // namespace polyharm
