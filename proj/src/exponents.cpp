#include "polyharm/exponents.hpp"

#include <cmath>
#include <utility>

#include "polyharm/errors.hpp"

namespace polyharm {

namespace {

constexpr int kMaxChainSteps = 1000;

void require_valid_pair(int dimension, int order) {
  if (order < 1) throw ValidationError("operator order m must be >= 1");
  if (dimension < 2 * order + 1)
    throw ValidationError("N >= 2m+1 violated (N=" + std::to_string(dimension) +
                          ", m=" + std::to_string(order) + ")");
}

}  // namespace

ProblemExponents::ProblemExponents(int dimension, int order, Rational p, std::optional<Rational> q)
    : dimension_(dimension), order_(order), p_(std::move(p)), q_(std::move(q)) {
  require_valid_pair(dimension_, order_);
  if (p_ <= 0) throw ValidationError("p must be positive");
  if (q_ && *q_ <= 0) throw ValidationError("q must be positive");
}

Rational critical_exponent(int dimension, int order) {
  require_valid_pair(dimension, order);
  return Rational(dimension + 2 * order, dimension - 2 * order);
}

Rational critical_exponent(const ProblemExponents& pe) {
  return critical_exponent(pe.dimension(), pe.order());
}

PClass classify_p(const ProblemExponents& pe) {
  const Rational crit = critical_exponent(pe);
  const Rational& p = pe.p();
  if (p < 1) return PClass::Sublinear;
  if (p == 1) return PClass::WideSubcritical;
  if (p < crit) return PClass::StrictSubcritical;
  if (p == crit) return PClass::Critical;
  return PClass::Supercritical;
}

std::string_view to_string(PClass c) {
  switch (c) {
    case PClass::Sublinear: return "sublinear";
    case PClass::WideSubcritical: return "wide-subcritical";
    case PClass::StrictSubcritical: return "strict-subcritical";
    case PClass::Critical: return "critical";
    case PClass::Supercritical: return "supercritical";
  }
  return "?";
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Subconformal: return "subconformal";
    case Branch::Conformal: return "conformal";
    case Branch::Terminal: return "terminal";
  }
  return "?";
}

StepResult sobolev_step(const Rational& q, const ProblemExponents& pe) {
  if (q <= 1) throw ValidationError("sobolev_step requires q > 1");
  const int n = pe.dimension();
  const int m = pe.order();
  const Rational two_m_q = 2 * m * q;
  if (two_m_q < n) return {Branch::Subconformal, Rational(q * n / (n - two_m_q))};
  if (two_m_q == n) return {Branch::Conformal, Rational(pe.p() * Rational(n + 1, 2 * m))};
  return {Branch::Terminal, std::nullopt};
}

ExponentLedger bootstrap_chain(const ProblemExponents& pe) {
  if (classify_p(pe) != PClass::StrictSubcritical)
    throw ValidationError("bootstrap chain requires 1 < p < (N+2m)/(N-2m)");
  const int n = pe.dimension();
  const int m = pe.order();
  const Rational& p = pe.p();

  ExponentLedger ledger;
  ledger.dimension = n;
  ledger.order = m;
  ledger.p = p;
  ledger.critical = critical_exponent(pe);

  // Fixed point of 1/q -> p/q - 2mp/N.
  const Rational fixed = Rational(2 * m) * p / (Rational(n) * (p - 1));

  Rational q = Rational(2 * n) / (p * (n - 2 * m));
  std::size_t anchor = 0;
  Rational anchor_inverse = 1 / q;
  for (int step = 0;; ++step) {
    if (step >= kMaxChainSteps)
      throw InternalError("bootstrap chain did not terminate within 1000 steps");
    const StepResult next = sobolev_step(q, pe);
    ledger.chain.push_back({q, next.branch});
    if (next.branch == Branch::Terminal) break;

    const Rational q_next = *next.next / p;
    if (q_next <= q) throw InternalError("bootstrap chain is not increasing");
    const std::size_t index = ledger.chain.size();
    if (next.branch == Branch::Subconformal) {
      const auto power = static_cast<unsigned>(index - anchor);
      const Rational closed = pow(p, power) * (anchor_inverse - fixed) + fixed;
      const Rational iterated = 1 / q_next;
      ledger.closed_form.push_back({index, iterated, closed, iterated == closed});
      if (iterated != closed) throw InternalError("closed-form recursion disagrees with iteration");
    } else {
      // The affine recursion only covers subconformal steps; restart it here.
      anchor = index;
      anchor_inverse = 1 / q_next;
    }
    q = q_next;
  }
  ledger.k0 = static_cast<int>(ledger.chain.size()) - 1;

  const GammaNu gn = gamma_and_nu(pe, ledger);
  ledger.gamma_paper = gn.gamma_paper;
  ledger.gamma_iterated = gn.gamma_iterated;
  ledger.nu_lower = gn.nu_lower;
  ledger.beta_paper = gn.beta_paper;
  return ledger;
}

GammaNu gamma_and_nu(const ProblemExponents& pe, const ExponentLedger& ledger) {
  const Rational& p = pe.p();
  if (p == 1) throw ValidationError("gamma is undefined for p = 1");
  const int n = pe.dimension();
  const int m = pe.order();
  const Rational q1 = Rational(2 * n) / (p * (n - 2 * m));

  GammaNu out;
  if (2 * m * q1 < n) {
    const Rational lead = Rational(2 * m) * pow(p, 3) / (Rational(n) * (p - 1));
    const Rational gap = Rational(2 * m) / (Rational(n) * (p - 1)) - Rational(n - 2 * m, 2 * n);
    if (gap != 0) out.gamma_paper = lead / gap;

    const Rational beta_denominator = Rational(2 * m) * p / (p - 1) - 1 / q1;
    if (beta_denominator != 0)
      out.beta_paper = (Rational(2 * m) * p / (Rational(n) * (p - 1))) / beta_denominator;
  }

  // Exponent of alpha^{-nu}: energy bound plus one (SCP) factor, then
  // e -> 1 + p e for each of the k0 bootstrap steps.
  Rational e = 1 + p / 2;
  for (int j = 0; j < ledger.k0; ++j) e = 1 + p * e;
  out.gamma_iterated = e;

  const Rational gamma_max =
      out.gamma_paper && *out.gamma_paper > out.gamma_iterated ? *out.gamma_paper : out.gamma_iterated;
  out.nu_lower = 1 / gamma_max;
  return out;
}

Rational nonexistence_delta(const Rational& p, const Rational& q) {
  if (q <= p) throw ValidationError("nonexistence_delta requires q > p");
  if (p < 1) throw ValidationError("nonexistence_delta requires p >= 1");
  if (p == 1) throw ValidationError("p = 1 uses the linear threshold form, not delta");
  return 1 / ((p + 1) / (q - p) + (p + 1) / (p - 1));
}

LambdaLower lambda_lower(const ThresholdConstants& constants, const Rational& p, const Rational& q) {
  if (q <= p) throw ValidationError("lambda_lower requires q > p");
  if (p == 1) {
    if (!(constants.klm > 0)) throw ValidationError("p = 1 threshold needs a positive constant");
    return {LambdaLower::Form::LinearP, 1.0 / constants.klm, std::nullopt};
  }
  if (!(constants.c1 > 0) || !(constants.c2 > 0))
    throw ValidationError("lambda_lower needs positive C1 and C2");
  const Rational delta = nonexistence_delta(p, q);
  return {LambdaLower::Form::Delta, std::pow(constants.c2 / constants.c1, to_double(delta)), delta};
}

double scaling_alpha(double lambda, const Rational& p) {
  if (p <= 1) throw ValidationError("scaling requires p > 1");
  if (!(lambda > 0)) throw ValidationError("scaling requires lambda > 0");
  return std::pow(lambda, -1.0 / to_double(p - 1));
}

double scaling_lambda(double alpha, const Rational& p) {
  if (p <= 1) throw ValidationError("scaling requires p > 1");
  if (!(alpha > 0) || alpha > 1) throw ValidationError("scaling requires alpha in (0, 1]");
  return std::pow(alpha, to_double(1 - p));
}

}  // namespace polyharm
