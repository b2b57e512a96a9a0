#pragma once

// Nonlinearities f, their primitives F, and the cut-off truncations
//   f_a(s) = theta(a s) f(a s) / a,   g_a(s) = f_a(s) + |s|^{p-1} s,
// together with the one-sided variants used for sign-definite solutions.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace polyharm {

/// A scalar nonlinearity g together with its primitive G (G(0) = 0).
struct Nonlinearity {
  std::function<double(double)> g;
  std::function<double(double)> G;
};

enum class NonlinearityKind {
  Zero,              // f = 0
  PurePower,         // c |s|^{q-1} s
  PowerExp,          // |s|^{q-1} s exp(a s)
  LinearExp,         // L s exp((q+1) s)
  NegativeSingular,  // -|s|^{2-nu} exp(a s) / (a^nu s)
  Sampled,           // monotone cubic through a user table
};

std::string to_string(NonlinearityKind kind);
NonlinearityKind parse_nonlinearity_kind(const std::string& id);

struct NonlinearityParams {
  double q = 0.0;
  double a = 0.0;
  double L = 0.0;
  double nu = 0.0;
  double coefficient = 1.0;
};

/// A nonlinearity f with its primitive. Immutable; copies share state.
class NonlinearitySpec {
 public:
  static NonlinearitySpec zero();
  static NonlinearitySpec pure_power(double q, double coefficient = 1.0);
  static NonlinearitySpec power_exp(double q, double a);
  static NonlinearitySpec linear_exp(double L, double q);
  static NonlinearitySpec negative_singular(double nu, double a = 1.0);
  /// Table of (s, f(s)); sorted internally, f(0) = 0 enforced.
  static NonlinearitySpec sampled(std::vector<double> s, std::vector<double> f);
  /// Two-column CSV (s, f(s)); a non-numeric first line is treated as a header.
  static NonlinearitySpec from_csv(const std::filesystem::path& path);

  NonlinearityKind kind() const;
  const NonlinearityParams& params() const;

  double f(double s) const;
  /// Closed form where available, adaptive Gauss-Kronrod otherwise.
  double F(double s) const;

  /// Evaluation range of a sampled table (infinite for closed forms).
  double max_abs_argument() const;

 private:
  struct Impl;
  explicit NonlinearitySpec(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Sorted probe points in [-radius, radius]: dyadic points +-2^{-j} (j <= 40),
/// a uniform grid, and `random_points` uniform samples drawn from `seed`.
std::vector<double> probe_grid(double radius = 1.0, std::uint64_t seed = 0, int random_points = 0);

struct H0Estimate {
  double L;   // -inf when f(s)/s diverges downward
  double nu;  // smallest admissible lattice value
  double C1;  // sup |f(s)| / |s|^{1-nu} over the probe grid
};

/// Limit of f(s)/s at 0 and the growth exponent nu of |f(s)| <= C1 |s|^{1-nu}.
/// Throws HypothesisFailure when L >= lambda1 or no lattice nu works, and
/// when f is not finite on the probe grid.
H0Estimate estimate_H0(const NonlinearitySpec& f, double lambda1, const std::vector<double>& probe);

struct H1Report {
  double q = 0.0;
  double s0 = 0.0;
  bool growth_ok = false;        // f(s)s - (q+1)F(s) >= 0
  double growth_worst = 0.0;
  double growth_witness = 0.0;
  bool small_ok = false;         // f(s)s >= C0 |s|^{q+1} on |s| <= s0
  double c0 = 0.0;
  double small_witness = 0.0;
  bool global_ok = false;        // C |s|^{q+1} <= f(s)s on the whole grid
  double global_c = 0.0;
  double global_witness = 0.0;
  bool pass() const { return growth_ok && small_ok && global_ok; }
};

H1Report check_H1(const NonlinearitySpec& f, double q, double s0, const std::vector<double>& probe);

struct TruncationParams {
  double s0p = 0.0;
  double eps0 = 0.0;
  double nu = 0.0;
  double C1 = 0.0;
  double lambda1 = 0.0;
  double L_estimate = 0.0;
};

/// eps0 at the middle of the gap below lambda1, s0' the largest dyadic value
/// 2^{-j} (j = 1..20) passing the quadratic and growth checks.
/// Throws HypothesisFailure when (H0) fails or no s0' is admissible.
TruncationParams calibrate_truncation(const NonlinearitySpec& f, double lambda1,
                                      const std::vector<double>& probe);

/// C^1 cubic smoothstep: 1 on |s| <= s0p/2, 0 on |s| >= s0p.
double cutoff_theta(double s, double s0p);
/// Derivative of cutoff_theta.
double cutoff_theta_prime(double s, double s0p);

/// Truncated nonlinearity at scale alpha; immutable, cheap to copy.
class TruncatedNonlinearity {
 public:
  double alpha() const;
  double p() const;
  const TruncationParams& params() const;
  const NonlinearitySpec& spec() const;

  double f_alpha(double s) const;
  double F_alpha(double s) const;
  double g(double s) const;
  double G(double s) const;
  double g_plus(double s) const;
  double G_plus(double s) const;
  double g_minus(double s) const;
  double G_minus(double s) const;

  Nonlinearity full() const;
  Nonlinearity plus() const;
  Nonlinearity minus() const;

 private:
  struct Impl;
  explicit TruncatedNonlinearity(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
  friend TruncatedNonlinearity truncate(const NonlinearitySpec&, const TruncationParams&, double, double);
};

/// Requires alpha in (0, 1] and p > 1.
TruncatedNonlinearity truncate(const NonlinearitySpec& f, const TruncationParams& params, double alpha,
                               double p);

/// Pure power |s|^{p-1}s plus lambda-free f: g = f + lambda |s|^{p-1} s,
/// G = F + lambda |s|^{p+1}/(p+1). Used for untruncated residuals and sweeps.
Nonlinearity untruncated(const NonlinearitySpec& f, double lambda, double p);

/// |s|^{p-1} s, evaluated without pow() for small integer p.
double signed_power(double s, double p);

}  // namespace polyharm
