#include "polyharm/nonlinearity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

// Boost 1.74's pchip calls an unqualified isnan.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "polyharm/errors.hpp"

namespace polyharm {

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

constexpr double kQuadratureTol = 1e-12;
constexpr unsigned kQuadratureDepth = 10;

template <class Fn>
double integrate_from_zero(const Fn& fn, double s) {
  if (s == 0.0) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  // Integrate over [0, 1] with the integrand scaled by |fn(s)|: the error
  // estimate stalls on integrands of size 1e-30 and below.
  const double end = std::abs(fn(s));
  const double scale = end > 0 && std::isfinite(end) ? end : 1.0;
  const double unit =
      GK::integrate([&](double y) { return fn(s * y) / scale; }, 0.0, 1.0, kQuadratureDepth, kQuadratureTol);
  return s * scale * unit;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

double signed_power(double s, double p) {
  if (p == 1.0) return s;
  if (p == 2.0) return s * std::abs(s);
  if (p == 3.0) return s * s * s;
  return std::copysign(std::pow(std::abs(s), p), s);
}

std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::Zero: return "zero";
    case NonlinearityKind::PurePower: return "pure-power";
    case NonlinearityKind::PowerExp: return "power-exp";
    case NonlinearityKind::LinearExp: return "linear-exp";
    case NonlinearityKind::NegativeSingular: return "negative-singular";
    case NonlinearityKind::Sampled: return "sampled";
  }
  return "?";
}

NonlinearityKind parse_nonlinearity_kind(const std::string& id) {
  for (auto k : {NonlinearityKind::Zero, NonlinearityKind::PurePower, NonlinearityKind::PowerExp,
                 NonlinearityKind::LinearExp, NonlinearityKind::NegativeSingular, NonlinearityKind::Sampled})
    if (to_string(k) == id) return k;
  throw ValidationError("unknown nonlinearity id '" + id + "'");
}

// ---------------------------------------------------------------------------
// NonlinearitySpec

struct NonlinearitySpec::Impl {
  NonlinearityKind kind;
  NonlinearityParams params;
  std::shared_ptr<const Pchip> table;
  double table_min = 0.0;
  double table_max = 0.0;

  double f(double s) const {
    const auto& pr = params;
    switch (kind) {
      case NonlinearityKind::Zero: return 0.0;
      case NonlinearityKind::PurePower: return pr.coefficient * signed_power(s, pr.q);
      case NonlinearityKind::PowerExp: return signed_power(s, pr.q) * std::exp(pr.a * s);
      case NonlinearityKind::LinearExp: return pr.L * s * std::exp((pr.q + 1.0) * s);
      case NonlinearityKind::NegativeSingular:
        // -|s|^{2-nu} e^{as} / (a^nu s) == -sign(s) |s|^{1-nu} e^{as} / a^nu
        if (s == 0.0) return 0.0;
        return -std::copysign(std::pow(std::abs(s), 1.0 - pr.nu), s) * std::exp(pr.a * s) /
               std::pow(pr.a, pr.nu);
      case NonlinearityKind::Sampled:
        if (s < table_min || s > table_max)
          throw ValidationError("sampled nonlinearity evaluated outside its table at s=" + std::to_string(s));
        return (*table)(s);
    }
    return 0.0;
  }

  double F(double s) const {
    const auto& pr = params;
    switch (kind) {
      case NonlinearityKind::Zero: return 0.0;
      case NonlinearityKind::PurePower:
        return pr.coefficient * std::pow(std::abs(s), pr.q + 1.0) / (pr.q + 1.0);
      case NonlinearityKind::LinearExp: {
        const double b = pr.q + 1.0;
        if (b == 0.0) return pr.L * s * s / 2.0;
        // L/b^2 (x e^x - (e^x - 1)) with x = b s; series near 0 avoids cancellation.
        const double x = b * s;
        double core;
        if (std::abs(x) < 1e-3) {
          core = x * x * (1.0 / 2 + x * (1.0 / 3 + x * (1.0 / 8 + x * (1.0 / 30 + x * (1.0 / 144 + x / 840)))));
        } else {
          core = x * std::exp(x) - std::expm1(x);
        }
        return pr.L * core / (b * b);
      }
      case NonlinearityKind::PowerExp:
      case NonlinearityKind::NegativeSingular:
      case NonlinearityKind::Sampled:
        return integrate_from_zero([this](double t) { return f(t); }, s);
    }
    return 0.0;
  }
};

NonlinearitySpec::NonlinearitySpec(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

NonlinearitySpec NonlinearitySpec::zero() {
  return NonlinearitySpec(std::make_shared<Impl>(Impl{NonlinearityKind::Zero, {}, nullptr}));
}

NonlinearitySpec NonlinearitySpec::pure_power(double q, double coefficient) {
  if (!(q > 0)) throw ValidationError("pure-power requires q > 0");
  NonlinearityParams p;
  p.q = q;
  p.coefficient = coefficient;
  return NonlinearitySpec(std::make_shared<Impl>(Impl{NonlinearityKind::PurePower, p, nullptr}));
}

NonlinearitySpec NonlinearitySpec::power_exp(double q, double a) {
  if (!(q >= 1)) throw ValidationError("power-exp requires q >= 1");
  if (!(a >= 0)) throw ValidationError("power-exp requires a >= 0");
  NonlinearityParams p;
  p.q = q;
  p.a = a;
  return NonlinearitySpec(std::make_shared<Impl>(Impl{NonlinearityKind::PowerExp, p, nullptr}));
}

NonlinearitySpec NonlinearitySpec::linear_exp(double L, double q) {
  NonlinearityParams p;
  p.L = L;
  p.q = q;
  return NonlinearitySpec(std::make_shared<Impl>(Impl{NonlinearityKind::LinearExp, p, nullptr}));
}

NonlinearitySpec NonlinearitySpec::negative_singular(double nu, double a) {
  if (!(nu >= 0 && nu < 1)) throw ValidationError("negative-singular requires nu in [0, 1)");
  if (!(a > 0)) throw ValidationError("negative-singular requires a > 0");
  NonlinearityParams p;
  p.nu = nu;
  p.a = a;
  return NonlinearitySpec(std::make_shared<Impl>(Impl{NonlinearityKind::NegativeSingular, p, nullptr}));
}

NonlinearitySpec NonlinearitySpec::sampled(std::vector<double> s, std::vector<double> f) {
  if (s.size() != f.size()) throw ValidationError("sampled nonlinearity: column lengths differ");
  std::vector<std::pair<double, double>> rows;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i]) || !std::isfinite(f[i]))
      throw ValidationError("sampled nonlinearity: non-finite table entry");
    rows.emplace_back(s[i], s[i] == 0.0 ? 0.0 : f[i]);
  }
  if (std::none_of(rows.begin(), rows.end(), [](const auto& r) { return r.first == 0.0; }))
    rows.emplace_back(0.0, 0.0);
  std::sort(rows.begin(), rows.end());
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first) throw ValidationError("sampled nonlinearity: duplicate abscissa");
  if (rows.size() < 4) throw ValidationError("sampled nonlinearity needs at least 4 points");
  if (rows.front().first >= 0 || rows.back().first <= 0)
    throw ValidationError("sampled nonlinearity must bracket s = 0");

  std::vector<double> xs, ys;
  for (const auto& [x, y] : rows) {
    xs.push_back(x);
    ys.push_back(y);
  }
  Impl impl{NonlinearityKind::Sampled, {}, nullptr, xs.front(), xs.back()};
  impl.table = std::make_shared<const Pchip>(std::move(xs), std::move(ys));
  return NonlinearitySpec(std::make_shared<Impl>(std::move(impl)));
}

NonlinearitySpec NonlinearitySpec::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open nonlinearity table " + path.string());
  std::vector<double> s, f;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a, b;
    if (!(row >> a >> b)) {
      if (first) {
        first = false;
        continue;
      }
      throw ValidationError("malformed row in " + path.string() + ": " + line);
    }
    first = false;
    s.push_back(a);
    f.push_back(b);
  }
  return sampled(std::move(s), std::move(f));
}

NonlinearityKind NonlinearitySpec::kind() const { return impl_->kind; }
const NonlinearityParams& NonlinearitySpec::params() const { return impl_->params; }
double NonlinearitySpec::f(double s) const { return impl_->f(s); }
double NonlinearitySpec::F(double s) const { return impl_->F(s); }

double NonlinearitySpec::max_abs_argument() const {
  if (impl_->kind != NonlinearityKind::Sampled) return std::numeric_limits<double>::infinity();
  return std::min(-impl_->table_min, impl_->table_max);
}

// ---------------------------------------------------------------------------
// Hypothesis checks

std::vector<double> probe_grid(double radius, std::uint64_t seed, int random_points) {
  std::vector<double> grid;
  grid.push_back(0.0);
  for (int j = 0; j <= 40; ++j) {
    const double s = radius * std::ldexp(1.0, -j);
    grid.push_back(s);
    grid.push_back(-s);
  }
  constexpr int kUniform = 400;
  for (int i = 0; i <= kUniform; ++i) grid.push_back(radius * (-1.0 + 2.0 * i / kUniform));
  if (random_points > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-radius, radius);
    for (int i = 0; i < random_points; ++i) grid.push_back(dist(rng));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

H0Estimate estimate_H0(const NonlinearitySpec& f, double lambda1, const std::vector<double>& probe) {
  for (double s : probe)
    if (std::abs(s) <= 1.0 && !std::isfinite(f.f(s)))
      throw HypothesisFailure("f is not finite at s=" + std::to_string(s));

  // f(s)/s on s = +-2^{-j}.
  constexpr int kFirst = 4, kLast = 40, kTail = 28;
  double side_limit[2];
  int side_diverges[2] = {0, 0};
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    std::vector<double> quotient;
    for (int j = kFirst; j <= kLast; ++j) {
      const double s = sign * std::ldexp(1.0, -j);
      const double v = f.f(s);
      if (!std::isfinite(v)) throw HypothesisFailure("f is not finite at s=" + std::to_string(s));
      quotient.push_back(v / s);
    }
    std::vector<double> xs, ys;
    bool same_sign = true;
    const double lead = quotient.back();
    for (int j = kTail; j <= kLast; ++j) {
      const double v = quotient[static_cast<std::size_t>(j - kFirst)];
      if (v == 0.0 || (v > 0) != (lead > 0)) same_sign = false;
      if (v != 0.0) {
        xs.push_back(j);
        ys.push_back(std::log2(std::abs(v)));
      }
    }
    if (same_sign && xs.size() > 2 && least_squares_slope(xs, ys) > 0.02) {
      side_diverges[side] = lead > 0 ? 1 : -1;
      side_limit[side] = lead > 0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
    } else {
      // Richardson on the dyadic sequence, assuming an O(s) remainder.
      const std::size_t n = quotient.size();
      side_limit[side] = 2.0 * quotient[n - 1] - quotient[n - 2];
    }
  }

  double L;
  if (side_diverges[0] == 1 || side_diverges[1] == 1) {
    L = std::numeric_limits<double>::infinity();
  } else if (side_diverges[0] == -1 && side_diverges[1] == -1) {
    L = -std::numeric_limits<double>::infinity();
  } else if (side_diverges[0] != 0 || side_diverges[1] != 0) {
    throw HypothesisFailure("f(s)/s has no limit at 0 (one-sided divergence)");
  } else {
    if (std::abs(side_limit[0] - side_limit[1]) > 1e-6 * (1.0 + std::abs(side_limit[0])))
      throw HypothesisFailure("f(s)/s has different one-sided limits at 0");
    L = 0.5 * (side_limit[0] + side_limit[1]);
  }
  if (L >= lambda1)
    throw HypothesisFailure("lim f(s)/s = " + std::to_string(L) + " is not below lambda1 = " +
                            std::to_string(lambda1));

  // Smallest nu on {0, 0.05, ..., 0.95} for which |f(s)|/|s|^{1-nu} stays bounded at 0.
  for (int k = 0; k < 20; ++k) {
    const double nu = k / 20.0;
    bool bounded = true;
    for (int side = 0; side < 2 && bounded; ++side) {
      const double sign = side == 0 ? 1.0 : -1.0;
      std::vector<double> xs, ys;
      for (int j = 20; j <= kLast; ++j) {
        const double s = sign * std::ldexp(1.0, -j);
        const double ratio = std::abs(f.f(s)) / std::pow(std::abs(s), 1.0 - nu);
        if (ratio > 0) {
          xs.push_back(j);
          ys.push_back(std::log2(ratio));
        }
      }
      if (xs.size() > 2 && least_squares_slope(xs, ys) > 1e-3) bounded = false;
    }
    if (!bounded) continue;
    double c1 = 0.0;
    for (double s : probe) {
      if (s == 0.0 || std::abs(s) > 1.0) continue;
      c1 = std::max(c1, std::abs(f.f(s)) / std::pow(std::abs(s), 1.0 - nu));
    }
    return {L, nu, c1};
  }
  throw HypothesisFailure("no nu in [0, 1) bounds |f(s)| by C|s|^{1-nu} near 0");
}

H1Report check_H1(const NonlinearitySpec& f, double q, double s0, const std::vector<double>& probe) {
  H1Report r;
  r.q = q;
  r.s0 = s0;
  r.growth_ok = true;
  r.growth_worst = std::numeric_limits<double>::infinity();
  r.c0 = std::numeric_limits<double>::infinity();
  r.global_c = std::numeric_limits<double>::infinity();
  for (double s : probe) {
    if (s == 0.0) continue;
    const double fs = f.f(s) * s;
    const double F = f.F(s);
    const double gap = fs - (q + 1.0) * F;
    const double tol = 1e-9 * (std::abs(fs) + (q + 1.0) * std::abs(F));
    if (gap < r.growth_worst) {
      r.growth_worst = gap;
      r.growth_witness = s;
    }
    if (gap < -tol) r.growth_ok = false;
    const double ratio = fs / std::pow(std::abs(s), q + 1.0);
    if (std::abs(s) <= s0 && ratio < r.c0) {
      r.c0 = ratio;
      r.small_witness = s;
    }
    if (ratio < r.global_c) {
      r.global_c = ratio;
      r.global_witness = s;
    }
  }
  r.small_ok = r.c0 > 0 && std::isfinite(r.c0);
  r.global_ok = r.global_c > 0 && std::isfinite(r.global_c);
  return r;
}

TruncationParams calibrate_truncation(const NonlinearitySpec& f, double lambda1, const std::vector<double>& probe) {
  if (!(lambda1 > 0)) throw ValidationError("calibration requires lambda1 > 0");
  const H0Estimate h0 = estimate_H0(f, lambda1, probe);
  const double l_plus = std::isfinite(h0.L) ? std::max(h0.L, 0.0) : 0.0;

  TruncationParams params;
  params.lambda1 = lambda1;
  params.L_estimate = h0.L;
  params.nu = h0.nu;
  params.C1 = h0.C1;
  params.eps0 = std::min(1.0, lambda1) * (1.0 - l_plus / lambda1) / 2.0;
  const double quad = (lambda1 - params.eps0) / 2.0;
  const double growth_c = h0.C1 * (1.0 + 1e-6);

  for (int j = 1; j <= 20; ++j) {
    const double s0p = std::ldexp(1.0, -j);
    if (s0p > f.max_abs_argument()) continue;
    std::vector<double> grid;
    constexpr int kDense = 400;
    for (int i = 0; i <= kDense; ++i) grid.push_back(s0p * (-1.0 + 2.0 * i / kDense));
    for (int k = 1; k <= 40; ++k) {
      grid.push_back(s0p * std::ldexp(1.0, -k));
      grid.push_back(-s0p * std::ldexp(1.0, -k));
    }
    bool ok = true;
    for (double s : grid) {
      if (s == 0.0) continue;
      const double F = f.F(s);
      const double fs = f.f(s) * s;
      const double power = std::pow(std::abs(s), 2.0 - h0.nu);
      if (F > quad * s * s * (1.0 + 1e-10) || std::abs(fs) > growth_c * power ||
          std::abs(F) > growth_c * power) {
        ok = false;
        break;
      }
    }
    if (ok) {
      params.s0p = s0p;
      return params;
    }
  }
  throw HypothesisFailure("no admissible truncation threshold s0' in {2^-1, ..., 2^-20}");
}

// ---------------------------------------------------------------------------
// Truncation

double cutoff_theta(double s, double s0p) {
  const double t = std::clamp(2.0 * std::abs(s) / s0p - 1.0, 0.0, 1.0);
  return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
}

double cutoff_theta_prime(double s, double s0p) {
  const double u = 2.0 * std::abs(s) / s0p - 1.0;
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double dt_ds = std::copysign(2.0 / s0p, s);
  return (-6.0 * u + 6.0 * u * u) * dt_ds;
}

struct TruncatedNonlinearity::Impl {
  NonlinearitySpec spec;
  TruncationParams params;
  double alpha;
  double p;
  // Cumulative integral of theta*f at t = +-k*h, k = 0..kCells, h = s0p/kCells.
  static constexpr int kCells = 256;
  double h = 0.0;
  std::array<std::vector<double>, 2> cumulative;

  double weighted(double t) const {
    const double th = cutoff_theta(t, params.s0p);
    return th == 0.0 ? 0.0 : th * spec.f(t);
  }

  // Integral of theta*f from 0 to t. Negative t is handled as the mirror
  // image of the positive side so that odd f gives an exactly even primitive.
  double primitive(double t) const {
    if (t == 0.0) return 0.0;
    const int side = t > 0 ? 0 : 1;
    const double sign = t > 0 ? 1.0 : -1.0;
    const double a = std::abs(t);
    if (a >= params.s0p) return cumulative[side].back();
    auto mirrored = [this, sign](double x) { return sign * weighted(sign * x); };
    const auto k = static_cast<std::size_t>(a / h);
    if (k == 0) return integrate_from_zero(mirrored, a);
    using GL = boost::math::quadrature::gauss<double, 10>;
    return cumulative[side][k] + GL::integrate(mirrored, static_cast<double>(k) * h, a);
  }
};

TruncatedNonlinearity::TruncatedNonlinearity(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

TruncatedNonlinearity truncate(const NonlinearitySpec& f, const TruncationParams& params, double alpha, double p) {
  if (!(alpha > 0) || alpha > 1) throw ValidationError("truncation scale alpha must lie in (0, 1]");
  if (!(p > 1)) throw ValidationError("truncation requires p > 1");
  if (!(params.s0p > 0 && params.s0p < 1)) throw ValidationError("truncation requires calibrated s0' in (0, 1)");

  auto impl = std::make_shared<TruncatedNonlinearity::Impl>(
      TruncatedNonlinearity::Impl{f, params, alpha, p, 0.0, {}});
  using Impl = TruncatedNonlinearity::Impl;
  impl->h = params.s0p / Impl::kCells;
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    auto& table = impl->cumulative[static_cast<std::size_t>(side)];
    table.assign(Impl::kCells + 1, 0.0);
    const Impl& ref = *impl;
    for (int k = 0; k < Impl::kCells; ++k) {
      const double a = k * impl->h, b = (k + 1) * impl->h;
      auto mirrored = [&ref, sign](double x) { return sign * ref.weighted(sign * x); };
      // theta is polynomial on each cell, so a fixed rule suffices away from
      // the origin, where f itself may be singular.
      const double cell = k == 0 ? integrate_from_zero(mirrored, b)
                                 : boost::math::quadrature::gauss<double, 10>::integrate(mirrored, a, b);
      table[static_cast<std::size_t>(k + 1)] = table[static_cast<std::size_t>(k)] + cell;
    }
  }
  return TruncatedNonlinearity(std::move(impl));
}

double TruncatedNonlinearity::alpha() const { return impl_->alpha; }
double TruncatedNonlinearity::p() const { return impl_->p; }
const TruncationParams& TruncatedNonlinearity::params() const { return impl_->params; }
const NonlinearitySpec& TruncatedNonlinearity::spec() const { return impl_->spec; }

double TruncatedNonlinearity::f_alpha(double s) const {
  const double a = impl_->alpha;
  return impl_->weighted(a * s) / a;
}

double TruncatedNonlinearity::F_alpha(double s) const {
  const double a = impl_->alpha;
  return impl_->primitive(a * s) / (a * a);
}

double TruncatedNonlinearity::g(double s) const { return f_alpha(s) + signed_power(s, impl_->p); }

double TruncatedNonlinearity::G(double s) const {
  return F_alpha(s) + std::pow(std::abs(s), impl_->p + 1.0) / (impl_->p + 1.0);
}

double TruncatedNonlinearity::g_plus(double s) const {
  if (s <= 0.0) return 0.0;
  return f_alpha(s) + signed_power(s, impl_->p);
}

double TruncatedNonlinearity::G_plus(double s) const {
  if (s <= 0.0) return 0.0;
  return G(s);
}

double TruncatedNonlinearity::g_minus(double s) const {
  if (s >= 0.0) return 0.0;
  return f_alpha(s) + signed_power(s, impl_->p);
}

double TruncatedNonlinearity::G_minus(double s) const {
  if (s >= 0.0) return 0.0;
  return G(s);
}

Nonlinearity TruncatedNonlinearity::full() const {
  auto self = *this;
  return {[self](double s) { return self.g(s); }, [self](double s) { return self.G(s); }};
}

Nonlinearity TruncatedNonlinearity::plus() const {
  auto self = *this;
  return {[self](double s) { return self.g_plus(s); }, [self](double s) { return self.G_plus(s); }};
}

Nonlinearity TruncatedNonlinearity::minus() const {
  auto self = *this;
  return {[self](double s) { return self.g_minus(s); }, [self](double s) { return self.G_minus(s); }};
}

Nonlinearity untruncated(const NonlinearitySpec& f, double lambda, double p) {
  return {[f, lambda, p](double s) { return f.f(s) + lambda * signed_power(s, p); },
          [f, lambda, p](double s) { return f.F(s) + lambda * std::pow(std::abs(s), p + 1.0) / (p + 1.0); }};
}

}  // namespace polyharm
