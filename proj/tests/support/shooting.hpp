#pragma once

// Radial shooting for -Delta u = u^p on the ball of radius R in R^N:
//   u'' + (N-1)/r u' + u^p = 0,  u'(0) = 0,  u(R) = 0,  u > 0.
// Bisection on u(0); each shot is a dopri5 integration started from the
// series u = a - a^p r^2 / (2N) near the origin.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/numeric/odeint.hpp>

namespace polyharm::testing {

class RadialShooting {
  using State = std::vector<double>;

 public:
  RadialShooting(int dimension, double p, double radius = 1.0) : n_(dimension), p_(p), radius_(radius) {
    double lo = 1e-3, hi = 1.0;
    while (!overshoots(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e8) throw std::runtime_error("shooting: no sign change");
    }
    for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      (overshoots(mid) ? hi : lo) = mid;
    }
    u0_ = 0.5 * (lo + hi);
  }

  double u0() const { return u0_; }

  /// Profile at sorted radii in [0, R].
  std::vector<double> profile(const std::vector<double>& radii) const {
    std::vector<double> out;
    out.reserve(radii.size());
    State x = start(u0_);
    double r = kStart;
    auto stepper = boost::numeric::odeint::make_controlled<boost::numeric::odeint::runge_kutta_dopri5<State>>(
        kTol, kTol);
    for (double target : radii) {
      if (target <= kStart) {
        out.push_back(u0_ - std::pow(u0_, p_) * target * target / (2.0 * n_));
        continue;
      }
      if (target > r) {
        boost::numeric::odeint::integrate_adaptive(stepper, rhs(), x, r, target, 1e-4);
        r = target;
      }
      out.push_back(x[0]);
    }
    return out;
  }

 private:
  static constexpr double kStart = 1e-6;
  static constexpr double kTol = 1e-13;

  State start(double a) const {
    const double ap = std::pow(a, p_);
    return {a - ap * kStart * kStart / (2.0 * n_), -ap * kStart / n_};
  }

  struct Rhs {
    int n;
    double p;
    void operator()(const State& x, State& dx, double r) const {
      const double u = x[0];
      dx[0] = x[1];
      dx[1] = -(n - 1) / r * x[1] - std::copysign(std::pow(std::abs(u), p), u);
    }
  };
  Rhs rhs() const { return {n_, p_}; }

  // True when the solution starting at u(0) = a vanishes before r = R.
  bool overshoots(double a) const {
    State x = start(a);
    double r = kStart;
    auto stepper = boost::numeric::odeint::make_controlled<boost::numeric::odeint::runge_kutta_dopri5<State>>(
        kTol, kTol);
    const int pieces = 2000;
    const double dr = (radius_ - kStart) / pieces;
    for (int k = 0; k < pieces; ++k) {
      boost::numeric::odeint::integrate_adaptive(stepper, rhs(), x, r, r + dr, dr);
      r += dr;
      if (x[0] <= 0) return true;
    }
    return false;
  }

  int n_;
  double p_;
  double radius_;
  double u0_ = 0.0;
};

}  // namespace polyharm::testing
