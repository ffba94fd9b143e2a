#include "dgdflow/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "dgdflow/numerics.hpp"

namespace dgdflow {

Schedule::Schedule(double tau_alpha, double tau_beta)
    : tau_alpha_(tau_alpha), tau_beta_(tau_beta) {
  if (!(0.0 <= tau_beta && tau_beta < tau_alpha && tau_alpha <= 1.0))
    throw std::invalid_argument(
        "schedule: weight exponents must satisfy 0 <= tau_beta < tau_alpha <= 1");
}

double Schedule::alpha(double t) const {
  if (t < 0.0) throw std::invalid_argument("schedule: time must be >= 0");
  return std::pow(t + 1.0, -tau_alpha_);
}

double Schedule::beta(double t) const {
  if (t < 0.0) throw std::invalid_argument("schedule: time must be >= 0");
  return std::pow(t + 1.0, -tau_beta_);
}

double Schedule::beta_dot(double t) const {
  if (t < 0.0) throw std::invalid_argument("schedule: time must be >= 0");
  return -tau_beta_ * std::pow(t + 1.0, -tau_beta_ - 1.0);
}

namespace {

// Running integral of (x+1)^{-tau} from 0; closed-form antiderivative.
double power_integral(double tau, double x) {
  if (tau == 1.0) return std::log1p(x);
  return (std::pow(x + 1.0, 1.0 - tau) - 1.0) / (1.0 - tau);
}

double power_integral_inverse_guess(double tau, double s) {
  if (tau == 1.0) return std::expm1(s);
  return std::pow(1.0 + (1.0 - tau) * s, 1.0 / (1.0 - tau)) - 1.0;
}

}  // namespace

TimeChange time_change(const Schedule& s, ClockKind which) {
  const double tau = which == ClockKind::beta ? s.tau_beta() : s.tau_alpha();
  TimeChange tc;
  tc.clock = which;
  tc.S = [tau](double x) {
    if (x < 0.0) throw std::invalid_argument("time_change: time must be >= 0");
    return power_integral(tau, x);
  };
  tc.T = [tau](double t) {
    if (t < 0.0) throw std::invalid_argument("time_change: time must be >= 0");
    if (t == 0.0) return 0.0;
    const double guess = power_integral_inverse_guess(tau, t);
    const double lo = std::max(0.0, 0.5 * guess - 1.0);
    const double hi = 2.0 * guess + 1.0;
    return invert_monotone([tau](double x) { return power_integral(tau, x); }, t, lo, hi,
                           1e-14,
                           [tau](double x) { return std::pow(x + 1.0, -tau); });
  };
  if (which == ClockKind::beta) {
    tc.gamma = [s, T = tc.T](double t) {
      const double orig = T(t);
      return s.alpha(orig) / s.beta(orig);
    };
  } else {
    tc.gamma = [s, T = tc.T](double t) {
      const double orig = T(t);
      return s.beta(orig) / s.alpha(orig);
    };
  }
  return tc;
}

double fit_gamma_exponent(const TimeChange& tc, double t_max) {
  const int points = 400;
  const double lo = std::log(1e-3);
  const double hi = std::log(t_max);
  double fit = 1e9;
  for (int i = 0; i <= points; ++i) {
    const double t = std::exp(lo + (hi - lo) * i / points);
    const double g = tc.gamma(t);
    if (g <= 0.0) continue;
    fit = std::min(fit, -std::log(g) / std::log(t + 1.0));
  }
  return std::max(0.0, fit * (1.0 - 1e-9));
}

PenaltySchedule alpha_clock_penalty(const Schedule& s) {
  const double ta = s.tau_alpha();
  const double tb = s.tau_beta();
  if (tb <= 0.0)
    throw std::invalid_argument(
        "schedule: manifold experiments need tau_beta > 0 (penalty must grow)");
  PenaltySchedule p;
  if (ta == 1.0) {
    p.beta = [tb](double t) { return std::exp((1.0 - tb) * t); };
    p.beta_dot = [tb](double t) { return (1.0 - tb) * std::exp((1.0 - tb) * t); };
  } else {
    const double q = (ta - tb) / (1.0 - ta);
    p.beta = [q, ta](double t) { return std::pow(1.0 + (1.0 - ta) * t, q); };
    p.beta_dot = [q, ta, tb](double t) {
      return (ta - tb) * std::pow(1.0 + (1.0 - ta) * t, q - 1.0);
    };
  }
  return p;
}

PenaltySchedule power_penalty(double q) {
  if (q <= 0.0) throw std::invalid_argument("schedule: penalty exponent must be > 0");
  PenaltySchedule p;
  p.beta = [q](double t) { return std::pow(t + 1.0, q); };
  p.beta_dot = [q](double t) { return q * std::pow(t + 1.0, q - 1.0); };
  return p;
}

}  // namespace dgdflow
