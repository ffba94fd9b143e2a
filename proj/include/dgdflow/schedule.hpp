#pragma once

#include <functional>

namespace dgdflow {

/// Power-law weight pair alpha(t) = (t+1)^{-tau_alpha}, beta(t) = (t+1)^{-tau_beta}
/// with 0 <= tau_beta < tau_alpha <= 1.
class Schedule {
 public:
  Schedule(double tau_alpha, double tau_beta);

  double tau_alpha() const { return tau_alpha_; }
  double tau_beta() const { return tau_beta_; }

  double alpha(double t) const;
  double beta(double t) const;
  double beta_dot(double t) const;

 private:
  double tau_alpha_;
  double tau_beta_;
};

enum class ClockKind { beta, alpha };

/// Reparametrization s = S(tau) with S the running integral of one weight
/// component; T is its inverse and gamma the weight ratio in the new clock
/// (alpha/beta for the beta clock, beta/alpha for the alpha clock).
struct TimeChange {
  ClockKind clock;
  std::function<double(double)> S;
  std::function<double(double)> T;
  std::function<double(double)> gamma;
};

TimeChange time_change(const Schedule& s, ClockKind which);

/// Largest exponent tau_gamma (up to a small safety factor) with
/// gamma(t) <= (t+1)^{-tau_gamma} on a dense log grid over (0, t_max].
double fit_gamma_exponent(const TimeChange& tc, double t_max);

/// Time-varying penalty weight for the subspace-constrained flow
/// xdot = -grad h(x) - beta(t) Q x; beta grows without bound.
struct PenaltySchedule {
  std::function<double(double)> beta;
  std::function<double(double)> beta_dot;
};

/// The penalty induced by rescaling the consensus+innovations flow to the
/// alpha clock: beta_pen(t) = beta(T(t)) / alpha(T(t)).
PenaltySchedule alpha_clock_penalty(const Schedule& s);

/// beta(t) = (t+1)^q, q > 0. Synthetic penalty used in tests.
PenaltySchedule power_penalty(double q);

}  // namespace dgdflow
