#include "dgdflow/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dgdflow {

void IntegratorOptions::validate() const {
  if (abs_tol <= 0.0 || rel_tol <= 0.0)
    throw std::invalid_argument("integrator: tolerances must be positive");
  if (!(h_min <= h_init && h_init <= h_max))
    throw std::invalid_argument("integrator: step bounds must satisfy h_min <= h_init <= h_max");
  if (max_steps < 1) throw std::invalid_argument("integrator: max_steps must be >= 1");
  if (stride < 1) throw std::invalid_argument("integrator: stride must be >= 1");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                 kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
// Error weights (5th-order minus embedded 4th-order solution).
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
// Dense-output weights.
constexpr double kD1 = -12715105075.0 / 11282082432.0;
constexpr double kD3 = 87487479700.0 / 32700410799.0;
constexpr double kD4 = -10690763975.0 / 1880347072.0;
constexpr double kD5 = 701980252875.0 / 199316789632.0;
constexpr double kD6 = -1453857185.0 / 822651844.0;
constexpr double kD7 = 69997945.0 / 29380423.0;

struct DenseSegment {
  double t0 = 0.0, h = 0.0;
  VectorXd c0, c1, c2, c3, c4;

  VectorXd eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    return c0 + theta * (c1 + theta1 * (c2 + theta * (c3 + theta1 * c4)));
  }
};

DenseSegment dopri_dense(double t, double h, const VectorXd& y0, const VectorXd& y1,
                         const VectorXd k[7]) {
  DenseSegment seg;
  seg.t0 = t;
  seg.h = h;
  const VectorXd dy = y1 - y0;
  seg.c0 = y0;
  seg.c1 = dy;
  seg.c2 = h * k[0] - dy;
  seg.c3 = dy - h * k[6] - seg.c2;
  seg.c4 = h * (kD1 * k[0] + kD3 * k[2] + kD4 * k[3] + kD5 * k[4] + kD6 * k[5] +
                kD7 * k[6]);
  return seg;
}

// Cubic Hermite for the fixed-step method.
DenseSegment hermite_dense(double t, double h, const VectorXd& y0, const VectorXd& y1,
                           const VectorXd& f0, const VectorXd& f1) {
  // Rewrite the Hermite cubic in the same nested basis:
  // c0 + th*(c1 + th1*(c2 + th*c3)) with c4 = 0.
  DenseSegment seg;
  seg.t0 = t;
  seg.h = h;
  const VectorXd dy = y1 - y0;
  seg.c0 = y0;
  seg.c1 = dy;
  seg.c2 = h * f0 - dy;
  seg.c3 = dy - h * f1 - seg.c2;
  seg.c4 = VectorXd::Zero(y0.size());
  return seg;
}

struct DriverConfig {
  const std::function<bool(double, const VectorXd&)>* predicate = nullptr;
  std::string event_name;
  const std::vector<double>* sample_times = nullptr;
};

Trajectory drive(const FlowField& field, const VectorXd& x0, double t0, double t_end,
                 const IntegratorOptions& opts, const DriverConfig& cfg) {
  opts.validate();
  if (!(t_end > t0)) throw std::invalid_argument("integrator: t_end must exceed t0");
  if (!x0.allFinite()) throw std::invalid_argument("integrator: x0 must be finite");
  if (x0.size() != field.dim)
    throw std::invalid_argument("integrator: state dimension mismatch");

  Trajectory traj;
  const bool sampling = cfg.sample_times != nullptr;
  std::size_t next_sample = 0;

  auto push = [&traj](double t, const VectorXd& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
  };

  if (x0.cwiseAbs().maxCoeff() > field.box_halfwidth) {
    push(t0, x0);
    traj.termination = Termination::box_exit;
    return traj;
  }
  if (cfg.predicate && (*cfg.predicate)(t0, x0)) {
    push(t0, x0);
    traj.termination = Termination::event_fired;
    traj.event_name = cfg.event_name;
    return traj;
  }

  if (sampling) {
    while (next_sample < cfg.sample_times->size() &&
           (*cfg.sample_times)[next_sample] <= t0) {
      push((*cfg.sample_times)[next_sample], x0);
      ++next_sample;
    }
  } else {
    push(t0, x0);
  }

  const bool adaptive = opts.method == Method::rk45_adaptive;
  double t = t0;
  VectorXd y = x0;
  double h = adaptive ? std::min(opts.h_init, t_end - t0) : opts.h_init;
  VectorXd k[7];
  for (auto& ki : k) ki.resize(field.dim);
  VectorXd ytmp(field.dim), ynew(field.dim), yerr(field.dim);
  field.eval(t, y, k[0]);
  long since_store = 0;
  bool last_stored = true;

  auto store_step = [&](double tn, const VectorXd& yn, bool force) {
    ++since_store;
    if (force || since_store >= opts.stride) {
      push(tn, yn);
      since_store = 0;
      last_stored = true;
    } else {
      last_stored = false;
    }
  };

  while (t < t_end) {
    if (traj.steps_taken >= opts.max_steps) {
      if (!last_stored) push(t, y);
      traj.termination = Termination::step_failure;
      traj.event_name = "max_steps";
      return traj;
    }
    double step = std::min(h, t_end - t);
    DenseSegment seg;

    if (adaptive) {
      while (true) {
        ytmp = y + step * (kA21 * k[0]);
        field.eval(t + kC[1] * step, ytmp, k[1]);
        ytmp = y + step * (kA31 * k[0] + kA32 * k[1]);
        field.eval(t + kC[2] * step, ytmp, k[2]);
        ytmp = y + step * (kA41 * k[0] + kA42 * k[1] + kA43 * k[2]);
        field.eval(t + kC[3] * step, ytmp, k[3]);
        ytmp = y + step * (kA51 * k[0] + kA52 * k[1] + kA53 * k[2] + kA54 * k[3]);
        field.eval(t + kC[4] * step, ytmp, k[4]);
        ytmp = y + step * (kA61 * k[0] + kA62 * k[1] + kA63 * k[2] + kA64 * k[3] +
                           kA65 * k[4]);
        field.eval(t + step, ytmp, k[5]);
        ynew = y + step * (kA71 * k[0] + kA73 * k[2] + kA74 * k[3] + kA75 * k[4] +
                           kA76 * k[5]);
        field.eval(t + step, ynew, k[6]);
        yerr = step * (kE1 * k[0] + kE3 * k[2] + kE4 * k[3] + kE5 * k[4] + kE6 * k[5] +
                       kE7 * k[6]);

        double err = 0.0;
        for (int i = 0; i < field.dim; ++i) {
          const double sc =
              opts.abs_tol + opts.rel_tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
          const double q = yerr(i) / sc;
          err += q * q;
        }
        err = std::sqrt(err / field.dim);

        if (std::isfinite(err) && err <= 1.0) {
          const double grow =
              err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
          h = std::clamp(step * grow, opts.h_min, opts.h_max);
          break;
        }
        const double shrink =
            std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
        step *= shrink;
        if (step < opts.h_min) {
          if (!last_stored) push(t, y);
          traj.termination = Termination::step_failure;
          return traj;
        }
      }
      if (sampling) seg = dopri_dense(t, step, y, ynew, k);
    } else {
      // Classic RK4, fixed step; k[0] already holds f(t, y).
      ytmp = y + 0.5 * step * k[0];
      field.eval(t + 0.5 * step, ytmp, k[1]);
      ytmp = y + 0.5 * step * k[1];
      field.eval(t + 0.5 * step, ytmp, k[2]);
      ytmp = y + step * k[2];
      field.eval(t + step, ytmp, k[3]);
      ynew = y + step / 6.0 * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
      if (!ynew.allFinite()) {
        if (!last_stored) push(t, y);
        traj.termination = Termination::step_failure;
        return traj;
      }
      if (sampling) {
        field.eval(t + step, ynew, k[6]);
        seg = hermite_dense(t, step, y, ynew, k[0], k[6]);
      }
    }

    const double t_new = t + step;
    ++traj.steps_taken;

    if (sampling) {
      while (next_sample < cfg.sample_times->size() &&
             (*cfg.sample_times)[next_sample] <= t_new + 1e-14 * std::abs(t_new)) {
        push((*cfg.sample_times)[next_sample], seg.eval((*cfg.sample_times)[next_sample]));
        ++next_sample;
      }
    }

    if (!ynew.allFinite() || ynew.cwiseAbs().maxCoeff() > field.box_halfwidth) {
      if (!sampling) push(t_new, ynew);
      traj.termination = Termination::box_exit;
      return traj;
    }

    t = t_new;
    y.swap(ynew);
    if (adaptive)
      k[0] = k[6];  // FSAL
    else
      field.eval(t, y, k[0]);

    const bool at_end = t >= t_end - 1e-14 * std::max(1.0, std::abs(t_end));
    if (!sampling) store_step(t, y, at_end);

    if (cfg.predicate && (*cfg.predicate)(t, y)) {
      if (!sampling && !last_stored) push(t, y);
      traj.termination = Termination::event_fired;
      traj.event_name = cfg.event_name;
      return traj;
    }
    if (at_end) break;
  }

  traj.termination = Termination::horizon_reached;
  return traj;
}

}  // namespace

Trajectory integrate(const FlowField& field, const VectorXd& x0, double t0, double t_end,
                     const IntegratorOptions& opts) {
  return drive(field, x0, t0, t_end, opts, DriverConfig{});
}

Trajectory integrate_until(const FlowField& field, const VectorXd& x0, double t0,
                           double t_end,
                           const std::function<bool(double, const VectorXd&)>& predicate,
                           const std::string& event_name, const IntegratorOptions& opts) {
  DriverConfig cfg;
  cfg.predicate = &predicate;
  cfg.event_name = event_name;
  return drive(field, x0, t0, t_end, opts, cfg);
}

Trajectory integrate_sampled(const FlowField& field, const VectorXd& x0, double t0,
                             double t_end, const std::vector<double>& sample_times,
                             const IntegratorOptions& opts) {
  for (std::size_t i = 1; i < sample_times.size(); ++i)
    if (!(sample_times[i] > sample_times[i - 1]))
      throw std::invalid_argument("integrator: sample times must be strictly increasing");
  DriverConfig cfg;
  cfg.sample_times = &sample_times;
  return drive(field, x0, t0, t_end, opts, cfg);
}

double order_check(const FlowField& field, const VectorXd& x0, double t0, double t_end,
                   const std::function<VectorXd(double)>& reference, double h0,
                   int levels) {
  std::vector<double> logh, logerr;
  for (int lvl = 0; lvl < levels; ++lvl) {
    const double h = h0 / std::pow(2.0, lvl);
    IntegratorOptions opts;
    opts.method = Method::rk4_fixed;
    opts.h_init = h;
    opts.h_min = h * 0.5;
    opts.h_max = h;
    Trajectory traj = integrate(field, x0, t0, t_end, opts);
    const double err = (traj.final_state() - reference(traj.final_time())).norm();
    if (err <= 0.0) continue;
    logh.push_back(std::log(h));
    logerr.push_back(std::log(err));
  }
  if (logh.size() < 2) throw std::runtime_error("order_check: not enough error samples");
  // Least-squares slope of log(err) against log(h).
  double mh = 0.0, me = 0.0;
  for (std::size_t i = 0; i < logh.size(); ++i) {
    mh += logh[i];
    me += logerr[i];
  }
  mh /= logh.size();
  me /= logh.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < logh.size(); ++i) {
    num += (logh[i] - mh) * (logerr[i] - me);
    den += (logh[i] - mh) * (logh[i] - mh);
  }
  return num / den;
}

}  // namespace dgdflow
