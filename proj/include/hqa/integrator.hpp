#pragma once

// Adaptive Dormand-Prince 5(4) for complex linear ODE systems.
//
// The step is accepted when ||y5 - y4||_2 <= tol * max(||y||_2, tiny) and the
// integrator lands exactly on every requested output time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "hqa/error.hpp"

namespace hqa {

struct IntegratorOptions {
  double tol = 1e-8;
  std::size_t max_steps = 50'000'000;
  double initial_step = 0.0;  // 0 picks one from the right-hand side
  double max_step = std::numeric_limits<double>::infinity();
  bool renormalize = false;   // rescale to unit norm after each accepted step
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_error_estimate = 0.0;   // largest accepted scaled error (<= 1)
  double max_norm_deviation = 0.0;   // max | ||y|| - 1 | before any renormalization
  double last_step = 0.0;
};

namespace detail {

// Dormand & Prince (1980) coefficients.
struct DP5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*, the embedded 4th-order difference
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrate dy/dt = f(t, y) from times.front() through every entry of
/// `times` (strictly increasing). `rhs(t, y, dydt)` writes into dydt.
/// `on_sample(index, t, y)` fires at each output time, including the first.
template <class Rhs, class OnSample>
IntegratorStats integrate_dp5(Rhs&& rhs, Eigen::VectorXcd& y, std::span<const double> times,
                              const IntegratorOptions& opt, OnSample&& on_sample) {
  using V = Eigen::VectorXcd;
  using C = detail::DP5;
  if (times.empty()) throw error(errc::invalid_argument, "no output times");
  if (!(opt.tol > 0.0)) throw error(errc::invalid_argument, "integrator tolerance must be > 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw error(errc::invalid_argument, "output times must be strictly increasing");

  IntegratorStats stats;
  const auto n = y.size();
  V k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n);

  double t = times.front();
  auto norm_check = [&](const V& v) {
    stats.max_norm_deviation = std::max(stats.max_norm_deviation, std::abs(v.norm() - 1.0));
  };
  norm_check(y);
  on_sample(std::size_t{0}, t, static_cast<const V&>(y));
  if (times.size() == 1) return stats;

  rhs(t, y, k1);
  double h = opt.initial_step;
  if (!(h > 0.0)) {
    // Hairer-Norsett-Wanner starting guess for a 5th-order method.
    const double d0 = std::max(y.norm(), 1e-300);
    const double d1 = std::max(k1.norm(), 1e-300);
    const double h0 = 0.01 * d0 / d1;
    tmp = y + h0 * k1;
    rhs(t + h0, tmp, k2);
    const double d2 = (k2 - k1).norm() / (h0 * d0);
    const double h1 = std::max(d1 / d0, d2) <= 1e-15
                          ? std::max(1e-6, h0 * 1e-3)
                          : std::pow(0.01 / std::max(d1 / d0, d2), 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min(h, opt.max_step);

  const double safety = 0.9, min_factor = 0.2, max_factor = 5.0;
  std::size_t steps = 0;
  std::size_t next = 1;
  double last_err = 0.0;

  while (next < times.size()) {
    const double target = times[next];
    bool hits_target = false;
    double step = h;
    if (t + step >= target || target - (t + step) < 1e-12 * std::max(1.0, std::abs(target))) {
      step = target - t;
      hits_target = true;
    }
    if (++steps > opt.max_steps)
      throw integration_failure("step budget of " + std::to_string(opt.max_steps) +
                                    " exhausted at t=" + std::to_string(t),
                                t, last_err * opt.tol, steps);
    if (!(step > 0.0) || t + step == t)
      throw integration_failure("step size underflow at t=" + std::to_string(t), t,
                                last_err * opt.tol, steps);

    tmp = y + step * C::a21 * k1;
    rhs(t + C::c2 * step, tmp, k2);
    tmp = y + step * (C::a31 * k1 + C::a32 * k2);
    rhs(t + C::c3 * step, tmp, k3);
    tmp = y + step * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3);
    rhs(t + C::c4 * step, tmp, k4);
    tmp = y + step * (C::a51 * k1 + C::a52 * k2 + C::a53 * k3 + C::a54 * k4);
    rhs(t + C::c5 * step, tmp, k5);
    tmp = y + step * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 + C::a64 * k4 + C::a65 * k5);
    const double t_new = hits_target ? target : t + step;
    rhs(t_new, tmp, k6);
    y_new = y + step * (C::b1 * k1 + C::b3 * k3 + C::b4 * k4 + C::b5 * k5 + C::b6 * k6);
    rhs(t_new, y_new, k7);
    err = step * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 + C::e6 * k6 + C::e7 * k7);

    const double scale = opt.tol * std::max({y.norm(), y_new.norm(), 1e-300});
    const double e = err.norm() / scale;
    if (!std::isfinite(e))
      throw integration_failure("non-finite error estimate at t=" + std::to_string(t), t,
                                std::numeric_limits<double>::infinity(), steps);

    if (e <= 1.0) {
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);  // first-same-as-last
      ++stats.accepted;
      stats.max_error_estimate = std::max(stats.max_error_estimate, e);
      stats.last_step = step;
      last_err = e;
      norm_check(y);
      if (opt.renormalize) {
        const double nrm = y.norm();
        y /= nrm;
        k1 /= nrm;
      }
      if (hits_target) {
        on_sample(next, t, static_cast<const V&>(y));
        ++next;
      }
      const double factor =
          e == 0.0 ? max_factor : std::clamp(safety * std::pow(e, -0.2), min_factor, max_factor);
      // A step shortened to hit an output time says nothing about the natural size.
      h = std::min(opt.max_step, hits_target ? std::max(h, step * factor) : step * factor);
    } else {
      ++stats.rejected;
      last_err = e;
      h = step * std::max(min_factor, safety * std::pow(e, -0.2));
    }
  }
  return stats;
}

}  // namespace hqa
