// Copyright 2026 The colorhbt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Least-squares fringe models.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "colorhbt/core.hpp"

namespace colorhbt {

struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;  // >= 0
  double phase = 0.0;      // y = offset + amplitude cos(arg + phase)
  double rss = 0.0;
  double visibility = 0.0;  // amplitude / offset
  double visibility_stderr = 0.0;
};

namespace detail {

struct LinearFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  double rss = 0.0;
};

inline LinearFit linear_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  LinearFit f;
  const Eigen::MatrixXd xtx = x.transpose() * x;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  f.beta = ldlt.solve(x.transpose() * y);
  f.rss = (y - x * f.beta).squaredNorm();
  const auto dof = static_cast<double>(x.rows() - x.cols());
  const double sigma2 = dof > 0 ? f.rss / dof : 0.0;
  f.cov = sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  return f;
}

}  // namespace detail

/// Fits y = c + a cos(arg) + b sin(arg) for given fringe arguments, with
/// unit weights; the visibility error comes from the residual scatter.
inline SinusoidFit fit_sinusoid_args(std::span<const double> args, std::span<const double> y) {
  if (args.size() != y.size() || y.size() < 4) throw InvalidArgument("sinusoid fit needs >= 4 matched points");
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(args[static_cast<std::size_t>(i)]);
    x(i, 2) = std::sin(args[static_cast<std::size_t>(i)]);
    yy(i) = y[static_cast<std::size_t>(i)];
  }
  const auto lf = detail::linear_least_squares(x, yy);
  SinusoidFit f;
  const double c = lf.beta(0), a = lf.beta(1), b = lf.beta(2);
  f.offset = c;
  f.amplitude = std::hypot(a, b);
  f.phase = std::atan2(-b, a);
  f.rss = lf.rss;
  f.visibility = c != 0.0 ? f.amplitude / c : 0.0;
  if (c != 0.0 && f.amplitude > 0.0) {
    // delta method on V = sqrt(a^2 + b^2) / c
    Eigen::Vector3d grad(-f.amplitude / (c * c), a / (f.amplitude * c), b / (f.amplitude * c));
    f.visibility_stderr = std::sqrt(std::max(0.0, grad.dot(lf.cov * grad)));
  } else if (c != 0.0) {
    f.visibility_stderr = std::sqrt(std::max(0.0, 0.5 * (lf.cov(1, 1) + lf.cov(2, 2)))) / std::abs(c);
  }
  return f;
}

/// Known-period fit: arg = angular_rate * x.
inline SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y, double angular_rate) {
  std::vector<double> args(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) args[i] = angular_rate * x[i];
  return fit_sinusoid_args(args, y);
}

namespace detail {

// Golden-section minimum of f on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 100) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && (b - a) > 1e-12 * (std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Grid scan followed by golden-section refinement around the best cell.
inline double scan_then_refine(const std::function<double(double)>& f, double lo, double hi, int grid) {
  double best_x = lo, best_f = std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / grid;
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + i * step;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return golden_min(f, std::max(lo, best_x - step), std::min(hi, best_x + step));
}

}  // namespace detail

struct PhaseScaleFit {
  double scale = 1.0;  // best kappa in y ~ c + A cos(kappa * phase + beta)
  SinusoidFit fringe;
};

/// Finds the factor by which a measured fringe's phase advances relative to a
/// predicted phase function, searching kappa in [lo, hi].
inline PhaseScaleFit fit_phase_scale(std::span<const double> predicted_phase, std::span<const double> y, double lo,
                                     double hi, int grid = 400) {
  std::vector<double> args(predicted_phase.size());
  auto rss = [&](double k) {
    for (std::size_t i = 0; i < args.size(); ++i) args[i] = k * predicted_phase[i];
    return fit_sinusoid_args(args, y).rss;
  };
  PhaseScaleFit out;
  out.scale = detail::scan_then_refine(rss, lo, hi, grid);
  for (std::size_t i = 0; i < args.size(); ++i) args[i] = out.scale * predicted_phase[i];
  out.fringe = fit_sinusoid_args(args, y);
  return out;
}

struct DampedOscillationFit {
  double decay_time = 0.0;  // same unit as the abscissa
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double rss = 0.0;
};

/// y = c + exp(-|t|/T) (a cos(2 pi f t) + b sin(2 pi f t)) with known beat f;
/// T is searched on a log grid in [t_min, t_max].
inline DampedOscillationFit fit_damped_oscillation(std::span<const double> t, std::span<const double> y,
                                                   double beat_frequency, double t_min, double t_max) {
  if (t.size() != y.size() || y.size() < 5) throw InvalidArgument("damped fit needs >= 5 matched points");
  const auto n = static_cast<Eigen::Index>(y.size());
  const bool has_beat = beat_frequency != 0.0;
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) yy(i) = y[static_cast<std::size_t>(i)];
  auto design = [&](double decay) {
    Eigen::MatrixXd x(n, has_beat ? 3 : 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ti = t[static_cast<std::size_t>(i)];
      const double env = std::exp(-std::abs(ti) / decay);
      x(i, 0) = 1.0;
      x(i, 1) = env * std::cos(kTwoPi * beat_frequency * ti);
      if (has_beat) x(i, 2) = env * std::sin(kTwoPi * beat_frequency * ti);
    }
    return x;
  };
  auto rss_log = [&](double log_decay) { return detail::linear_least_squares(design(std::exp(log_decay)), yy).rss; };
  const double best = detail::scan_then_refine(rss_log, std::log(t_min), std::log(t_max), 200);
  DampedOscillationFit f;
  f.decay_time = std::exp(best);
  const auto lf = detail::linear_least_squares(design(f.decay_time), yy);
  f.offset = lf.beta(0);
  const double a = lf.beta(1), b = has_beat ? lf.beta(2) : 0.0;
  f.amplitude = std::hypot(a, b);
  f.phase = std::atan2(-b, a);
  f.rss = lf.rss;
  return f;
}

}  // namespace colorhbt
