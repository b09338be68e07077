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

// Goodness-of-fit helpers used by the statistical self-checks.

#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "colorhbt/core.hpp"

namespace colorhbt {

struct GoodnessOfFit {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 0.0;
};

/// Pearson chi-squared of observed counts against expected counts. Adjacent
/// cells are pooled from the tail until every expected count is >= min_expected.
inline GoodnessOfFit chi_squared_test(std::span<const double> observed, std::span<const double> expected,
                                      int fitted_parameters = 0, double min_expected = 5.0) {
  if (observed.size() != expected.size()) throw InvalidArgument("chi-squared: size mismatch");
  std::vector<double> o, e;
  double acc_o = 0.0, acc_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    acc_o += observed[i];
    acc_e += expected[i];
    if (acc_e >= min_expected) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0 && !e.empty()) {
    o.back() += acc_o;
    e.back() += acc_e;
  }
  GoodnessOfFit r;
  for (std::size_t i = 0; i < o.size(); ++i) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  r.dof = static_cast<double>(o.size()) - 1.0 - fitted_parameters;
  if (r.dof < 1.0) throw InvalidArgument("chi-squared: too few cells");
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

/// Bose-Einstein probabilities P(n) = m^n / (1+m)^(n+1), n = 0 .. n_max - 1.
inline std::vector<double> bose_einstein_pmf(double mean, int n_max) {
  std::vector<double> p(static_cast<std::size_t>(n_max));
  const double q = mean / (1.0 + mean);
  double v = 1.0 / (1.0 + mean);
  for (auto& x : p) {
    x = v;
    v *= q;
  }
  return p;
}

/// Kolmogorov survival function Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic distribution and
/// the Stephens small-sample correction.
inline GoodnessOfFit ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw InvalidArgument("KS test needs two nonempty samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  GoodnessOfFit r;
  r.statistic = d;
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

}  // namespace colorhbt
