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

// The color-erasure detector: output-color post-selection, indistinguishability
// of the post-selected branches, and the two-mode color rotation that the
// strongly pumped waveguide reduces to.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

#include "colorhbt/core.hpp"
#include "colorhbt/fock.hpp"

namespace colorhbt {

enum class OutputFilter { kGamma1, kGamma2 };

struct DetectorSetting {
  double theta = kPi / 4;  // chi T sqrt(N)
  double pump_phase = 0.0;
  OutputFilter filter = OutputFilter::kGamma2;
  double efficiency = 1.0;
  double dark_count_rate = 0.0;  // counts per second
  double visibility_degradation = 1.0;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidArgument("efficiency must lie in [0,1]");
    if (!(visibility_degradation >= 0.0 && visibility_degradation <= 1.0))
      throw InvalidArgument("visibility degradation must lie in [0,1]");
    if (!(dark_count_rate >= 0.0)) throw InvalidArgument("dark count rate must be nonnegative");
  }
};

/// a |1,0> + b |0,1> over the (gamma1, gamma2) single-photon subspace.
struct ColorQubitState {
  Complex a;
  Complex b;

  Eigen::Vector2cd vector() const { return {a, b}; }
  double norm() const { return std::sqrt(std::norm(a) + std::norm(b)); }
};

using ColorDensity = Eigen::Matrix2cd;
using ColorUnitary = Eigen::Matrix2cd;

/// [[cos t, -e^{-i phi} sin t], [e^{i phi} sin t, cos t]] acting on (|1,0>, |0,1>).
inline ColorUnitary effective_rotation(double theta, double phi) {
  const double c = std::cos(theta), s = std::sin(theta);
  ColorUnitary u;
  u << c, -std::polar(s, -phi), std::polar(s, phi), c;
  return u;
}

/// Large-pump image of a gamma1 input.
inline ColorQubitState phi1_state(double theta, double phi) {
  return {std::cos(theta), std::polar(std::sin(theta), phi)};
}

/// Large-pump image of a gamma2 input.
inline ColorQubitState phi2_state(double theta, double phi) {
  return {-std::polar(std::sin(theta), -phi), std::cos(theta)};
}

struct PostSelection {
  std::optional<TripleModeState> state;  // empty branch when nullopt
  double probability = 0.0;

  bool empty() const { return !state.has_value(); }
};

/// Projects onto one photon in the filtered signal mode and renormalizes.
inline PostSelection post_select(const TripleModeState& state, OutputFilter filter) {
  const auto& basis = state.basis();
  const double total = state.amplitudes().squaredNorm();
  if (total == 0.0) throw InvalidArgument("post-selection of the zero vector");
  Eigen::VectorXcd kept = Eigen::VectorXcd::Zero(state.amplitudes().size());
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const auto o = basis.occupation(i);
    const int n = filter == OutputFilter::kGamma1 ? o.n1 : o.n2;
    if (n == 1) kept(static_cast<Eigen::Index>(i)) = state.amplitudes()(static_cast<Eigen::Index>(i));
  }
  const double p = kept.squaredNorm() / total;
  if (p < kEmptyBranch) return {std::nullopt, p};
  return {TripleModeState(basis, kept / std::sqrt(kept.squaredNorm()), state.label() + "~"), p};
}

/// |<Psi1~|Psi2~>| on the truncated space, gamma2 output, coupling theta = chi T sqrt(N).
/// An empty post-selected branch has overlap 0.
inline double erasure_overlap(double mean_photons, double theta, double phi) {
  if (!(mean_photons > 0.0)) throw InvalidArgument("erasure overlap needs a positive pump photon number");
  const auto basis = FockBasis::for_pump(mean_photons);
  const CoherentSpec pump{mean_photons, phi};
  const double chi_t = theta / std::sqrt(mean_photons);
  const auto s1 = post_select(evolve_closed_form(SignalInput::kGamma1, pump, chi_t, basis), OutputFilter::kGamma2);
  const auto s2 = post_select(evolve_closed_form(SignalInput::kGamma2, pump, chi_t, basis), OutputFilter::kGamma2);
  if (s1.empty() || s2.empty()) return 0.0;
  return std::abs(inner_product(*s1.state, *s2.state));
}

/// Traces out the pump. Requires the state to be in the n1 + n2 = 1 sector.
inline ColorDensity reduced_signal_density(const TripleModeState& state) {
  if (std::abs(state.signal_sector_probability(1) - 1.0) > kEpsNorm)
    throw SectorError("reduced signal density requires the single-photon sector");
  const auto& basis = state.basis();
  ColorDensity rho = ColorDensity::Zero();
  for (int n = 0; n <= basis.n3_max(); ++n) {
    const Complex v[2] = {state.amplitude({1, 0, n}), state.amplitude({0, 1, n})};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rho(i, j) += v[i] * std::conj(v[j]);
  }
  return rho / rho.trace().real();
}

/// <phi|rho|phi> for a pure reference state.
inline double fidelity(const ColorDensity& rho, const ColorQubitState& phi) {
  const Eigen::Vector2cd v = phi.vector();
  return (v.adjoint() * rho * v)(0, 0).real();
}

/// "2,2" then four "re,im" lines, row-major, 17 significant digits.
inline void write_density(std::ostream& os, const ColorDensity& rho) {
  os << "2,2\n";
  char buf[96];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      std::snprintf(buf, sizeof buf, "%.16e,%.16e\n", rho(i, j).real(), rho(i, j).imag());
      os << buf;
    }
}

}  // namespace colorhbt
