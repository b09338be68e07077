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


// Brute-force reference for the two-detector coincidence probability: the
// received two-source state is written out in the four signal modes
// (gamma1_A, gamma2_A, gamma1_B, gamma2_B), each detector's conversion is the
// matrix exponential of the effective Hamiltonian on its own two modes, and
// the coincidence is the projection onto one filtered photon per detector.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "colorhbt/core.hpp"
#include "colorhbt/erasure.hpp"
#include "colorhbt/fock.hpp"
#include "colorhbt/interferometry.hpp"

namespace colorhbt {

struct OracleOptions {
  bool flip_effective_sign = false;  // mutation hook for the self-test
  double interaction_time = 1.0;
};

namespace detail {

// exp(-i H_eff T) on one detector's (gamma1, gamma2) modes, cutoff 2 each.
inline Eigen::MatrixXcd detector_propagator(double theta, double phi, const OracleOptions& opt,
                                            const FockBasis& local) {
  const double g = theta / opt.interaction_time;
  SparseOperator h = EffectiveHamiltonian{g, phi}.matrix(local);
  if (opt.flip_effective_sign) h = -h;
  return dense_propagator(h, opt.interaction_time);
}

}  // namespace detail

/// Coincidence probability for sources in superpositions of 0..2 photons,
/// truncated to the four two-photon terms that can reach both detectors.
inline double coincidence_superposition_oracle(const Amplitudes& d, double theta, double phi,
                                               const PhotonAmplitudes& c, const PhotonAmplitudes& dd,
                                               OutputFilter filter = OutputFilter::kGamma2,
                                               const OracleOptions& opt = {}) {
  const FockBasis local(2, 2, 0);
  const auto n = static_cast<Eigen::Index>(local.dimension());
  auto idx = [&](int n1, int n2) { return static_cast<Eigen::Index>(local.index({n1, n2, 0})); };
  const Eigen::MatrixXcd u = detail::detector_propagator(theta, phi, opt, local);
  const Eigen::MatrixXcd u_ab = Eigen::kroneckerProduct(u, u);

  // Joint index: a * n + b for local states a (detector A) and b (detector B).
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n * n);
  auto add = [&](Eigen::Index a, Eigen::Index b, Complex amp) { psi(a * n + b) += amp; };
  add(idx(1, 0), idx(0, 1), c[1] * dd[1] * d.d1a * d.d2b);
  add(idx(0, 1), idx(1, 0), c[1] * dd[1] * d.d1b * d.d2a);
  add(idx(1, 0), idx(1, 0), c[2] * dd[0] * d.d1a * d.d1b);
  add(idx(0, 1), idx(0, 1), c[0] * dd[2] * d.d2a * d.d2b);

  const Eigen::VectorXcd out = u_ab * psi;
  const Eigen::Index keep = filter == OutputFilter::kGamma2 ? idx(0, 1) : idx(1, 0);
  return std::norm(out(keep * n + keep));
}

}  // namespace colorhbt
