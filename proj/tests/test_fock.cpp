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


#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "colorhbt/erasure.hpp"
#include "colorhbt/fock.hpp"

namespace colorhbt {
namespace {

double max_abs_diff(const TripleModeState& a, const TripleModeState& b) {
  return (a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff();
}

TEST(FockBasis, IndexRoundTrip) {
  const FockBasis b(1, 2, 7);
  EXPECT_EQ(b.dimension(), 2u * 3 * 8);
  for (std::size_t i = 0; i < b.dimension(); ++i) EXPECT_EQ(b.index(b.occupation(i)), i);
  EXPECT_EQ(b.index({1, 0, 0}), 3u * 8);
  EXPECT_THROW(b.index({0, 3, 0}), InvalidArgument);
}

TEST(FockBasis, PumpCutoff) {
  EXPECT_EQ(pump_cutoff(0.0), 10);
  EXPECT_EQ(pump_cutoff(64.0), 64 + 80 + 10);
  EXPECT_EQ(pump_cutoff(4.0), 34);
}

// Poisson amplitudes by the recursion c_n = c_{n-1} alpha / sqrt(n).
TEST(CoherentState, MatchesRecursionOracle) {
  const double n_mean = 4.0, phase = 0.3;
  const auto basis = FockBasis::for_pump(n_mean);
  const auto s = coherent_state({n_mean, phase}, basis);
  const Complex alpha = std::polar(2.0, phase);
  Complex c = std::exp(-n_mean / 2);
  double retained = 0.0;
  std::vector<Complex> oracle;
  for (int n = 0; n <= basis.n3_max(); ++n) {
    if (n > 0) c *= alpha / std::sqrt(static_cast<double>(n));
    oracle.push_back(c);
    retained += std::norm(c);
  }
  for (int n = 0; n <= basis.n3_max(); ++n)
    EXPECT_LT(std::abs(s.amplitude({0, 0, n}) - oracle[static_cast<std::size_t>(n)] / std::sqrt(retained)), 1e-14);
  EXPECT_NEAR(s.norm(), 1.0, kEpsNorm);
  EXPECT_NEAR(s.expectation_n(Mode::kGamma3), n_mean, 1e-9);
  EXPECT_TRUE(s.truncation_valid());
}

// |<alpha|beta>|^2 = exp(-|alpha - beta|^2); alpha = 1, beta = i gives e^{-2}.
TEST(CoherentState, OverlapOfDisplacedStates) {
  const FockBasis basis(0, 0, pump_cutoff(1.0));
  const auto a = coherent_state({1.0, 0.0}, basis);
  const auto b = coherent_state({1.0, kPi / 2}, basis);
  EXPECT_NEAR(std::norm(inner_product(a, b)), std::exp(-2.0), 1e-12);
}

TEST(CoherentState, CutoffTooSmallThrows) {
  const FockBasis basis(1, 1, 20);
  try {
    (void)product_state(1, 0, {64.0, 0.0}, basis);
    FAIL() << "expected CutoffError";
  } catch (const CutoffError& e) {
    EXPECT_GE(e.leakage(), kEpsTrunc);
  }
}

TEST(CoherentState, ZeroPumpIsVacuum) {
  const FockBasis basis(1, 1, 10);
  const auto s = product_state(1, 0, {0.0, 0.0}, basis);
  EXPECT_EQ(s.amplitude({1, 0, 0}), Complex(1.0));
}

TEST(Hamiltonian, TrilinearIsHermitianAndConservesSectors) {
  const FockBasis basis(2, 2, 12);
  const auto h = TrilinearHamiltonian{0.7}.matrix(basis);
  const Eigen::MatrixXcd d(h);
  EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  for (int k = 0; k < h.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(h, k); it; ++it) {
      const auto from = basis.occupation(static_cast<std::size_t>(it.col()));
      const auto to = basis.occupation(static_cast<std::size_t>(it.row()));
      EXPECT_EQ(from.n1 + from.n2, to.n1 + to.n2);
      EXPECT_EQ(from.n2 + from.n3, to.n2 + to.n3);
    }
}

// <0,1,n-1| H |1,0,n> = i chi sqrt(n) straight from the ladder operators.
TEST(Hamiltonian, TrilinearMatrixElement) {
  const FockBasis basis(1, 1, 9);
  const double chi = 0.37;
  const Eigen::MatrixXcd d(TrilinearHamiltonian{chi}.matrix(basis));
  for (int n = 1; n <= 9; ++n) {
    const auto i = static_cast<Eigen::Index>(basis.index({1, 0, n}));
    const auto j = static_cast<Eigen::Index>(basis.index({0, 1, n - 1}));
    EXPECT_LT(std::abs(d(j, i) - Complex(0.0, chi * std::sqrt(n))), 1e-15);
  }
}

TEST(Hamiltonian, EffectiveIsHermitian) {
  const FockBasis basis(2, 2, 0);
  const Eigen::MatrixXcd d(EffectiveHamiltonian{1.3, 0.4}.matrix(basis));
  EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Evolution, DenseAndSparseExponentialsAgree) {
  const double n_mean = 9.0;
  const auto basis = FockBasis::for_pump(n_mean, 2);
  const auto in = product_state(1, 1, {n_mean, 0.2}, basis);
  const auto h = TrilinearHamiltonian{0.25}.matrix(basis);
  const auto dense = evolve_brute_force(in, h, 1.1, ExpMethod::kDenseEigen);
  const auto sparse = evolve_brute_force(in, h, 1.1, ExpMethod::kSparseTaylor);
  EXPECT_LT(max_abs_diff(dense, sparse), 1e-11);
  EXPECT_NEAR(dense.norm(), 1.0, kEpsNorm);
  EXPECT_NEAR(sparse.norm(), 1.0, kEpsNorm);
}

TEST(Evolution, BruteForcePreservesSectors) {
  const auto basis = FockBasis::for_pump(4.0, 2);
  const auto in = product_state(1, 0, {4.0, 0.0}, basis);
  const auto out = evolve_brute_force(in, TrilinearHamiltonian{0.3}, 2.0);
  EXPECT_NEAR(out.signal_sector_probability(1), 1.0, 1e-12);
}

struct OracleCase {
  double n_mean;
  double theta;
  SignalInput input;
};

class ClosedFormVsBruteForce : public ::testing::TestWithParam<OracleCase> {};

TEST_P(ClosedFormVsBruteForce, AmplitudesAgree) {
  const auto [n_mean, theta, input] = GetParam();
  const auto basis = FockBasis::for_pump(n_mean);
  const double chi_t = theta / std::sqrt(n_mean);
  const bool g1 = input == SignalInput::kGamma1;
  const auto in = product_state(g1 ? 1 : 0, g1 ? 0 : 1, {n_mean, 0.6}, basis);
  const auto closed = evolve_closed_form(in, chi_t);
  // One extra pump shell so the top gamma2 component is not frozen by truncation.
  const FockBasis wide(1, 1, basis.n3_max() + 1);
  const auto brute = evolve_brute_force(change_basis(in, wide), TrilinearHamiltonian{1.0}, chi_t);
  EXPECT_LT(max_abs_diff(closed, change_basis(brute, basis)), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Grid, ClosedFormVsBruteForce,
                         ::testing::Values(OracleCase{1, kPi / 8, SignalInput::kGamma1},
                                           OracleCase{1, kPi / 2, SignalInput::kGamma2},
                                           OracleCase{4, kPi / 4, SignalInput::kGamma1},
                                           OracleCase{4, kPi / 4, SignalInput::kGamma2},
                                           OracleCase{16, kPi / 2, SignalInput::kGamma1},
                                           OracleCase{16, kPi / 8, SignalInput::kGamma2}));

TEST(Evolution, PopulatedPumpShellThrows) {
  const FockBasis basis(1, 1, 5);
  const auto in = TripleModeState::basis_state(basis, {0, 1, 5});
  EXPECT_THROW((void)evolve_brute_force(in, TrilinearHamiltonian{1.0}, 0.4), CutoffError);
}

TEST(Evolution, ClosedFormOnSingleShellIsRotation) {
  // |1,0,n> alone: a 2x2 rotation by chi t sqrt(n), no truncation involved.
  const FockBasis basis(1, 1, 6);
  const auto in = TripleModeState::basis_state(basis, {1, 0, 5});
  const auto out = evolve_closed_form(in, 0.3);
  EXPECT_NEAR(out.amplitude({1, 0, 5}).real(), std::cos(0.3 * std::sqrt(5.0)), 1e-15);
  EXPECT_NEAR(out.amplitude({0, 1, 4}).real(), std::sin(0.3 * std::sqrt(5.0)), 1e-15);
}

TEST(Evolution, ClosedFormRejectsOtherSectors) {
  const FockBasis basis(2, 2, 30);
  const auto in = product_state(1, 1, {4.0, 0.0}, basis);
  EXPECT_THROW((void)evolve_closed_form(in, 0.1), SectorError);
}

TEST(Evolution, InnerProductRejectsMismatchedBases) {
  const auto a = TripleModeState::basis_state(FockBasis(1, 1, 3), {0, 0, 0});
  const auto b = TripleModeState::basis_state(FockBasis(1, 1, 4), {0, 0, 0});
  EXPECT_THROW((void)inner_product(a, b), BasisMismatch);
}

TEST(StateIO, RoundTripIsExact) {
  const auto basis = FockBasis::for_pump(4.0);
  const auto s = evolve_closed_form(SignalInput::kGamma1, {4.0, 0.9}, kPi / 8, basis);
  std::stringstream ss;
  write_state(ss, s);
  const auto back = read_state(ss);
  EXPECT_TRUE(back.basis() == s.basis());
  EXPECT_EQ(max_abs_diff(back, s), 0.0);
  EXPECT_EQ(to_text(back), to_text(s));
}

TEST(StateIO, RejectsOutOfOrderLines) {
  std::stringstream ss("1,1,2\n0,1,0,1,0\n0,0,1,1,0\n");
  EXPECT_THROW((void)read_state(ss), InvalidArgument);
}

}  // namespace
}  // namespace colorhbt
