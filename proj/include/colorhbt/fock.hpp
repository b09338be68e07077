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

// Exact state mechanics on a truncated three-mode Fock space.
//
// Modes are ordered (gamma1, gamma2, gamma3): the long-wavelength signal,
// the short-wavelength signal and the pump. Basis states are enumerated
// lexicographically over (n1, n2, n3); that order is also the on-disk order
// of the text state format.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "colorhbt/core.hpp"

namespace colorhbt {

enum class Mode { kGamma1 = 0, kGamma2 = 1, kGamma3 = 2 };

struct Occupation {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;

  int operator[](Mode m) const {
    switch (m) {
      case Mode::kGamma1: return n1;
      case Mode::kGamma2: return n2;
      case Mode::kGamma3: return n3;
    }
    return 0;
  }
  friend bool operator==(const Occupation&, const Occupation&) = default;
};

/// Pump cutoff for a coherent pump of mean photon number `mean`: the Poisson
/// tail beyond N + 10 sqrt(N) + 10 is far below double precision.
inline int pump_cutoff(double mean) {
  if (!(mean >= 0.0)) throw InvalidArgument("pump mean photon number must be nonnegative");
  return static_cast<int>(std::ceil(mean + 10.0 * std::sqrt(mean) + 10.0));
}

class FockBasis {
 public:
  FockBasis(int n1_max, int n2_max, int n3_max) : max_{n1_max, n2_max, n3_max} {
    if (n1_max < 0 || n2_max < 0 || n3_max < 0) throw InvalidArgument("Fock cutoffs must be nonnegative");
  }

  /// Basis sized for a coherent pump of mean `mean` with signal cutoff `signal_max`.
  static FockBasis for_pump(double mean, int signal_max = 1) {
    return FockBasis(signal_max, signal_max, pump_cutoff(mean));
  }

  int n1_max() const { return max_.n1; }
  int n2_max() const { return max_.n2; }
  int n3_max() const { return max_.n3; }
  int max(Mode m) const { return max_[m]; }

  std::size_t dimension() const {
    return static_cast<std::size_t>(max_.n1 + 1) * static_cast<std::size_t>(max_.n2 + 1) *
           static_cast<std::size_t>(max_.n3 + 1);
  }

  bool contains(const Occupation& o) const {
    return o.n1 >= 0 && o.n2 >= 0 && o.n3 >= 0 && o.n1 <= max_.n1 && o.n2 <= max_.n2 && o.n3 <= max_.n3;
  }

  std::size_t index(const Occupation& o) const {
    if (!contains(o)) throw InvalidArgument("occupation outside basis");
    return (static_cast<std::size_t>(o.n1) * static_cast<std::size_t>(max_.n2 + 1) +
            static_cast<std::size_t>(o.n2)) *
               static_cast<std::size_t>(max_.n3 + 1) +
           static_cast<std::size_t>(o.n3);
  }

  Occupation occupation(std::size_t i) const {
    if (i >= dimension()) throw InvalidArgument("basis index out of range");
    const auto s3 = static_cast<std::size_t>(max_.n3 + 1);
    const auto s2 = static_cast<std::size_t>(max_.n2 + 1);
    Occupation o;
    o.n3 = static_cast<int>(i % s3);
    i /= s3;
    o.n2 = static_cast<int>(i % s2);
    o.n1 = static_cast<int>(i / s2);
    return o;
  }

  friend bool operator==(const FockBasis& a, const FockBasis& b) { return a.max_ == b.max_; }

 private:
  Occupation max_;
};

class TripleModeState {
 public:
  TripleModeState(FockBasis basis, Eigen::VectorXcd amplitudes, std::string label = {})
      : basis_(basis), amps_(std::move(amplitudes)), label_(std::move(label)) {
    if (static_cast<std::size_t>(amps_.size()) != basis_.dimension())
      throw BasisMismatch("amplitude vector size does not match basis dimension");
  }

  static TripleModeState basis_state(const FockBasis& basis, const Occupation& o, std::string label = {}) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dimension()));
    v(static_cast<Eigen::Index>(basis.index(o))) = 1.0;
    return TripleModeState(basis, std::move(v), std::move(label));
  }

  const FockBasis& basis() const { return basis_; }
  const Eigen::VectorXcd& amplitudes() const { return amps_; }
  const std::string& label() const { return label_; }

  Complex amplitude(const Occupation& o) const {
    if (!basis_.contains(o)) return {};
    return amps_(static_cast<Eigen::Index>(basis_.index(o)));
  }

  double norm() const { return amps_.norm(); }

  TripleModeState normalized() const {
    const double n = norm();
    if (n == 0.0) throw InvalidArgument("cannot normalize the zero vector");
    return TripleModeState(basis_, amps_ / n, label_);
  }

  TripleModeState relabeled(std::string label) const { return TripleModeState(basis_, amps_, std::move(label)); }

  /// Probability on the pump truncation shell (n3 == n3_max). The signal
  /// cutoffs bound conserved sectors and are not counted as truncation.
  double pump_shell_probability() const {
    double p = 0.0;
    for (std::size_t i = 0; i < basis_.dimension(); ++i)
      if (basis_.occupation(i).n3 == basis_.n3_max()) p += std::norm(amps_(static_cast<Eigen::Index>(i)));
    return p / std::max(amps_.squaredNorm(), 1e-300);
  }

  bool truncation_valid() const { return pump_shell_probability() < kEpsTrunc; }

  double expectation_n(Mode m) const {
    double s = 0.0;
    for (std::size_t i = 0; i < basis_.dimension(); ++i)
      s += basis_.occupation(i)[m] * std::norm(amps_(static_cast<Eigen::Index>(i)));
    return s / amps_.squaredNorm();
  }

  /// Probability that n1 + n2 equals `photons`.
  double signal_sector_probability(int photons) const {
    double s = 0.0;
    for (std::size_t i = 0; i < basis_.dimension(); ++i) {
      const auto o = basis_.occupation(i);
      if (o.n1 + o.n2 == photons) s += std::norm(amps_(static_cast<Eigen::Index>(i)));
    }
    return s / amps_.squaredNorm();
  }

 private:
  FockBasis basis_;
  Eigen::VectorXcd amps_;
  std::string label_;
};

/// Coherent pump |alpha> with alpha = e^{i phase} sqrt(mean_photons).
struct CoherentSpec {
  double mean_photons = 0.0;
  double phase = 0.0;

  Complex alpha() const { return std::polar(std::sqrt(mean_photons), phase); }
};

namespace detail {

// e^{-N/2} alpha^n / sqrt(n!) for n = 0..n_max, evaluated in log space.
inline std::vector<Complex> coherent_coefficients(const CoherentSpec& spec, int n_max) {
  if (!(spec.mean_photons >= 0.0)) throw InvalidArgument("mean photon number must be nonnegative");
  std::vector<Complex> c(static_cast<std::size_t>(n_max + 1));
  if (spec.mean_photons == 0.0) {
    c[0] = 1.0;
    return c;
  }
  const double log_r = 0.5 * std::log(spec.mean_photons);
  for (int n = 0; n <= n_max; ++n) {
    const double log_mag = -0.5 * spec.mean_photons + n * log_r - 0.5 * std::lgamma(n + 1.0);
    c[static_cast<std::size_t>(n)] = std::polar(std::exp(log_mag), n * spec.phase);
  }
  return c;
}

}  // namespace detail

/// Retained probability of the coherent expansion truncated at `n_max`.
inline double coherent_retained_probability(double mean, int n_max) {
  const auto c = detail::coherent_coefficients({mean, 0.0}, n_max);
  double s = 0.0;
  for (const auto& x : c) s += std::norm(x);
  return s;
}

/// |n1, n2> (x) |alpha>, normalized on the truncated pump mode.
inline TripleModeState product_state(int n1, int n2, const CoherentSpec& pump, const FockBasis& basis,
                                     std::string label = {}) {
  if (n1 < 0 || n2 < 0 || n1 > basis.n1_max() || n2 > basis.n2_max())
    throw InvalidArgument("signal occupation outside basis");
  const auto c = detail::coherent_coefficients(pump, basis.n3_max());
  double retained = 0.0;
  for (const auto& x : c) retained += std::norm(x);
  const double tail = std::max(0.0, 1.0 - retained);
  const double shell = std::norm(c.back()) / retained;
  if (tail >= kEpsTrunc || shell >= kEpsTrunc)
    throw CutoffError("pump cutoff too small for coherent state", std::max(tail, shell));
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dimension()));
  const double scale = 1.0 / std::sqrt(retained);
  for (int n = 0; n <= basis.n3_max(); ++n)
    v(static_cast<Eigen::Index>(basis.index({n1, n2, n}))) = c[static_cast<std::size_t>(n)] * scale;
  return TripleModeState(basis, std::move(v), std::move(label));
}

/// Signal vacuum times a coherent pump.
inline TripleModeState coherent_state(const CoherentSpec& spec, const FockBasis& basis) {
  return product_state(0, 0, spec, basis, "coherent");
}

/// Copies the amplitudes of `s` onto another basis; occupations missing from
/// the target are dropped and new ones start at zero. No renormalization.
inline TripleModeState change_basis(const TripleModeState& s, const FockBasis& target) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(target.dimension()));
  for (std::size_t i = 0; i < s.basis().dimension(); ++i) {
    const auto o = s.basis().occupation(i);
    if (target.contains(o)) v(static_cast<Eigen::Index>(target.index(o))) = s.amplitudes()(static_cast<Eigen::Index>(i));
  }
  return TripleModeState(target, std::move(v), s.label());
}

/// <a|b>, conjugate-linear in `a`.
inline Complex inner_product(const TripleModeState& a, const TripleModeState& b) {
  if (!(a.basis() == b.basis())) throw BasisMismatch("inner product of states on different bases");
  return a.amplitudes().dot(b.amplitudes());
}

/// Which basis mode plays each role of the three-wave mixing term.
struct ModeAssignment {
  Mode gamma1 = Mode::kGamma1;
  Mode gamma2 = Mode::kGamma2;
  Mode gamma3 = Mode::kGamma3;
};

using SparseOperator = Eigen::SparseMatrix<Complex>;

namespace detail {

inline int& slot(Occupation& o, Mode m) {
  switch (m) {
    case Mode::kGamma1: return o.n1;
    case Mode::kGamma2: return o.n2;
    default: return o.n3;
  }
}

// Assembles g * (A + A^dagger)-style operators: `forward` maps a basis state to
// (target, amplitude) for the non-Hermitian half; the conjugate half is added
// as the transpose-conjugate so the result is Hermitian by construction.
template <class Forward>
SparseOperator hermitian_from_half(const FockBasis& basis, Forward forward) {
  std::vector<Eigen::Triplet<Complex>> trips;
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    Occupation target;
    Complex value;
    if (!forward(basis.occupation(i), target, value)) continue;
    if (!basis.contains(target)) continue;
    const auto j = basis.index(target);
    trips.emplace_back(static_cast<int>(j), static_cast<int>(i), value);
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), std::conj(value));
  }
  const auto d = static_cast<int>(basis.dimension());
  SparseOperator h(d, d);
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

}  // namespace detail

/// H = i chi (a1 a2^dagger a3 - a1^dagger a2 a3^dagger).
struct TrilinearHamiltonian {
  double chi = 1.0;
  ModeAssignment modes{};

  SparseOperator matrix(const FockBasis& basis) const {
    const Complex ichi(0.0, chi);
    const auto m = modes;
    return detail::hermitian_from_half(basis, [&](Occupation o, Occupation& t, Complex& v) {
      const int n1 = o[m.gamma1], n2 = o[m.gamma2], n3 = o[m.gamma3];
      if (n1 < 1 || n3 < 1) return false;
      t = o;
      detail::slot(t, m.gamma1) -= 1;
      detail::slot(t, m.gamma2) += 1;
      detail::slot(t, m.gamma3) -= 1;
      v = ichi * std::sqrt(static_cast<double>(n1) * (n2 + 1) * n3);
      return true;
    });
  }
};

/// Classical-pump limit acting on the two signal modes:
/// H = i g (e^{i phase} a1 a2^dagger - e^{-i phase} a1^dagger a2), g = chi sqrt(N).
/// The pump mode of the basis is a spectator.
struct EffectiveHamiltonian {
  double coupling = 1.0;
  double pump_phase = 0.0;

  SparseOperator matrix(const FockBasis& basis) const {
    const Complex pref = Complex(0.0, coupling) * std::polar(1.0, pump_phase);
    return detail::hermitian_from_half(basis, [&](Occupation o, Occupation& t, Complex& v) {
      if (o.n1 < 1) return false;
      t = o;
      t.n1 -= 1;
      t.n2 += 1;
      v = pref * std::sqrt(static_cast<double>(o.n1) * (o.n2 + 1));
      return true;
    });
  }
};

enum class ExpMethod { kAuto, kDenseEigen, kSparseTaylor };

/// Dimension up to which kAuto exponentiates densely.
inline constexpr std::size_t kDenseExpLimit = 2000;

/// exp(-i H t) as a dense matrix through the Hermitian eigendecomposition.
inline Eigen::MatrixXcd dense_propagator(const SparseOperator& h, double time) {
  const Eigen::MatrixXcd dense(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) throw Error("Hermitian eigendecomposition failed");
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * time);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// exp(-i H t) v by repeated truncated Taylor steps of norm at most one.
inline Eigen::VectorXcd sparse_exp_apply(const SparseOperator& h, double time, const Eigen::VectorXcd& v) {
  double one_norm = 0.0;
  for (int k = 0; k < h.outerSize(); ++k) {
    double col = 0.0;
    for (SparseOperator::InnerIterator it(h, k); it; ++it) col += std::abs(it.value());
    one_norm = std::max(one_norm, col);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(one_norm * std::abs(time))));
  const Complex factor(0.0, -time / steps);
  Eigen::VectorXcd out = v;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd term = out;
    Eigen::VectorXcd acc = out;
    for (int k = 1; k < 60; ++k) {
      term = (factor / static_cast<double>(k)) * (h * term);
      acc += term;
      if (term.norm() <= 1e-17 * acc.norm()) break;
    }
    out = std::move(acc);
  }
  return out;
}

/// e^{-iHt}|psi> computed directly from the Hamiltonian matrix.
inline TripleModeState evolve_brute_force(const TripleModeState& state, const SparseOperator& h, double time,
                                          ExpMethod method = ExpMethod::kAuto) {
  if (static_cast<std::size_t>(h.rows()) != state.basis().dimension())
    throw BasisMismatch("Hamiltonian and state live on different bases");
  if (method == ExpMethod::kAuto)
    method = state.basis().dimension() <= kDenseExpLimit ? ExpMethod::kDenseEigen : ExpMethod::kSparseTaylor;
  Eigen::VectorXcd out = method == ExpMethod::kDenseEigen ? Eigen::VectorXcd(dense_propagator(h, time) * state.amplitudes())
                                                          : sparse_exp_apply(h, time, state.amplitudes());
  TripleModeState evolved(state.basis(), std::move(out), state.label());
  const double shell = evolved.pump_shell_probability();
  if (shell >= kEpsTrunc) throw CutoffError("evolved state reaches the pump cutoff", shell);
  return evolved;
}

template <class Hamiltonian>
  requires requires(const Hamiltonian& h, const FockBasis& b) {
    { h.matrix(b) } -> std::convertible_to<SparseOperator>;
  }
TripleModeState evolve_brute_force(const TripleModeState& state, const Hamiltonian& h, double time,
                                   ExpMethod method = ExpMethod::kAuto) {
  return evolve_brute_force(state, h.matrix(state.basis()), time, method);
}

enum class SignalInput { kGamma1, kGamma2 };

/// Applies the closed-form single-photon conversion map with the pump operator
/// functions cos(chiT sqrt(n3)), sin(chiT sqrt(n3)) / sqrt(n3) to a state in the
/// n1 + n2 = 1 sector with an arbitrary pump distribution. Amplitude pushed
/// beyond n3_max is dropped and reported through CutoffError when significant.
inline TripleModeState evolve_closed_form(const TripleModeState& input, double chi_t) {
  const auto& basis = input.basis();
  if (basis.n1_max() < 1 || basis.n2_max() < 1) throw SectorError("basis cannot hold a single signal photon");
  if (std::abs(input.signal_sector_probability(1) - 1.0) > kEpsNorm)
    throw SectorError("closed-form evolution requires exactly one signal photon");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(input.amplitudes().size());
  double dropped = 0.0;
  const int top = basis.n3_max();
  auto at = [&](int n1, int n2, int n3) -> Complex& {
    return out(static_cast<Eigen::Index>(basis.index({n1, n2, n3})));
  };
  for (int n = 0; n <= top; ++n) {
    // |1,0,n> -> cos(x sqrt n)|1,0,n> + sin(x sqrt n)|0,1,n-1>
    const Complex a = input.amplitude({1, 0, n});
    const double xa = chi_t * std::sqrt(static_cast<double>(n));
    at(1, 0, n) += std::cos(xa) * a;
    if (n >= 1) at(0, 1, n - 1) += std::sin(xa) * a;
    // |0,1,n> -> -sin(x sqrt(n+1))|1,0,n+1> + cos(x sqrt(n+1))|0,1,n>
    const Complex b = input.amplitude({0, 1, n});
    const double xb = chi_t * std::sqrt(static_cast<double>(n + 1));
    at(0, 1, n) += std::cos(xb) * b;
    if (n + 1 <= top)
      at(1, 0, n + 1) -= std::sin(xb) * b;
    else
      dropped += std::norm(std::sin(xb) * b);
  }
  const double total = input.amplitudes().squaredNorm();
  if (dropped / total >= kEpsTrunc) throw CutoffError("closed-form evolution leaves the basis", dropped / total);
  TripleModeState evolved(basis, std::move(out), input.label());
  return evolved.normalized();
}

/// |Psi1> (gamma1 input) or |Psi2> (gamma2 input) for a coherent pump.
inline TripleModeState evolve_closed_form(SignalInput input, const CoherentSpec& pump, double chi_t,
                                          const FockBasis& basis) {
  const bool g1 = input == SignalInput::kGamma1;
  const auto in = product_state(g1 ? 1 : 0, g1 ? 0 : 1, pump, basis, g1 ? "Psi1" : "Psi2");
  return evolve_closed_form(in, chi_t);
}

// Text format: "n1_max,n2_max,n3_max" then "n1,n2,n3,re,im" per nonzero
// amplitude in basis order, 17 significant digits.

inline void write_state(std::ostream& os, const TripleModeState& s) {
  const auto& b = s.basis();
  os << b.n1_max() << ',' << b.n2_max() << ',' << b.n3_max() << '\n';
  char buf[128];
  for (std::size_t i = 0; i < b.dimension(); ++i) {
    const Complex a = s.amplitudes()(static_cast<Eigen::Index>(i));
    if (a == Complex{}) continue;
    const auto o = b.occupation(i);
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.16e,%.16e\n", o.n1, o.n2, o.n3, a.real(), a.imag());
    os << buf;
  }
}

inline TripleModeState read_state(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("state file: missing header");
  int m1 = 0, m2 = 0, m3 = 0;
  if (std::sscanf(line.c_str(), "%d,%d,%d", &m1, &m2, &m3) != 3) throw InvalidArgument("state file: bad header");
  FockBasis basis(m1, m2, m3);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dimension()));
  std::size_t prev = 0;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Occupation o;
    double re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf", &o.n1, &o.n2, &o.n3, &re, &im) != 5)
      throw InvalidArgument("state file: bad amplitude line '" + line + "'");
    const auto idx = basis.index(o);
    if (!first && idx <= prev) throw InvalidArgument("state file: amplitudes not in basis order");
    v(static_cast<Eigen::Index>(idx)) = Complex(re, im);
    prev = idx;
    first = false;
  }
  return TripleModeState(basis, std::move(v));
}

inline std::string to_text(const TripleModeState& s) {
  std::ostringstream os;
  write_state(os, s);
  return os.str();
}

}  // namespace colorhbt
