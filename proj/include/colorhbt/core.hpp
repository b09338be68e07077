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

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace colorhbt {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Norm tolerance for normalized states.
inline constexpr double kEpsNorm = 1e-12;
/// Maximum probability allowed on the truncation shell of the pump mode.
inline constexpr double kEpsTrunc = 1e-8;
/// Post-selection branches below this probability are reported empty.
inline constexpr double kEmptyBranch = 1e-15;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The truncated Fock space is too small for the requested state.
class CutoffError : public Error {
 public:
  CutoffError(const std::string& what, double leakage)
      : Error(what + " (leakage " + std::to_string(leakage) + ")"), leakage_(leakage) {}
  double leakage() const noexcept { return leakage_; }

 private:
  double leakage_;
};

class BasisMismatch : public Error {
 public:
  using Error::Error;
};

/// A state lies outside the photon-number sector an operation requires.
class SectorError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace colorhbt
