// Copyright 2026 The fidnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fidnet {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr int kMaxQubits = 8;

/// 2^n, the Hilbert-space dimension.
constexpr std::size_t dim_of(int n) { return std::size_t{1} << n; }

/// Normalized pure state on n qubits. Basis index bit (n-1-q) is qubit q, so
/// the leftmost qubit is the most significant bit.
class StateVector {
 public:
  StateVector(int n, CVector amplitudes);

  /// Rescales to unit norm before validation.
  static StateVector normalized(int n, CVector amplitudes);
  static StateVector basis(int n, std::size_t index);

  int n() const { return n_; }
  std::size_t dim() const { return dim_of(n_); }
  const CVector& amplitudes() const { return amp_; }
  Complex operator[](std::size_t i) const { return amp_[static_cast<Eigen::Index>(i)]; }

 private:
  int n_;
  CVector amp_;
};

/// Hermitian, unit-trace matrix. Construction checks hermiticity and trace;
/// positivity is checked by check_positive() since it needs a decomposition.
class DensityMatrix {
 public:
  DensityMatrix(int n, CMatrix mat);
  explicit DensityMatrix(const StateVector& psi);

  static DensityMatrix maximally_mixed(int n);

  int n() const { return n_; }
  std::size_t dim() const { return dim_of(n_); }
  const CMatrix& matrix() const { return mat_; }

  double min_eigenvalue() const;
  /// Throws NonPSDInput if an eigenvalue is below -tol.
  void check_positive(double tol = 1e-10) const;

 private:
  int n_;
  CMatrix mat_;
};

/// Either representation; pipelines carry whichever the generator produced.
using AnyState = std::variant<StateVector, DensityMatrix>;

inline int qubits_of(const AnyState& s) {
  return std::visit([](const auto& v) { return v.n(); }, s);
}

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);
Pauli pauli_from_char(char c);

/// Length-n word over {I,X,Y,Z}, identified with its base-4 index
/// (I=0, X=1, Y=2, Z=3, leftmost qubit most significant).
class PauliString {
 public:
  PauliString(int n, std::uint64_t index);
  static PauliString parse(std::string_view letters);
  static PauliString identity(int n) { return PauliString(n, 0); }

  int n() const { return n_; }
  std::uint64_t index() const { return index_; }
  Pauli letter(int qubit) const;
  std::string letters() const;
  int weight() const;
  bool is_identity() const { return index_ == 0; }

  /// Basis-index masks: bits flipped by the string (X or Y) and bits
  /// contributing a sign (Y or Z).
  std::uint64_t x_mask() const;
  std::uint64_t z_mask() const;
  int y_count() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  int n_;
  std::uint64_t index_;
};

/// 4^n.
inline std::uint64_t pauli_count(int n) { return std::uint64_t{1} << (2 * n); }

class Unitary {
 public:
  Unitary(int n, CMatrix mat);
  static Unitary identity(int n);

  int n() const { return n_; }
  const CMatrix& matrix() const { return mat_; }

 private:
  int n_;
  CMatrix mat_;
};

enum class NamedState { Bell, W, GHZ, Dicke, Cluster, CRing, C23, Basis0 };

std::optional<NamedState> parse_named_state(std::string_view name);
std::string_view to_string(NamedState kind);

/// Target states listed with the network presets. Dicke states carry two
/// excitations; |+>, |-> factors are expanded into the computational basis.
StateVector named_state(NamedState kind, int n);

double pauli_expectation(const StateVector& psi, const PauliString& p);
double pauli_expectation(const DensityMatrix& rho, const PauliString& p);

/// All 4^n expectations tr(rho W_j) indexed by Pauli index.
std::vector<double> pauli_vector(const StateVector& psi);
std::vector<double> pauli_vector(const DensityMatrix& rho);

double fidelity_to_pure(const StateVector& target, const StateVector& psi);
double fidelity_to_pure(const StateVector& target, const DensityMatrix& rho);
double fidelity_to_pure(const StateVector& target, const AnyState& state);

/// tr sqrt(sqrt(rho) sigma sqrt(rho)) for two mixed states.
double fidelity_general(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Fidelity from Pauli coordinates: sqrt(sum_j beta_j a_j / 2^n), with a the
/// coordinates of a pure target.
double fidelity_pauli_space(std::span<const double> target_coords,
                            std::span<const double> state_coords);

/// Deterministic unitary whose first column is exactly `target`.
Unitary householder_target_unitary(const StateVector& target);

/// sqrt with tiny negative round-off (>= -1e-12) clamped to zero.
double checked_sqrt(double x);

}  // namespace fidnet
