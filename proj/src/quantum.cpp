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

#include "fidnet/quantum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "fidnet/errors.hpp"

namespace fidnet {

namespace {

void check_qubits(int n) {
  if (n < 1 || n > kMaxQubits) {
    fail(ErrorCode::InvalidArgument,
         "qubit count " + std::to_string(n) + " outside [1, 8]");
  }
}

// i^k for k mod 4.
Complex i_power(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

double parity_sign(std::uint64_t bits) {
  return (std::popcount(bits) & 1) ? -1.0 : 1.0;
}

double real_checked(Complex value) {
  if (std::abs(value.imag()) > 1e-10) {
    std::ostringstream os;
    os << "expectation has imaginary part " << value.imag();
    fail(ErrorCode::InvalidArgument, os.str());
  }
  return value.real();
}

}  // namespace

double checked_sqrt(double x) {
  if (x < -1e-12) {
    std::ostringstream os;
    os << "square root of " << x;
    fail(ErrorCode::NegativeRadicand, os.str());
  }
  return std::sqrt(std::max(0.0, x));
}

// ---------------------------------------------------------------- StateVector

StateVector::StateVector(int n, CVector amplitudes) : n_(n), amp_(std::move(amplitudes)) {
  check_qubits(n);
  if (static_cast<std::size_t>(amp_.size()) != dim_of(n)) {
    fail(ErrorCode::DimensionMismatch, "amplitude count does not equal 2^n");
  }
  const double norm2 = amp_.squaredNorm();
  if (std::abs(norm2 - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "state norm^2 = " << norm2;
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

StateVector StateVector::normalized(int n, CVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) fail(ErrorCode::InvalidArgument, "zero amplitude vector");
  amplitudes /= norm;
  return StateVector(n, std::move(amplitudes));
}

StateVector StateVector::basis(int n, std::size_t index) {
  check_qubits(n);
  if (index >= dim_of(n)) fail(ErrorCode::InvalidArgument, "basis index out of range");
  CVector amp = CVector::Zero(static_cast<Eigen::Index>(dim_of(n)));
  amp[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVector(n, std::move(amp));
}

// -------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(int n, CMatrix mat) : n_(n), mat_(std::move(mat)) {
  check_qubits(n);
  const auto d = static_cast<Eigen::Index>(dim_of(n));
  if (mat_.rows() != d || mat_.cols() != d) {
    fail(ErrorCode::DimensionMismatch, "density matrix is not 2^n x 2^n");
  }
  const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) {
    std::ostringstream os;
    os << "matrix is not Hermitian (deviation " << herm << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  const Complex tr = mat_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > 1e-10) {
    std::ostringstream os;
    os << "trace = " << tr.real();
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

DensityMatrix::DensityMatrix(const StateVector& psi)
    : DensityMatrix(psi.n(), psi.amplitudes() * psi.amplitudes().adjoint()) {}

DensityMatrix DensityMatrix::maximally_mixed(int n) {
  check_qubits(n);
  const auto d = static_cast<Eigen::Index>(dim_of(n));
  return DensityMatrix(n, CMatrix::Identity(d, d) / static_cast<double>(d));
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(mat_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DensityMatrix::check_positive(double tol) const {
  const double lo = min_eigenvalue();
  if (lo < -tol) {
    std::ostringstream os;
    os << "minimum eigenvalue " << lo;
    fail(ErrorCode::NonPSDInput, os.str());
  }
}

// ---------------------------------------------------------------- PauliString

char to_char(Pauli p) {
  static constexpr char kLetters[] = {'I', 'X', 'Y', 'Z'};
  return kLetters[static_cast<int>(p)];
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': case 'i': return Pauli::I;
    case 'X': case 'x': return Pauli::X;
    case 'Y': case 'y': return Pauli::Y;
    case 'Z': case 'z': return Pauli::Z;
    default: break;
  }
  fail(ErrorCode::InvalidArgument, std::string("not a Pauli letter: '") + c + "'");
}

PauliString::PauliString(int n, std::uint64_t index) : n_(n), index_(index) {
  check_qubits(n);
  if (index >= pauli_count(n)) {
    fail(ErrorCode::InvalidArgument, "Pauli index out of range");
  }
}

PauliString PauliString::parse(std::string_view letters) {
  const int n = static_cast<int>(letters.size());
  check_qubits(n);
  std::uint64_t index = 0;
  for (char c : letters) index = index * 4 + static_cast<std::uint64_t>(pauli_from_char(c));
  return PauliString(n, index);
}

Pauli PauliString::letter(int qubit) const {
  return static_cast<Pauli>((index_ >> (2 * (n_ - 1 - qubit))) & 3U);
}

std::string PauliString::letters() const {
  std::string out(static_cast<std::size_t>(n_), 'I');
  for (int q = 0; q < n_; ++q) out[static_cast<std::size_t>(q)] = to_char(letter(q));
  return out;
}

int PauliString::weight() const {
  int w = 0;
  for (int q = 0; q < n_; ++q) w += letter(q) != Pauli::I;
  return w;
}

std::uint64_t PauliString::x_mask() const {
  std::uint64_t mask = 0;
  for (int q = 0; q < n_; ++q) {
    const Pauli p = letter(q);
    if (p == Pauli::X || p == Pauli::Y) mask |= std::uint64_t{1} << (n_ - 1 - q);
  }
  return mask;
}

std::uint64_t PauliString::z_mask() const {
  std::uint64_t mask = 0;
  for (int q = 0; q < n_; ++q) {
    const Pauli p = letter(q);
    if (p == Pauli::Z || p == Pauli::Y) mask |= std::uint64_t{1} << (n_ - 1 - q);
  }
  return mask;
}

int PauliString::y_count() const {
  int count = 0;
  for (int q = 0; q < n_; ++q) count += letter(q) == Pauli::Y;
  return count;
}

// -------------------------------------------------------------------- Unitary

Unitary::Unitary(int n, CMatrix mat) : n_(n), mat_(std::move(mat)) {
  check_qubits(n);
  const auto d = static_cast<Eigen::Index>(dim_of(n));
  if (mat_.rows() != d || mat_.cols() != d) {
    fail(ErrorCode::DimensionMismatch, "unitary is not 2^n x 2^n");
  }
  const double dev = (mat_.adjoint() * mat_ - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (dev > 1e-10) {
    std::ostringstream os;
    os << "matrix is not unitary (deviation " << dev << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

Unitary Unitary::identity(int n) {
  const auto d = static_cast<Eigen::Index>(dim_of(n));
  return Unitary(n, CMatrix::Identity(d, d));
}

// --------------------------------------------------------------- expectations

// W|j> = i^{#Y} (-1)^{|j & z|} |j ^ x|, using Y = i X Z.
double pauli_expectation(const StateVector& psi, const PauliString& p) {
  if (psi.n() != p.n()) fail(ErrorCode::DimensionMismatch, "state and Pauli string sizes differ");
  if (p.is_identity()) return 1.0;
  const std::uint64_t x = p.x_mask();
  const std::uint64_t z = p.z_mask();
  const auto& amp = psi.amplitudes();
  Complex acc{0.0, 0.0};
  for (std::uint64_t j = 0; j < psi.dim(); ++j) {
    acc += std::conj(amp[static_cast<Eigen::Index>(j ^ x)]) * parity_sign(j & z) *
           amp[static_cast<Eigen::Index>(j)];
  }
  return real_checked(acc * i_power(p.y_count()));
}

// tr(rho W) = sum_j rho[j, j ^ x] W[j ^ x, j]; W has one entry per column.
double pauli_expectation(const DensityMatrix& rho, const PauliString& p) {
  if (rho.n() != p.n()) fail(ErrorCode::DimensionMismatch, "state and Pauli string sizes differ");
  if (p.is_identity()) return 1.0;
  const std::uint64_t x = p.x_mask();
  const std::uint64_t z = p.z_mask();
  const auto& m = rho.matrix();
  Complex acc{0.0, 0.0};
  for (std::uint64_t j = 0; j < rho.dim(); ++j) {
    acc += m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j ^ x)) * parity_sign(j & z);
  }
  return real_checked(acc * i_power(p.y_count()));
}

std::vector<double> pauli_vector(const StateVector& psi) {
  std::vector<double> out(pauli_count(psi.n()));
  for (std::uint64_t j = 0; j < out.size(); ++j) {
    out[j] = pauli_expectation(psi, PauliString(psi.n(), j));
  }
  return out;
}

std::vector<double> pauli_vector(const DensityMatrix& rho) {
  std::vector<double> out(pauli_count(rho.n()));
  for (std::uint64_t j = 0; j < out.size(); ++j) {
    out[j] = pauli_expectation(rho, PauliString(rho.n(), j));
  }
  return out;
}

// ------------------------------------------------------------------ fidelities

double fidelity_to_pure(const StateVector& target, const StateVector& psi) {
  if (target.n() != psi.n()) fail(ErrorCode::DimensionMismatch, "target and state sizes differ");
  const double overlap = std::abs(target.amplitudes().dot(psi.amplitudes()));
  return std::clamp(overlap, 0.0, 1.0);
}

double fidelity_to_pure(const StateVector& target, const DensityMatrix& rho) {
  if (target.n() != rho.n()) fail(ErrorCode::DimensionMismatch, "target and state sizes differ");
  const Complex value = target.amplitudes().dot(rho.matrix() * target.amplitudes());
  return std::min(1.0, checked_sqrt(value.real()));
}

double fidelity_to_pure(const StateVector& target, const AnyState& state) {
  return std::visit([&](const auto& s) { return fidelity_to_pure(target, s); }, state);
}

double fidelity_general(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.n() != sigma.n()) fail(ErrorCode::DimensionMismatch, "state sizes differ");
  Eigen::SelfAdjointEigenSolver<CMatrix> rho_solver(rho.matrix());
  if (rho_solver.eigenvalues().minCoeff() < -1e-8) {
    fail(ErrorCode::NonPSDInput, "first argument has a negative eigenvalue");
  }
  if (sigma.min_eigenvalue() < -1e-8) {
    fail(ErrorCode::NonPSDInput, "second argument has a negative eigenvalue");
  }
  const Eigen::VectorXd root_vals = rho_solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix& vecs = rho_solver.eigenvectors();
  const CMatrix root = vecs * root_vals.asDiagonal() * vecs.adjoint();
  const CMatrix inner = root * sigma.matrix() * root;
  Eigen::SelfAdjointEigenSolver<CMatrix> inner_solver(inner, Eigen::EigenvaluesOnly);
  double total = 0.0;
  for (double lambda : inner_solver.eigenvalues()) total += std::sqrt(std::max(0.0, lambda));
  return std::clamp(total, 0.0, 1.0);
}

double fidelity_pauli_space(std::span<const double> target_coords,
                            std::span<const double> state_coords) {
  if (target_coords.size() != state_coords.size()) {
    fail(ErrorCode::LengthMismatch, "coordinate arrays differ in length");
  }
  const std::size_t len = target_coords.size();
  int n = 0;
  while (n <= kMaxQubits && pauli_count(n) < len) ++n;
  if (n < 1 || n > kMaxQubits || pauli_count(n) != len) {
    fail(ErrorCode::LengthMismatch, "coordinate length is not 4^n");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < len; ++j) acc += target_coords[j] * state_coords[j];
  return std::min(1.0, std::sqrt(std::max(0.0, acc / static_cast<double>(dim_of(n)))));
}

// ------------------------------------------------------------------ transport

Unitary householder_target_unitary(const StateVector& target) {
  const auto d = static_cast<Eigen::Index>(target.dim());
  const Complex t0 = target[0];
  const Complex phase = std::abs(t0) > 0.0 ? t0 / std::abs(t0) : Complex(1.0, 0.0);
  // Rotate so the first coordinate is real and nonnegative; the reflection
  // H = I - 2 v v^dag / |v|^2 with v = e0 - t' then maps e0 onto t'.
  CVector rotated = target.amplitudes() * std::conj(phase);
  rotated[0] = std::abs(t0);
  CVector v = -rotated;
  v[0] += 1.0;
  const double vv = v.squaredNorm();
  CMatrix h = CMatrix::Identity(d, d);
  if (vv > 1e-30) h -= (2.0 / vv) * (v * v.adjoint());
  CMatrix u = phase * h;
  // Pin the first column to the target bit-for-bit.
  u.col(0) = target.amplitudes();
  return Unitary(target.n(), std::move(u));
}

}  // namespace fidnet
