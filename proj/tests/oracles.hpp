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

// Independent reference computations for the test suites. Everything here is
// deliberately dense and naive.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fidnet/quantum.hpp"
#include "fidnet/rng.hpp"

namespace oracle {

using fidnet::CMatrix;
using fidnet::Complex;
using fidnet::CVector;

inline CMatrix single_pauli(char c) {
  CMatrix m(2, 2);
  const Complex i(0.0, 1.0);
  switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1; break;
  }
  return m;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    }
  }
  return out;
}

/// Leftmost letter is the most significant tensor factor.
inline CMatrix dense_pauli(const std::string& letters) {
  CMatrix m = CMatrix::Identity(1, 1);
  for (char c : letters) m = kron(m, single_pauli(c));
  return m;
}

inline double trace_expectation(const CMatrix& rho, const std::string& letters) {
  return (rho * dense_pauli(letters)).trace().real();
}

inline CMatrix outer(const CVector& v) { return v * v.adjoint(); }

/// Outcome j of setting `letters`: projector onto the tensor product of
/// eigenvectors, bit (n-1-q) of j set when qubit q reads -1.
inline double projector_probability(const CMatrix& rho, const std::string& letters, std::size_t j) {
  const int n = static_cast<int>(letters.size());
  CMatrix p = CMatrix::Identity(1, 1);
  for (int q = 0; q < n; ++q) {
    const double sign = ((j >> (n - 1 - q)) & 1U) ? -1.0 : 1.0;
    const CMatrix local = 0.5 * (CMatrix::Identity(2, 2) + sign * single_pauli(letters[static_cast<std::size_t>(q)]));
    p = kron(p, local);
  }
  return (rho * p).trace().real();
}

/// E[S] = sum_j (-1)^{|j & S|} p_j by direct summation.
inline std::vector<double> subset_sums(const std::vector<double>& p) {
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t s = 0; s < p.size(); ++s) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      out[s] += (__builtin_popcountll(j & s) % 2 ? -1.0 : 1.0) * p[j];
    }
  }
  return out;
}

/// Sub-Pauli of `setting` on the qubits selected by mask (bit n-1-q).
inline std::string sub_letters(const std::string& setting, std::uint64_t mask) {
  const std::size_t n = setting.size();
  std::string out(n, 'I');
  for (std::size_t q = 0; q < n; ++q) {
    if ((mask >> (n - 1 - q)) & 1U) out[q] = setting[q];
  }
  return out;
}

inline bool is_sub_pauli(const std::string& pauli, const std::string& setting) {
  for (std::size_t q = 0; q < pauli.size(); ++q) {
    if (pauli[q] != 'I' && pauli[q] != setting[q]) return false;
  }
  return true;
}

inline std::string letters_of(int n, std::uint64_t index) {
  static const char kL[] = "IXYZ";
  std::string s(static_cast<std::size_t>(n), 'I');
  for (int q = n - 1; q >= 0; --q) {
    s[static_cast<std::size_t>(q)] = kL[index % 4];
    index /= 4;
  }
  return s;
}

/// Every word over {X,Y,Z} of length n, in lexicographic X<Y<Z order.
inline std::vector<std::string> all_setting_words(int n) {
  std::vector<std::string> out{""};
  for (int q = 0; q < n; ++q) {
    std::vector<std::string> next;
    for (const auto& w : out) {
      for (char c : {'X', 'Y', 'Z'}) next.push_back(w + c);
    }
    out = std::move(next);
  }
  return out;
}

/// Weight of nonidentity Paulis covered by a set of settings, by enumeration.
inline double covered_weight(const CVector& target, const std::vector<std::string>& settings) {
  const int n = static_cast<int>(std::log2(static_cast<double>(target.size())) + 0.5);
  const CMatrix rho = outer(target);
  double total = 0.0;
  for (std::uint64_t j = 1; j < (std::uint64_t{1} << (2 * n)); ++j) {
    const std::string p = letters_of(n, j);
    for (const auto& s : settings) {
      if (is_sub_pauli(p, s)) {
        const double a = trace_expectation(rho, p);
        total += a * a;
        break;
      }
    }
  }
  return total;
}

inline CVector random_ket(int n, fidnet::RngStream& rng) {
  CVector v(static_cast<Eigen::Index>(std::size_t{1} << n));
  for (auto& x : v) x = Complex(rng.normal(), rng.normal());
  return v / v.norm();
}

/// Normalized Wishart-type random density matrix of full rank.
inline CMatrix random_density(int n, fidnet::RngStream& rng) {
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  CMatrix g(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) g(r, c) = Complex(rng.normal(), rng.normal());
  }
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

/// sqrt(<psi|rho|psi>) by direct matrix products.
inline double pure_fidelity(const CVector& psi, const CMatrix& rho) {
  return std::sqrt(std::max(0.0, (psi.adjoint() * rho * psi)(0, 0).real()));
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
