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

#include <bit>
#include <cmath>
#include <initializer_list>
#include <utility>

#include "fidnet/errors.hpp"
#include "fidnet/quantum.hpp"

namespace fidnet {

namespace {

struct Term {
  double sign;
  std::string_view word;  // letters from {0, 1, +, -}
};

CVector expand_term(std::string_view word) {
  const double h = 1.0 / std::sqrt(2.0);
  CVector out = CVector::Ones(1);
  for (char c : word) {
    Eigen::Vector2cd local;
    switch (c) {
      case '0': local << 1.0, 0.0; break;
      case '1': local << 0.0, 1.0; break;
      case '+': local << h, h; break;
      case '-': local << h, -h; break;
      default: fail(ErrorCode::InvalidArgument, "bad basis letter");
    }
    CVector next(out.size() * 2);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      next[2 * i] = out[i] * local[0];
      next[2 * i + 1] = out[i] * local[1];
    }
    out = std::move(next);
  }
  return out;
}

StateVector superpose(int n, std::initializer_list<Term> terms) {
  CVector amp = CVector::Zero(static_cast<Eigen::Index>(dim_of(n)));
  for (const Term& t : terms) amp += t.sign * expand_term(t.word);
  return StateVector::normalized(n, std::move(amp));
}

StateVector uniform_over(int n, auto&& predicate) {
  CVector amp = CVector::Zero(static_cast<Eigen::Index>(dim_of(n)));
  for (std::size_t j = 0; j < dim_of(n); ++j) {
    if (predicate(j)) amp[static_cast<Eigen::Index>(j)] = 1.0;
  }
  return StateVector::normalized(n, std::move(amp));
}

[[noreturn]] void unsupported(NamedState kind, int n) {
  fail(ErrorCode::UnsupportedState,
       std::string(to_string(kind)) + " is not defined for n = " + std::to_string(n));
}

}  // namespace

std::string_view to_string(NamedState kind) {
  switch (kind) {
    case NamedState::Bell: return "bell";
    case NamedState::W: return "w";
    case NamedState::GHZ: return "ghz";
    case NamedState::Dicke: return "dicke";
    case NamedState::Cluster: return "cluster";
    case NamedState::CRing: return "cring";
    case NamedState::C23: return "c23";
    case NamedState::Basis0: return "basis0";
  }
  return "unknown";
}

std::optional<NamedState> parse_named_state(std::string_view name) {
  for (NamedState kind : {NamedState::Bell, NamedState::W, NamedState::GHZ, NamedState::Dicke,
                          NamedState::Cluster, NamedState::CRing, NamedState::C23,
                          NamedState::Basis0}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

StateVector named_state(NamedState kind, int n) {
  switch (kind) {
    case NamedState::Basis0:
      if (n < 1 || n > kMaxQubits) unsupported(kind, n);
      return StateVector::basis(n, 0);
    case NamedState::Bell:
      if (n != 2) unsupported(kind, n);
      return superpose(2, {{1, "00"}, {1, "11"}});
    case NamedState::GHZ:
      if (n < 3 || n > 6) unsupported(kind, n);
      return uniform_over(n, [&](std::size_t j) { return j == 0 || j == dim_of(n) - 1; });
    case NamedState::W:
      if (n == 2) return superpose(2, {{1, "00"}, {1, "01"}, {1, "10"}});
      if (n < 3 || n > 6) unsupported(kind, n);
      return uniform_over(n, [](std::size_t j) { return std::popcount(j) == 1; });
    case NamedState::Dicke:
      if (n < 4 || n > 6) unsupported(kind, n);
      return uniform_over(n, [](std::size_t j) { return std::popcount(j) == 2; });
    case NamedState::Cluster:
      if (n == 4) return superpose(4, {{1, "0000"}, {1, "0011"}, {1, "1100"}, {-1, "1111"}});
      if (n == 5) {
        return superpose(5, {{1, "+0+0+"}, {1, "+0-1-"}, {1, "-1-0+"}, {1, "-1+1-"}});
      }
      unsupported(kind, n);
    case NamedState::CRing:
      if (n != 5) unsupported(kind, n);
      return superpose(5, {{1, "+0+00"}, {1, "-0+01"}, {1, "+0-10"}, {-1, "-0-11"},
                           {1, "-1-00"}, {1, "+1-01"}, {1, "-1+10"}, {-1, "+1+11"}});
    case NamedState::C23:
      if (n != 6) unsupported(kind, n);
      return superpose(6, {{1, "+0++0+"}, {1, "+0+-1-"}, {1, "-1-+0+"}, {-1, "-1--1-"}});
  }
  unsupported(kind, n);
}

}  // namespace fidnet
