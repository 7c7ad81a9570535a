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

#include <array>
#include <cstdint>
#include <limits>

namespace fidnet {

/// Seedable, splittable random stream.
///
/// Engine is xoshiro256** seeded through SplitMix64 from the pair
/// (root seed, stream index). The pair fully determines the output sequence,
/// so every record, task or seed in a run owns an independent stream and the
/// results do not depend on scheduling. Satisfies UniformRandomBitGenerator so
/// it can drive <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t root_seed, std::uint64_t stream_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal (polar Box-Muller, cached second variate).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Child stream derived from this stream's identity, independent of the
  /// draws already consumed.
  RngStream split(std::uint64_t child_index) const;

  std::uint64_t root_seed() const { return root_; }
  std::uint64_t stream_index() const { return index_; }
  /// 64-bit digest of (root, index); stored as provenance in records.
  std::uint64_t derived_seed() const;

 private:
  std::uint64_t root_;
  std::uint64_t index_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace fidnet
