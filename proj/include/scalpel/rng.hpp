// Copyright 2026 The Scalpel Authors
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

#include <cmath>
#include <cstdint>

namespace scalpel {

// PCG32 (Melissa O'Neill, pcg-random.org, minimal variant). One instance per
// environment gives an independent stream; draws are a pure function of the
// stream state, so results never depend on scheduling order.
class Pcg32 {
 public:
  Pcg32() = default;
  Pcg32(uint64_t initstate, uint64_t initseq) { seed(initstate, initseq); }

  void seed(uint64_t initstate, uint64_t initseq) {
    state_ = 0u;
    inc_ = (initseq << 1u) | 1u;
    next_u32();
    state_ += initstate;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  // Uniform in [0, 1), 32 bits of resolution.
  double next_double() { return next_u32() * 0x1.0p-32; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller. Consumes two uniforms per draw; the
  // second variate is discarded to keep stream consumption call-counted.
  double normal() {
    double u1 = (next_u32() + 0.5) * 0x1.0p-32;  // (0, 1)
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  uint64_t state() const { return state_; }
  uint64_t inc() const { return inc_; }

 private:
  uint64_t state_ = 0x853c49e6748fea9bULL;
  uint64_t inc_ = 0xda3e39cb94b95bdbULL;
};

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic per-stream seeding: (seed, stream_id) -> independent Pcg32.
inline Pcg32 make_stream(uint64_t seed, uint64_t stream_id) {
  uint64_t x = seed ^ (0x2545f4914f6cdd1dULL * (stream_id + 1));
  uint64_t initstate = splitmix64(x);
  uint64_t initseq = splitmix64(x);
  return Pcg32(initstate, initseq);
}

}  // namespace scalpel
