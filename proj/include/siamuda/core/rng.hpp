// Copyright 2026 The SiamUDA Authors
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

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace siamuda {

// Counter-based seed derivation. Every stochastic decision in the framework
// draws from a stream keyed by (root seed, purpose tag, counters), so a run
// can be resumed at any step and replay the exact same randomness without
// serializing generator state.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
  return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t a = 0,
                            uint64_t b = 0) {
  uint64_t h = splitmix64(seed);
  for (char c : tag) h = hash_combine(h, static_cast<uint64_t>(static_cast<unsigned char>(c)));
  h = hash_combine(h, a);
  h = hash_combine(h, b);
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed, std::string_view tag, uint64_t a = 0, uint64_t b = 0) {
  return Rng(derive_seed(seed, tag, a, b));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// In-place Fisher-Yates; std::shuffle's draw sequence is unspecified across
// standard libraries, this one is pinned by uniform_int.
template <typename T>
void shuffle_pinned(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = size_t(uniform_int(rng, 0, int(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace siamuda
