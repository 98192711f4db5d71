// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace casp {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used for config hashes and seed derivation.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the xor-combined words
  std::uint64_t x = a + 0x9e3779b97f4a7c15ull + (b << 1 | b >> 63);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

// Deterministic RNG. normal() is stateless over the underlying stream (two
// draws per call, no cached spare) so serialized state round-trips exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_int(std::uint64_t n) { return n ? bits() % n : 0; }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  Rng child(std::uint64_t salt) { return Rng(hash_mix(bits(), salt)); }

  std::string save_state() const;
  void load_state(const std::string& s);

 private:
  std::mt19937_64 eng_;
};

inline Rng derived_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(hash_mix(hash_mix(seed, a), b));
}

bool debug_logging_enabled();
void log_debug(const std::string& msg);

// Worker count for sample-parallel sections: hardware concurrency capped by
// the CASP_THREADS environment variable.
int worker_count();

// Runs fn(i) for i in [0,n). Deterministic output placement is the caller's
// job (write to slot i); scheduling is block-cyclic over workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace casp
