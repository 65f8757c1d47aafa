#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace ivote {

/// Seeded random source used by every actor and experiment.
///
/// Streams are split by label: `Rng::derive(seed, "voter/17")` gives a
/// stream that depends only on the run seed and the label, so adding or
/// removing actors never shifts another actor's draws. The child seed is
/// splitmix64(seed XOR fnv1a64(label)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  static Rng derive(std::uint64_t seed, std::string_view label);
  Rng split(std::string_view label) const { return derive(seed_, label); }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  mpz_class below(const mpz_class& bound);

  /// Uniform on [lo, hi], inclusive.
  mpz_class between(const mpz_class& lo, const mpz_class& hi);

  /// Uniform real on [0, 1).
  double unit();

  /// Engine state as text, for snapshots.
  std::string state() const;
  void restore(std::uint64_t seed, const std::string& state);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ivote
