#include "ivote/rng.hpp"

#include <sstream>

#include "ivote/errors.hpp"

namespace ivote {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::derive(std::uint64_t seed, std::string_view label) {
  return Rng(splitmix64(seed ^ fnv1a64(label)));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ParamError("Rng::below: bound must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  for (;;) {
    std::uint64_t v = engine_();
    if (v <= limit) return v % bound;
  }
}

mpz_class Rng::below(const mpz_class& bound) {
  if (bound <= 0) throw ParamError("Rng::below: bound must be positive");
  if (bound.fits_ulong_p()) return mpz_class(below(static_cast<std::uint64_t>(bound.get_ui())));

  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t words = (bits + 63) / 64;
  const std::size_t top_bits = bits - (words - 1) * 64;
  for (;;) {
    mpz_class v = 0;
    for (std::size_t i = 0; i < words; ++i) {
      std::uint64_t w = engine_();
      if (i == 0 && top_bits < 64) w &= (std::uint64_t{1} << top_bits) - 1;
      v <<= 64;
      v += mpz_class(static_cast<unsigned long>(w));
    }
    if (v < bound) return v;
  }
}

mpz_class Rng::between(const mpz_class& lo, const mpz_class& hi) {
  if (hi < lo) throw ParamError("Rng::between: empty range");
  return lo + below(mpz_class(hi - lo + 1));
}

double Rng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(std::uint64_t seed, const std::string& state) {
  seed_ = seed;
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw ParamError("Rng::restore: malformed engine state");
}

}  // namespace ivote
