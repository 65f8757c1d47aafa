#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include <gmpxx.h>

#include "ivote/rng.hpp"

namespace ivote {

/// Safe-prime setting: p = 2q + 1 with p, q prime, and g generating the
/// order-q subgroup (the quadratic residues mod p).
struct FieldParams {
  mpz_class p;
  mpz_class q;
  mpz_class g;

  /// Throws ParamError unless every invariant holds (primality of p and q,
  /// p = 2q + 1, p >= 23, g != 1, g^q = 1).
  void validate() const;

  friend bool operator==(const FieldParams& a, const FieldParams& b) {
    return a.p == b.p && a.q == b.q && a.g == b.g;
  }
};

using ParamsPtr = std::shared_ptr<const FieldParams>;

/// The shared test field p = 23, q = 11, g = 2.
ParamsPtr fixture_params();

ParamsPtr make_params(const mpz_class& p, const mpz_class& q, const mpz_class& g);

/// An element of Z_p bound to the parameters it was created under.
/// Arithmetic between elements of different fields throws ParamError.
class FieldElement {
 public:
  FieldElement() = default;
  /// Reduces `value` into [0, p).
  FieldElement(ParamsPtr params, const mpz_class& value);
  FieldElement(ParamsPtr params, long value) : FieldElement(std::move(params), mpz_class(value)) {}

  const mpz_class& value() const { return value_; }
  const FieldParams& params() const;
  const ParamsPtr& params_ptr() const { return params_; }
  bool is_zero() const { return value_ == 0; }
  std::string str() const { return value_.get_str(); }

  FieldElement operator*(const FieldElement& rhs) const;
  FieldElement& operator*=(const FieldElement& rhs);

  bool same_field(const FieldElement& other) const;

  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.value_ == b.value_ && a.same_field(b);
  }
  friend bool operator<(const FieldElement& a, const FieldElement& b) { return a.value_ < b.value_; }

 private:
  ParamsPtr params_;
  mpz_class value_;
};

std::ostream& operator<<(std::ostream& os, const FieldElement& e);

/// Throws ParamError when the two elements live in different fields.
void require_same_field(const FieldElement& a, const FieldElement& b);

FieldElement mod_exp(const FieldElement& base, const mpz_class& exp);
FieldElement mod_inv(const FieldElement& a);

/// Miller-Rabin with `rounds` rounds; exact trial division below 10^6.
bool is_probable_prime(const mpz_class& n, int rounds = 64);

/// Seeded search for a safe prime with exactly `bit_length` bits; g is the
/// smallest quadratic residue above 1. bit_length must be at least 5
/// (p = 23 is the floor). Deterministic for a fixed rng state.
FieldParams generate_params(int bit_length, Rng& rng);

/// u^2 mod p for u uniform on [1, p-1].
FieldElement sample_subgroup_element(const ParamsPtr& params, Rng& rng);
FieldElement square(const FieldElement& u);

/// a != 0 and a^q = 1.
bool in_subgroup(const FieldElement& a);

/// Canonical text form: p, q, g as decimal integers, one per line.
std::string params_to_text(const FieldParams& params);
FieldParams params_from_text(const std::string& text);

}  // namespace ivote
