#pragma once

#include <string>

#include <gmpxx.h>

#include "ivote/modmath.hpp"
#include "ivote/rng.hpp"

namespace ivote {

struct PublicKey {
  FieldElement y;  // g^x mod p
};

/// The registration authority's private exponent x in [1, q-1].
class SigningKey {
 public:
  SigningKey(ParamsPtr params, const mpz_class& x);
  static SigningKey generate(const ParamsPtr& params, Rng& rng);

  const mpz_class& exponent() const { return x_; }
  const ParamsPtr& params() const { return params_; }
  PublicKey public_key() const;

 private:
  ParamsPtr params_;
  mpz_class x_;
};

/// Blinding exponent b in [1, q-1].
class BlindingFactor {
 public:
  BlindingFactor(const FieldParams& params, const mpz_class& b);
  static BlindingFactor random(const FieldParams& params, Rng& rng);

  const mpz_class& value() const { return b_; }

 private:
  mpz_class b_;
};

struct Signature {
  FieldElement message;
  FieldElement sig;
};

/// m * g^b. `m` must be in the order-q subgroup.
FieldElement blind(const FieldElement& m, const BlindingFactor& b, const PublicKey& y);

/// m^x. Throws DomainError for m = 0.
Signature sign(const FieldElement& m, const SigningKey& key);

/// blinded_sig * (y^b)^-1; recovers m^x from (m * g^b)^x.
FieldElement unblind(const FieldElement& blinded_sig, const BlindingFactor& b, const PublicKey& y);

bool verify_with_key(const Signature& sig, const SigningKey& key);

// Confirmation and disavowal (undeniable-signature style).
//
//   verifier -> signer : c = m^e1 * g^e2
//   signer   -> verifier: H(d || nonce), where d = c^x
//   verifier -> signer : m, e1, e2        (signer checks c was well formed)
//   signer   -> verifier: d, nonce
//   verifier accepts iff the commitment opens, sig is in the subgroup and
//   d = sig^e1 * y^e2.

/// Hex SHA-256 commitment to a response and its nonce.
std::string commit_response(const FieldElement& d, const std::string& nonce);

struct Opening {
  FieldElement response;
  std::string nonce;
};

/// The signer's side of confirmation. Implementations signal refusal by
/// throwing ProtocolAbort.
class ConfirmSigner {
 public:
  virtual ~ConfirmSigner() = default;
  virtual std::string commit(const FieldElement& challenge) = 0;
  virtual Opening open(const FieldElement& message, const mpz_class& e1, const mpz_class& e2) = 0;
};

/// Signer holding the key and answering every well-formed challenge.
class HonestSigner : public ConfirmSigner {
 public:
  HonestSigner(const SigningKey& key, Rng rng);
  std::string commit(const FieldElement& challenge) override;
  Opening open(const FieldElement& message, const mpz_class& e1, const mpz_class& e2) override;

 private:
  const SigningKey& key_;
  Rng rng_;
  FieldElement pending_challenge_;
  Opening pending_;
  bool has_pending_ = false;
};

struct ConfirmationTranscript {
  FieldElement message;
  FieldElement claimed;
  mpz_class e1;
  mpz_class e2;
  FieldElement challenge;
  std::string commitment;
  FieldElement response;
  std::string nonce;
  bool accepted = false;

  /// `confirm m=.. sig=.. e1=.. e2=.. c=.. commit=.. d=.. accepted=0|1`
  std::string to_record() const;
};

/// Runs one confirmation with challenge exponents drawn uniformly from [1, q-1].
ConfirmationTranscript confirm(const Signature& sig, ConfirmSigner& signer, const PublicKey& y, Rng& rng);

/// Same protocol with caller-chosen exponents in [0, q-1] (used for exhaustive
/// enumeration of the challenge space).
ConfirmationTranscript confirm_with(const Signature& sig, ConfirmSigner& signer, const PublicKey& y,
                                    const mpz_class& e1, const mpz_class& e2);

struct DisavowalVerdict {
  bool is_forgery = false;
  /// True when either run accepted the claimed signature outright.
  bool confirmed = false;
  ConfirmationTranscript first;
  ConfirmationTranscript second;
};

/// Two independent confirmation runs plus the cross-consistency test
/// (d1 / y^e2)^f1 == (d2 / y^f2)^e1. Consistent denials prove the claimed
/// signature is a forgery; inconsistent ones expose a signer denying a
/// genuine signature.
DisavowalVerdict disavow(const Signature& claimed, ConfirmSigner& signer, const PublicKey& y, Rng& rng);

}  // namespace ivote
