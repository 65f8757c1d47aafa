#include "ivote/blindsig.hpp"

#include <array>
#include <cstdio>
#include <sstream>

#include <openssl/evp.h>

#include "ivote/errors.hpp"

namespace ivote {

namespace {

void require_exponent(const FieldParams& params, const mpz_class& v, const char* what) {
  if (v < 1 || v >= params.q) {
    throw ParamError(std::string(what) + " must lie in [1, q-1], got " + v.get_str());
  }
}

FieldElement generator(const ParamsPtr& params) { return FieldElement(params, params->g); }

std::string hex(const unsigned char* data, std::size_t len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

}  // namespace

SigningKey::SigningKey(ParamsPtr params, const mpz_class& x) : params_(std::move(params)), x_(x) {
  if (!params_) throw ParamError("SigningKey: null parameters");
  require_exponent(*params_, x_, "signing exponent");
}

SigningKey SigningKey::generate(const ParamsPtr& params, Rng& rng) {
  return SigningKey(params, rng.between(1, params->q - 1));
}

PublicKey SigningKey::public_key() const { return PublicKey{mod_exp(generator(params_), x_)}; }

BlindingFactor::BlindingFactor(const FieldParams& params, const mpz_class& b) : b_(b) {
  require_exponent(params, b_, "blinding factor");
}

BlindingFactor BlindingFactor::random(const FieldParams& params, Rng& rng) {
  return BlindingFactor(params, rng.between(1, params.q - 1));
}

FieldElement blind(const FieldElement& m, const BlindingFactor& b, const PublicKey& y) {
  require_same_field(m, y.y);
  if (!in_subgroup(m)) throw DomainError("blind: message " + m.str() + " is not in the order-q subgroup");
  return m * mod_exp(generator(m.params_ptr()), b.value());
}

Signature sign(const FieldElement& m, const SigningKey& key) {
  if (m.is_zero()) throw DomainError("sign: cannot sign zero");
  if (!m.same_field(FieldElement(key.params(), 0))) throw ParamError("sign: key and message fields differ");
  return Signature{m, mod_exp(m, key.exponent())};
}

FieldElement unblind(const FieldElement& blinded_sig, const BlindingFactor& b, const PublicKey& y) {
  require_same_field(blinded_sig, y.y);
  if (blinded_sig.is_zero()) throw DomainError("unblind: blinded signature is zero");
  return blinded_sig * mod_inv(mod_exp(y.y, b.value()));
}

bool verify_with_key(const Signature& sig, const SigningKey& key) {
  require_same_field(sig.message, sig.sig);
  if (sig.message.is_zero()) return false;
  return mod_exp(sig.message, key.exponent()) == sig.sig;
}

std::string commit_response(const FieldElement& d, const std::string& nonce) {
  const std::string payload = "ivote-confirm-v1|" + d.str() + "|" + nonce;
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("commit_response: SHA-256 failed");
  }
  return hex(digest.data(), len);
}

HonestSigner::HonestSigner(const SigningKey& key, Rng rng) : key_(key), rng_(std::move(rng)) {}

std::string HonestSigner::commit(const FieldElement& challenge) {
  if (challenge.is_zero()) throw ProtocolAbort("signer: zero challenge");
  char nonce[33];
  std::snprintf(nonce, sizeof nonce, "%016llx%016llx", static_cast<unsigned long long>(rng_.next_u64()),
                static_cast<unsigned long long>(rng_.next_u64()));
  pending_challenge_ = challenge;
  pending_ = Opening{mod_exp(challenge, key_.exponent()), nonce};
  has_pending_ = true;
  return commit_response(pending_.response, pending_.nonce);
}

Opening HonestSigner::open(const FieldElement& message, const mpz_class& e1, const mpz_class& e2) {
  if (!has_pending_) throw ProtocolAbort("signer: open without commitment");
  has_pending_ = false;
  const FieldElement expected = mod_exp(message, e1) * mod_exp(generator(message.params_ptr()), e2);
  if (!(expected == pending_challenge_)) throw ProtocolAbort("signer: challenge was not well formed");
  return pending_;
}

std::string ConfirmationTranscript::to_record() const {
  std::ostringstream os;
  os << "confirm m=" << message << " sig=" << claimed << " e1=" << e1 << " e2=" << e2 << " c=" << challenge
     << " commit=" << commitment << " d=" << response << " accepted=" << (accepted ? 1 : 0);
  return os.str();
}

ConfirmationTranscript confirm_with(const Signature& sig, ConfirmSigner& signer, const PublicKey& y,
                                    const mpz_class& e1, const mpz_class& e2) {
  require_same_field(sig.message, sig.sig);
  require_same_field(sig.message, y.y);
  const auto& params = sig.message.params();
  if (e1 < 0 || e1 >= params.q || e2 < 0 || e2 >= params.q) {
    throw ParamError("confirm: challenge exponents must lie in [0, q-1]");
  }
  if (!in_subgroup(sig.message)) throw DomainError("confirm: message is not in the order-q subgroup");

  ConfirmationTranscript t;
  t.message = sig.message;
  t.claimed = sig.sig;
  t.e1 = e1;
  t.e2 = e2;
  t.challenge = mod_exp(sig.message, e1) * mod_exp(generator(sig.message.params_ptr()), e2);
  t.commitment = signer.commit(t.challenge);
  Opening opening = signer.open(sig.message, e1, e2);
  require_same_field(opening.response, sig.message);
  if (commit_response(opening.response, opening.nonce) != t.commitment) {
    throw ProtocolAbort("confirm: signer's opening does not match its commitment");
  }
  t.response = opening.response;
  t.nonce = opening.nonce;
  const FieldElement expected = mod_exp(sig.sig, e1) * mod_exp(y.y, e2);
  t.accepted = in_subgroup(sig.sig) && t.response == expected;
  return t;
}

ConfirmationTranscript confirm(const Signature& sig, ConfirmSigner& signer, const PublicKey& y, Rng& rng) {
  const auto& params = sig.message.params();
  mpz_class e1 = rng.between(1, params.q - 1);
  mpz_class e2 = rng.between(1, params.q - 1);
  return confirm_with(sig, signer, y, e1, e2);
}

DisavowalVerdict disavow(const Signature& claimed, ConfirmSigner& signer, const PublicKey& y, Rng& rng) {
  DisavowalVerdict v;
  v.first = confirm(claimed, signer, y, rng);
  v.second = confirm(claimed, signer, y, rng);
  if (v.first.accepted || v.second.accepted) {
    v.confirmed = true;
    v.is_forgery = false;
    return v;
  }
  const FieldElement lhs = mod_exp(v.first.response * mod_inv(mod_exp(y.y, v.first.e2)), v.second.e1);
  const FieldElement rhs = mod_exp(v.second.response * mod_inv(mod_exp(y.y, v.second.e2)), v.first.e1);
  v.is_forgery = lhs == rhs;
  return v;
}

}  // namespace ivote
