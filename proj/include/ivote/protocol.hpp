#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ivote/blindsig.hpp"
#include "ivote/errors.hpp"
#include "ivote/modmath.hpp"
#include "ivote/rng.hpp"
#include "ivote/sharing.hpp"

namespace ivote {

// ---------------------------------------------------------------------------
// Errors

/// A counterparty refused a request. `code` is one of: ineligible,
/// already_registered, invalid_signature, collision, closed, stale_token,
/// zero_share, version_replay, malformed, abort, not_closed.
class ProtocolRejection : public Error {
 public:
  ProtocolRejection(std::string code, const std::string& detail)
      : Error(code + ": " + detail), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Registration produced a credential or ballot signature that failed
/// confirmation. Carries the disavowal verdict.
class CredentialInvalid : public Error {
 public:
  CredentialInvalid(const std::string& what, DisavowalVerdict verdict)
      : Error(what), verdict_(std::move(verdict)) {}
  const DisavowalVerdict& verdict() const { return verdict_; }

 private:
  DisavowalVerdict verdict_;
};

// ---------------------------------------------------------------------------
// Domain types

struct VoterIdentity {
  std::string v_id;
  std::string precinct;
};

/// The anonymous ID: r_id with the authority's unblinded signature.
struct Credential {
  FieldElement r_id;
  FieldElement r_id_sig;
};

struct BallotSheet {
  std::vector<std::string> candidates;
  std::vector<FieldElement> ballots;         // public, one per candidate
  std::vector<FieldElement> signed_ballots;  // ballot_j^x

  std::size_t m() const { return candidates.size(); }
  /// m >= 2; ballots distinct, nonzero, in the subgroup; signatures distinct.
  void validate() const;
  /// Index of the candidate whose signed ballot equals `value`.
  std::optional<std::size_t> match(const FieldElement& value) const;

  /// Samples m distinct subgroup ballots and signs them.
  static BallotSheet generate(std::vector<std::string> candidates, const SigningKey& key, Rng& rng);
};

struct SessionToken {
  std::string token;  // 128-bit random value, hex
  FieldElement bound_r_id;
  std::uint64_t issued_at = 0;
};

struct CastRecord {
  FieldElement r_id;
  std::uint64_t version = 0;
  FieldElement share;
};

struct TallyResult {
  std::vector<std::uint64_t> counts;  // per candidate
  std::uint64_t invalid = 0;
  std::uint64_t inconsistent = 0;
  std::uint64_t distinct_r_ids = 0;

  std::uint64_t counted() const;
  friend bool operator==(const TallyResult&, const TallyResult&) = default;
};

enum class BoothMode { KeyCopy, ZkRelay };
std::string_view to_string(BoothMode mode);
BoothMode booth_mode_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Messages

enum class Phase { Setup, Registration, Voting, Counting };
std::string_view to_string(Phase phase);

/// A typed record exchanged between actors. Field names and order are fixed
/// per type by message_schema(); values are canonical decimal or hex text.
struct Message {
  std::string from;
  std::string to;
  std::string type;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string& get(std::string_view key) const;
  void set(std::string_view key, std::string value);
  /// `<from> -> <to> <type> k=v ...`
  std::string to_record() const;
};

/// Ordered field names for every message type.
const std::map<std::string, std::vector<std::string>>& message_schema();

/// Builds a message and checks it against the schema.
Message make_message(std::string from, std::string to, std::string type, std::vector<std::string> values);

/// Endpoint names.
inline constexpr std::string_view kAuthority = "ra";
inline constexpr std::string_view kBooth = "booth";
inline constexpr std::string_view kTallier = "tally";
inline constexpr std::string_view kHarness = "harness";
std::string server_endpoint(std::size_t index);
std::string voter_endpoint(std::size_t index);

/// Deterministic in-process transport. call() logs the request, dispatches
/// it synchronously to the target's handler and logs the reply. Handler
/// exceptions become `error` replies and are rethrown to the caller as
/// ProtocolRejection.
class MessageBus {
 public:
  using Handler = std::function<Message(const Message&)>;
  using Tamper = std::function<void(Message&)>;

  void attach(const std::string& endpoint, Handler handler);
  Message call(Message request);

  /// Applied to every request before delivery and every reply before return.
  void set_tamper(Tamper tamper) { tamper_ = std::move(tamper); }
  void set_phase(Phase phase) { phase_ = phase; }
  Phase phase() const { return phase_; }

  std::uint64_t clock() const { return seq_; }
  const std::vector<std::string>& log() const { return log_; }
  const std::map<std::string, std::uint64_t>& phase_counts() const { return phase_counts_; }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  void record(const Message& m);

  std::map<std::string, Handler> handlers_;
  Tamper tamper_;
  Phase phase_ = Phase::Setup;
  std::uint64_t seq_ = 0;
  std::vector<std::string> log_;
  std::map<std::string, std::uint64_t> phase_counts_;
};

/// Sends a request and returns the reply, throwing ProtocolRejection on an
/// `error` reply or a reply of an unexpected type.
Message expect_reply(MessageBus& bus, Message request, std::string_view reply_type);

/// Confirmation signer reached over the bus (the RA answers).
class RemoteSigner : public ConfirmSigner {
 public:
  RemoteSigner(MessageBus& bus, std::string from, std::string session);
  std::string commit(const FieldElement& challenge) override;
  Opening open(const FieldElement& message, const mpz_class& e1, const mpz_class& e2) override;

 private:
  MessageBus& bus_;
  std::string from_;
  std::string session_;
  ParamsPtr params_;
};

/// Checks a signed value, either with a copy of the key or by running the
/// confirmation protocol with the RA.
class SignatureChecker {
 public:
  virtual ~SignatureChecker() = default;
  virtual bool check(const Signature& sig) = 0;
};

class KeyCopyChecker : public SignatureChecker {
 public:
  explicit KeyCopyChecker(const SigningKey& key) : key_(key) {}
  bool check(const Signature& sig) override { return verify_with_key(sig, key_); }

 private:
  const SigningKey& key_;
};

class ZkRelayChecker : public SignatureChecker {
 public:
  ZkRelayChecker(MessageBus& bus, std::string from, PublicKey y, Rng& rng)
      : bus_(bus), from_(std::move(from)), y_(std::move(y)), rng_(rng) {}
  bool check(const Signature& sig) override;

 private:
  MessageBus& bus_;
  std::string from_;
  PublicKey y_;
  Rng& rng_;
  std::uint64_t sessions_ = 0;
};

// ---------------------------------------------------------------------------
// Actors

struct RegistrationReply {
  FieldElement signed_blinded;
  std::vector<FieldElement> signed_ballots;
};

class RegistrationAuthority {
 public:
  RegistrationAuthority(SigningKey key, BallotSheet sheet, Rng rng);

  void enroll(const VoterIdentity& voter);
  /// Signs the blinded r_id for an eligible, not yet registered voter and
  /// returns the signed ballots. Throws ProtocolRejection (ineligible,
  /// already_registered).
  RegistrationReply ra_register(const VoterIdentity& voter, const FieldElement& blinded_rid);

  Message handle(const Message& m);

  const SigningKey& key() const { return key_; }
  PublicKey public_key() const { return key_.public_key(); }
  const BallotSheet& sheet() const { return sheet_; }
  bool is_registered(const std::string& v_id) const;

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  struct RosterEntry {
    std::string precinct;
    bool registered = false;
  };

  SigningKey key_;
  BallotSheet sheet_;
  Rng rng_;
  std::map<std::string, RosterEntry> roster_;
  std::map<std::string, std::unique_ptr<HonestSigner>> sessions_;
};

class PollingBooth {
 public:
  /// `key` must be present in KeyCopy mode.
  PollingBooth(BoothMode mode, PublicKey y, std::optional<SigningKey> key, MessageBus& bus, Rng rng);

  /// Verifies the credential and issues a fresh token, revoking any earlier
  /// one for the same r_id. `first_use` marks a voter's first authentication;
  /// a first use of an r_id already seen is a collision.
  SessionToken booth_authenticate(const FieldElement& r_id, const FieldElement& r_id_sig, bool first_use);
  bool token_valid(const std::string& token, const FieldElement& r_id) const;
  void revoke(const FieldElement& r_id);
  void close();

  Message handle(const Message& m);

  BoothMode mode() const { return mode_; }
  bool closed() const { return closed_; }
  std::size_t live_tokens() const { return live_.size(); }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  BoothMode mode_;
  PublicKey y_;
  std::optional<SigningKey> key_;
  MessageBus& bus_;
  Rng rng_;
  bool closed_ = false;
  std::map<mpz_class, mpz_class> seen_;                              // r_id -> signature
  std::map<mpz_class, SessionToken> live_;                           // r_id -> token
  std::map<std::string, mpz_class> token_owner_;                     // token -> r_id
};

class VoteServer {
 public:
  VoteServer(std::size_t index, ParamsPtr params, MessageBus& bus);

  /// Stores the record when the booth confirms the token, the share is
  /// nonzero and the version is strictly newer. Throws ProtocolRejection.
  void server_store(const CastRecord& record, const std::string& token);

  Message handle(const Message& m);

  std::size_t index() const { return index_; }
  const std::map<mpz_class, CastRecord>& records() const { return records_; }
  /// Test hook: overwrite a stored share directly (server corruption).
  void corrupt(const FieldElement& r_id, const FieldElement& share);

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  std::size_t index_;
  ParamsPtr params_;
  MessageBus& bus_;
  std::map<mpz_class, CastRecord> records_;
};

struct CastAck {
  std::uint64_t version = 0;
  std::vector<bool> accepted;  // per server
  bool complete() const;
};

class Voter {
 public:
  Voter(std::size_t index, VoterIdentity identity, ParamsPtr params, PublicKey y, BallotSheet public_sheet, Rng rng);

  /// Registration: draws r_id and b, blinds, obtains the authority's
  /// signatures, confirms the blinded signature and every signed ballot,
  /// then unblinds. On a failed confirmation runs disavowal and throws
  /// CredentialInvalid.
  const Credential& voter_register(MessageBus& bus);

  /// Authenticates with the booth (first call flags first use).
  const SessionToken& authenticate(MessageBus& bus);

  /// Partitions signed ballot `candidate` (0-based) into k shares and sends
  /// one to each server. `after_each(i)` runs after server i was contacted.
  CastAck cast(MessageBus& bus, std::size_t candidate, std::size_t k,
               const std::function<void(std::size_t)>& after_each = {});

  std::size_t index() const { return index_; }
  const VoterIdentity& identity() const { return identity_; }
  const std::optional<Credential>& credential() const { return credential_; }
  const std::optional<SessionToken>& token() const { return token_; }
  const std::vector<FieldElement>& signed_ballots() const { return signed_ballots_; }
  std::uint64_t version() const { return version_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  void confirm_or_throw(MessageBus& bus, const Signature& sig, const std::string& what);

  std::size_t index_;
  VoterIdentity identity_;
  ParamsPtr params_;
  PublicKey y_;
  BallotSheet public_sheet_;
  Rng rng_;
  std::optional<Credential> credential_;
  std::vector<FieldElement> signed_ballots_;
  std::optional<SessionToken> token_;
  bool authenticated_before_ = false;
  std::uint64_t version_ = 0;
  std::uint64_t sessions_ = 0;
  std::vector<std::string> warnings_;
};

/// Pools the k stores. For each r_id on any server: all k records with one
/// common version -> reconstruct, match a signed ballot and check its
/// signature (count or invalid); otherwise inconsistent.
TallyResult tally(const std::vector<std::map<mpz_class, CastRecord>>& stores, const BallotSheet& sheet,
                  SignatureChecker& checker);

// ---------------------------------------------------------------------------
// Election

struct ElectionSetup {
  ParamsPtr params;
  std::size_t k = 3;
  std::vector<std::string> candidates;
  std::vector<VoterIdentity> voters;
  BoothMode booth_mode = BoothMode::KeyCopy;
  std::uint64_t seed = 0;
};

/// All actors of one election wired to one bus. Actor randomness comes from
/// streams derived from the seed by label ("ra", "booth", "voter/<i>", ...).
class Election {
 public:
  explicit Election(const ElectionSetup& setup);
  Election(const Election&) = delete;
  Election& operator=(const Election&) = delete;

  MessageBus& bus() { return bus_; }
  const MessageBus& bus() const { return bus_; }
  RegistrationAuthority& authority() { return *ra_; }
  PollingBooth& booth() { return *booth_; }
  VoteServer& server(std::size_t i) { return *servers_.at(i); }
  Voter& voter(std::size_t i) { return *voters_.at(i); }
  const Voter& voter(std::size_t i) const { return *voters_.at(i); }
  std::size_t k() const { return servers_.size(); }
  std::size_t voter_count() const { return voters_.size(); }
  const ParamsPtr& params() const { return params_; }
  const BallotSheet& sheet() const { return ra_->sheet(); }

  const Credential& register_voter(std::size_t i);
  /// Authenticates (if needed) and casts; a recast authenticates again.
  CastAck cast(std::size_t i, std::size_t candidate, const std::function<void(std::size_t)>& after_each = {});
  /// Revokes voter i's live token through the booth (fault injection).
  void revoke(std::size_t i);
  void close();
  /// Requires a closed booth. Collects every store over the bus.
  TallyResult run_tally();

  nlohmann::json snapshot() const;
  /// Rebuilds an election from snapshot(); the setup must describe the same
  /// roster and field.
  static std::unique_ptr<Election> restore(const nlohmann::json& j);

 private:
  Election() = default;
  void wire();

  ParamsPtr params_;
  std::uint64_t seed_ = 0;
  MessageBus bus_;
  std::unique_ptr<RegistrationAuthority> ra_;
  std::unique_ptr<PollingBooth> booth_;
  std::vector<std::unique_ptr<VoteServer>> servers_;
  std::vector<std::unique_ptr<Voter>> voters_;
  Rng tally_rng_;
};

// JSON helpers shared with the harness.
std::string to_dec(const FieldElement& e);
FieldElement from_dec(const ParamsPtr& params, const std::string& s);
nlohmann::json params_to_json(const FieldParams& params);
ParamsPtr params_from_json(const nlohmann::json& j);

}  // namespace ivote
