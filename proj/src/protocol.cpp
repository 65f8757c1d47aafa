#include "ivote/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace ivote {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Helpers

std::string to_dec(const FieldElement& e) { return e.value().get_str(); }

FieldElement from_dec(const ParamsPtr& params, const std::string& s) {
  mpz_class v;
  if (s.empty() || v.set_str(s, 10) != 0 || v < 0 || v >= params->p) {
    throw ProtocolRejection("malformed", "not a field element: '" + s + "'");
  }
  return FieldElement(params, v);
}

json params_to_json(const FieldParams& params) {
  return json{{"p", params.p.get_str()}, {"q", params.q.get_str()}, {"g", params.g.get_str()}};
}

ParamsPtr params_from_json(const json& j) {
  return make_params(mpz_class(j.at("p").get<std::string>()), mpz_class(j.at("q").get<std::string>()),
                     mpz_class(j.at("g").get<std::string>()));
}

namespace {

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ProtocolRejection("malformed", "not an unsigned integer: '" + s + "'");
  }
}

std::string join_dec(const std::vector<FieldElement>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += to_dec(values[i]);
  }
  return out;
}

std::vector<FieldElement> split_dec(const ParamsPtr& params, const std::string& s) {
  std::vector<FieldElement> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(from_dec(params, item));
  return out;
}

std::string hex128(Rng& rng) {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng.next_u64()),
                static_cast<unsigned long long>(rng.next_u64()));
  return buf;
}

json rng_to_json(const Rng& rng) { return json{{"seed", rng.seed()}, {"state", rng.state()}}; }

void rng_from_json(Rng& rng, const json& j) {
  rng.restore(j.at("seed").get<std::uint64_t>(), j.at("state").get<std::string>());
}

json elements_to_json(const std::vector<FieldElement>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(to_dec(e));
  return out;
}

std::vector<FieldElement> elements_from_json(const ParamsPtr& params, const json& j) {
  std::vector<FieldElement> out;
  for (const auto& e : j) out.push_back(from_dec(params, e.get<std::string>()));
  return out;
}

Message reply_to(const Message& request, std::string type, std::vector<std::string> values) {
  return make_message(request.to, request.from, std::move(type), std::move(values));
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain types

void BallotSheet::validate() const {
  if (candidates.size() < 2) throw ParamError("ballot sheet: need at least two candidates");
  if (ballots.size() != candidates.size() || signed_ballots.size() != candidates.size()) {
    throw ParamError("ballot sheet: one ballot and one signed ballot per candidate");
  }
  std::set<mpz_class> seen_ballots, seen_signed;
  for (std::size_t j = 0; j < ballots.size(); ++j) {
    if (!in_subgroup(ballots[j])) throw ParamError("ballot sheet: ballot not in the subgroup");
    if (!seen_ballots.insert(ballots[j].value()).second) throw ParamError("ballot sheet: duplicate ballot");
    if (!seen_signed.insert(signed_ballots[j].value()).second) {
      throw ParamError("ballot sheet: duplicate signed ballot");
    }
  }
}

std::optional<std::size_t> BallotSheet::match(const FieldElement& value) const {
  for (std::size_t j = 0; j < signed_ballots.size(); ++j) {
    if (signed_ballots[j] == value) return j;
  }
  return std::nullopt;
}

BallotSheet BallotSheet::generate(std::vector<std::string> candidates, const SigningKey& key, Rng& rng) {
  const auto& params = key.params();
  if (candidates.size() < 2) throw ParamError("ballot sheet: need at least two candidates");
  if (mpz_class(static_cast<unsigned long>(candidates.size())) > params->q) {
    throw ParamError("ballot sheet: more candidates than subgroup elements");
  }
  BallotSheet sheet;
  sheet.candidates = std::move(candidates);
  std::set<mpz_class> used;
  while (sheet.ballots.size() < sheet.candidates.size()) {
    FieldElement b = sample_subgroup_element(params, rng);
    if (!used.insert(b.value()).second) continue;
    sheet.ballots.push_back(b);
    sheet.signed_ballots.push_back(sign(b, key).sig);
  }
  sheet.validate();
  return sheet;
}

std::uint64_t TallyResult::counted() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::string_view to_string(BoothMode mode) { return mode == BoothMode::KeyCopy ? "key-copy" : "zk-relay"; }

BoothMode booth_mode_from_string(std::string_view s) {
  if (s == "key-copy") return BoothMode::KeyCopy;
  if (s == "zk-relay") return BoothMode::ZkRelay;
  throw ParamError("booth mode must be key-copy or zk-relay, got '" + std::string(s) + "'");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Setup: return "setup";
    case Phase::Registration: return "registration";
    case Phase::Voting: return "voting";
    case Phase::Counting: return "counting";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Messages

const std::map<std::string, std::vector<std::string>>& message_schema() {
  static const std::map<std::string, std::vector<std::string>> schema = {
      {"register_request", {"v_id", "precinct", "blinded"}},
      {"register_response", {"signed_blinded", "signed_ballots"}},
      {"confirm_challenge", {"session", "challenge"}},
      {"confirm_commit", {"session", "commitment"}},
      {"confirm_open", {"session", "message", "e1", "e2"}},
      {"confirm_response", {"session", "response", "nonce"}},
      {"auth_request", {"r_id", "r_id_sig", "first_use"}},
      {"auth_response", {"token", "issued_at"}},
      {"store_request", {"r_id", "version", "share", "token"}},
      {"store_ack", {"r_id", "version"}},
      {"token_check", {"token", "r_id"}},
      {"token_status", {"valid"}},
      {"revoke", {"r_id"}},
      {"revoke_ack", {}},
      {"close", {}},
      {"close_ack", {}},
      {"status_request", {}},
      {"status_response", {"closed", "live_tokens"}},
      {"export_request", {}},
      {"export_response", {"records"}},
      {"error", {"code", "detail"}},
  };
  return schema;
}

Message make_message(std::string from, std::string to, std::string type, std::vector<std::string> values) {
  const auto& schema = message_schema();
  auto it = schema.find(type);
  if (it == schema.end()) throw ProtocolRejection("malformed", "unknown message type '" + type + "'");
  if (it->second.size() != values.size()) {
    throw ProtocolRejection("malformed", "wrong field count for '" + type + "'");
  }
  Message m{std::move(from), std::move(to), std::move(type), {}};
  for (std::size_t i = 0; i < values.size(); ++i) m.fields.emplace_back(it->second[i], std::move(values[i]));
  return m;
}

const std::string& Message::get(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  throw ProtocolRejection("malformed", type + " has no field '" + std::string(key) + "'");
}

void Message::set(std::string_view key, std::string value) {
  for (auto& [k, v] : fields) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  throw ProtocolRejection("malformed", type + " has no field '" + std::string(key) + "'");
}

std::string Message::to_record() const {
  std::string out = from + " -> " + to + " " + type;
  for (const auto& [k, v] : fields) out += " " + k + "=" + v;
  return out;
}

std::string server_endpoint(std::size_t index) { return "server/" + std::to_string(index); }
std::string voter_endpoint(std::size_t index) { return "voter/" + std::to_string(index); }

void MessageBus::attach(const std::string& endpoint, Handler handler) { handlers_[endpoint] = std::move(handler); }

void MessageBus::record(const Message& m) {
  log_.push_back(std::to_string(seq_) + " " + m.to_record());
  ++seq_;
  ++phase_counts_[std::string(to_string(phase_))];
}

Message MessageBus::call(Message request) {
  // V_id may only ever travel on the registration exchange with the RA.
  for (const auto& [k, v] : request.fields) {
    if (k == "v_id" && request.to != kAuthority) {
      throw ProtocolRejection("malformed", "voter identity addressed to " + request.to);
    }
  }
  if (tamper_) tamper_(request);
  record(request);
  auto it = handlers_.find(request.to);
  Message reply;
  if (it == handlers_.end()) {
    reply = make_message(request.to, request.from, "error", {"malformed", "no endpoint " + request.to});
  } else {
    try {
      reply = it->second(request);
    } catch (const ProtocolRejection& e) {
      reply = make_message(request.to, request.from, "error", {e.code(), e.what()});
    } catch (const ProtocolAbort& e) {
      reply = make_message(request.to, request.from, "error", {"abort", e.what()});
    } catch (const Error& e) {
      reply = make_message(request.to, request.from, "error", {"malformed", e.what()});
    }
  }
  if (tamper_) tamper_(reply);
  record(reply);
  return reply;
}

json MessageBus::snapshot() const {
  return json{{"seq", seq_}, {"phase", std::string(to_string(phase_))}, {"log", log_}, {"phase_counts", phase_counts_}};
}

void MessageBus::restore(const json& j) {
  seq_ = j.at("seq").get<std::uint64_t>();
  const auto phase = j.at("phase").get<std::string>();
  for (Phase p : {Phase::Setup, Phase::Registration, Phase::Voting, Phase::Counting}) {
    if (to_string(p) == phase) phase_ = p;
  }
  log_ = j.at("log").get<std::vector<std::string>>();
  phase_counts_ = j.at("phase_counts").get<std::map<std::string, std::uint64_t>>();
}

Message expect_reply(MessageBus& bus, Message request, std::string_view reply_type) {
  Message reply = bus.call(std::move(request));
  if (reply.type == "error") throw ProtocolRejection(reply.get("code"), reply.get("detail"));
  if (reply.type != reply_type) {
    throw ProtocolRejection("malformed", "expected " + std::string(reply_type) + ", got " + reply.type);
  }
  return reply;
}

// ---------------------------------------------------------------------------
// Remote confirmation

RemoteSigner::RemoteSigner(MessageBus& bus, std::string from, std::string session)
    : bus_(bus), from_(std::move(from)), session_(std::move(session)) {}

std::string RemoteSigner::commit(const FieldElement& challenge) {
  params_ = challenge.params_ptr();
  try {
    Message reply = expect_reply(
        bus_, make_message(from_, std::string(kAuthority), "confirm_challenge", {session_, to_dec(challenge)}),
        "confirm_commit");
    return reply.get("commitment");
  } catch (const ProtocolRejection& e) {
    throw ProtocolAbort(std::string("authority refused confirmation: ") + e.what());
  }
}

Opening RemoteSigner::open(const FieldElement& message, const mpz_class& e1, const mpz_class& e2) {
  try {
    Message reply = expect_reply(
        bus_,
        make_message(from_, std::string(kAuthority), "confirm_open", {session_, to_dec(message), e1.get_str(), e2.get_str()}),
        "confirm_response");
    return Opening{from_dec(params_, reply.get("response")), reply.get("nonce")};
  } catch (const ProtocolRejection& e) {
    throw ProtocolAbort(std::string("authority refused to open: ") + e.what());
  }
}

bool ZkRelayChecker::check(const Signature& sig) {
  if (!in_subgroup(sig.message)) return false;
  RemoteSigner signer(bus_, from_, from_ + "#" + std::to_string(++sessions_));
  return confirm(sig, signer, y_, rng_).accepted;
}

// ---------------------------------------------------------------------------
// Registration authority

RegistrationAuthority::RegistrationAuthority(SigningKey key, BallotSheet sheet, Rng rng)
    : key_(std::move(key)), sheet_(std::move(sheet)), rng_(std::move(rng)) {
  sheet_.validate();
}

void RegistrationAuthority::enroll(const VoterIdentity& voter) {
  if (!roster_.emplace(voter.v_id, RosterEntry{voter.precinct, false}).second) {
    throw ParamError("roster: duplicate voter id " + voter.v_id);
  }
}

bool RegistrationAuthority::is_registered(const std::string& v_id) const {
  auto it = roster_.find(v_id);
  return it != roster_.end() && it->second.registered;
}

RegistrationReply RegistrationAuthority::ra_register(const VoterIdentity& voter, const FieldElement& blinded_rid) {
  auto it = roster_.find(voter.v_id);
  if (it == roster_.end()) throw ProtocolRejection("ineligible", "voter not on the roster");
  if (it->second.registered) throw ProtocolRejection("already_registered", "voter already holds a credential");
  if (blinded_rid.is_zero()) throw ProtocolRejection("malformed", "blinded r_id is zero");
  it->second.registered = true;
  return RegistrationReply{sign(blinded_rid, key_).sig, sheet_.signed_ballots};
}

Message RegistrationAuthority::handle(const Message& m) {
  const auto& params = key_.params();
  if (m.type == "register_request") {
    const auto reply = ra_register(VoterIdentity{m.get("v_id"), m.get("precinct")}, from_dec(params, m.get("blinded")));
    return reply_to(m, "register_response", {to_dec(reply.signed_blinded), join_dec(reply.signed_ballots)});
  }
  const std::string session = m.from + "|" + m.get("session");
  if (m.type == "confirm_challenge") {
    auto signer = std::make_unique<HonestSigner>(key_, rng_.split("confirm/" + session + "/" + hex128(rng_)));
    const std::string commitment = signer->commit(from_dec(params, m.get("challenge")));
    sessions_[session] = std::move(signer);
    return reply_to(m, "confirm_commit", {m.get("session"), commitment});
  }
  if (m.type == "confirm_open") {
    auto it = sessions_.find(session);
    if (it == sessions_.end()) throw ProtocolAbort("no open confirmation session");
    auto signer = std::move(it->second);
    sessions_.erase(it);
    mpz_class e1, e2;
    if (e1.set_str(m.get("e1"), 10) != 0 || e2.set_str(m.get("e2"), 10) != 0) {
      throw ProtocolRejection("malformed", "bad challenge exponents");
    }
    const Opening opening = signer->open(from_dec(params, m.get("message")), e1, e2);
    return reply_to(m, "confirm_response", {m.get("session"), to_dec(opening.response), opening.nonce});
  }
  throw ProtocolRejection("malformed", "authority cannot handle " + m.type);
}

json RegistrationAuthority::snapshot() const {
  json roster = json::object();
  for (const auto& [v_id, e] : roster_) roster[v_id] = json{{"precinct", e.precinct}, {"registered", e.registered}};
  return json{{"x", key_.exponent().get_str()},
              {"candidates", sheet_.candidates},
              {"ballots", elements_to_json(sheet_.ballots)},
              {"signed_ballots", elements_to_json(sheet_.signed_ballots)},
              {"roster", roster},
              {"rng", rng_to_json(rng_)}};
}

void RegistrationAuthority::restore(const json& j) {
  roster_.clear();
  for (const auto& [v_id, e] : j.at("roster").items()) {
    roster_[v_id] = RosterEntry{e.at("precinct").get<std::string>(), e.at("registered").get<bool>()};
  }
  rng_from_json(rng_, j.at("rng"));
  sessions_.clear();
}

// ---------------------------------------------------------------------------
// Polling booth

PollingBooth::PollingBooth(BoothMode mode, PublicKey y, std::optional<SigningKey> key, MessageBus& bus, Rng rng)
    : mode_(mode), y_(std::move(y)), key_(std::move(key)), bus_(bus), rng_(std::move(rng)) {
  if (mode_ == BoothMode::KeyCopy && !key_) throw ParamError("booth: key-copy mode needs the signing key");
}

SessionToken PollingBooth::booth_authenticate(const FieldElement& r_id, const FieldElement& r_id_sig, bool first_use) {
  if (closed_) throw ProtocolRejection("closed", "polls are closed");
  const Signature sig{r_id, r_id_sig};
  bool valid = false;
  if (mode_ == BoothMode::KeyCopy) {
    valid = verify_with_key(sig, *key_);
  } else {
    ZkRelayChecker checker(bus_, std::string(kBooth), y_, rng_);
    valid = checker.check(sig);
  }
  if (!valid) throw ProtocolRejection("invalid_signature", "credential signature does not verify");

  auto seen = seen_.find(r_id.value());
  if (seen != seen_.end() && (first_use || seen->second != r_id_sig.value())) {
    throw ProtocolRejection("collision", "r_id already in use; obtain a new credential");
  }
  seen_[r_id.value()] = r_id_sig.value();

  revoke(r_id);
  SessionToken token{hex128(rng_), r_id, bus_.clock()};
  token_owner_[token.token] = r_id.value();
  live_[r_id.value()] = token;
  return token;
}

bool PollingBooth::token_valid(const std::string& token, const FieldElement& r_id) const {
  if (closed_) return false;
  auto it = token_owner_.find(token);
  return it != token_owner_.end() && it->second == r_id.value();
}

void PollingBooth::revoke(const FieldElement& r_id) {
  auto it = live_.find(r_id.value());
  if (it == live_.end()) return;
  token_owner_.erase(it->second.token);
  live_.erase(it);
}

void PollingBooth::close() {
  closed_ = true;
  live_.clear();
  token_owner_.clear();
}

Message PollingBooth::handle(const Message& m) {
  const auto& params = y_.y.params_ptr();
  if (m.type == "auth_request") {
    const std::string& flag = m.get("first_use");
    if (flag != "0" && flag != "1") throw ProtocolRejection("malformed", "first_use must be 0 or 1");
    const auto token = booth_authenticate(from_dec(params, m.get("r_id")), from_dec(params, m.get("r_id_sig")), flag == "1");
    return reply_to(m, "auth_response", {token.token, std::to_string(token.issued_at)});
  }
  if (m.type == "token_check") {
    return reply_to(m, "token_status", {token_valid(m.get("token"), from_dec(params, m.get("r_id"))) ? "1" : "0"});
  }
  if (m.type == "revoke") {
    revoke(from_dec(params, m.get("r_id")));
    return reply_to(m, "revoke_ack", {});
  }
  if (m.type == "close") {
    close();
    return reply_to(m, "close_ack", {});
  }
  if (m.type == "status_request") {
    return reply_to(m, "status_response", {closed_ ? "1" : "0", std::to_string(live_.size())});
  }
  throw ProtocolRejection("malformed", "booth cannot handle " + m.type);
}

json PollingBooth::snapshot() const {
  json seen = json::array();
  for (const auto& [r, s] : seen_) seen.push_back({r.get_str(), s.get_str()});
  json live = json::array();
  for (const auto& [r, t] : live_) live.push_back({r.get_str(), t.token, t.issued_at});
  return json{{"closed", closed_}, {"seen", seen}, {"live", live}, {"rng", rng_to_json(rng_)}};
}

void PollingBooth::restore(const json& j) {
  const auto& params = y_.y.params_ptr();
  closed_ = j.at("closed").get<bool>();
  seen_.clear();
  live_.clear();
  token_owner_.clear();
  for (const auto& e : j.at("seen")) seen_[mpz_class(e[0].get<std::string>())] = mpz_class(e[1].get<std::string>());
  for (const auto& e : j.at("live")) {
    SessionToken t{e[1].get<std::string>(), from_dec(params, e[0].get<std::string>()), e[2].get<std::uint64_t>()};
    token_owner_[t.token] = t.bound_r_id.value();
    live_[t.bound_r_id.value()] = t;
  }
  rng_from_json(rng_, j.at("rng"));
}

// ---------------------------------------------------------------------------
// Vote server

VoteServer::VoteServer(std::size_t index, ParamsPtr params, MessageBus& bus)
    : index_(index), params_(std::move(params)), bus_(bus) {}

void VoteServer::server_store(const CastRecord& record, const std::string& token) {
  Message status = expect_reply(
      bus_, make_message(server_endpoint(index_), std::string(kBooth), "token_check", {token, to_dec(record.r_id)}),
      "token_status");
  if (status.get("valid") != "1") throw ProtocolRejection("stale_token", "booth does not confirm the session token");
  if (record.share.is_zero()) throw ProtocolRejection("zero_share", "shares must be nonzero");
  auto it = records_.find(record.r_id.value());
  if (it != records_.end() && record.version <= it->second.version) {
    throw ProtocolRejection("version_replay", "version " + std::to_string(record.version) + " is not newer than " +
                                                  std::to_string(it->second.version));
  }
  records_[record.r_id.value()] = record;
}

void VoteServer::corrupt(const FieldElement& r_id, const FieldElement& share) {
  auto it = records_.find(r_id.value());
  if (it == records_.end()) throw ParamError("corrupt: no record for r_id");
  it->second.share = share;
}

Message VoteServer::handle(const Message& m) {
  if (m.type == "store_request") {
    CastRecord record{from_dec(params_, m.get("r_id")), parse_u64(m.get("version")), from_dec(params_, m.get("share"))};
    server_store(record, m.get("token"));
    return reply_to(m, "store_ack", {m.get("r_id"), m.get("version")});
  }
  if (m.type == "export_request") {
    std::string out;
    for (const auto& [r, rec] : records_) {
      if (!out.empty()) out += ';';
      out += r.get_str() + ":" + std::to_string(rec.version) + ":" + to_dec(rec.share);
    }
    return reply_to(m, "export_response", {out});
  }
  throw ProtocolRejection("malformed", "server cannot handle " + m.type);
}

json VoteServer::snapshot() const {
  json records = json::array();
  for (const auto& [r, rec] : records_) records.push_back({r.get_str(), rec.version, to_dec(rec.share)});
  return json{{"records", records}};
}

void VoteServer::restore(const json& j) {
  records_.clear();
  for (const auto& e : j.at("records")) {
    CastRecord rec{from_dec(params_, e[0].get<std::string>()), e[1].get<std::uint64_t>(),
                   from_dec(params_, e[2].get<std::string>())};
    records_[rec.r_id.value()] = rec;
  }
}

// ---------------------------------------------------------------------------
// Voter

bool CastAck::complete() const {
  return !accepted.empty() && std::all_of(accepted.begin(), accepted.end(), [](bool b) { return b; });
}

Voter::Voter(std::size_t index, VoterIdentity identity, ParamsPtr params, PublicKey y, BallotSheet public_sheet, Rng rng)
    : index_(index),
      identity_(std::move(identity)),
      params_(std::move(params)),
      y_(std::move(y)),
      public_sheet_(std::move(public_sheet)),
      rng_(std::move(rng)) {}

void Voter::confirm_or_throw(MessageBus& bus, const Signature& sig, const std::string& what) {
  const std::string me = voter_endpoint(index_);
  RemoteSigner signer(bus, me, std::to_string(++sessions_));
  if (confirm(sig, signer, y_, rng_).accepted) return;
  RemoteSigner disavow_signer(bus, me, std::to_string(++sessions_));
  DisavowalVerdict verdict = disavow(sig, disavow_signer, y_, rng_);
  throw CredentialInvalid(what + (verdict.is_forgery ? " is a forgery" : " failed confirmation; authority is cheating"),
                          std::move(verdict));
}

const Credential& Voter::voter_register(MessageBus& bus) {
  const std::string me = voter_endpoint(index_);
  const FieldElement r_id = sample_subgroup_element(params_, rng_);
  const BlindingFactor b = BlindingFactor::random(*params_, rng_);
  const FieldElement blinded = blind(r_id, b, y_);

  Message reply = expect_reply(
      bus, make_message(me, std::string(kAuthority), "register_request", {identity_.v_id, identity_.precinct, to_dec(blinded)}),
      "register_response");
  const FieldElement signed_blinded = from_dec(params_, reply.get("signed_blinded"));
  std::vector<FieldElement> signed_ballots = split_dec(params_, reply.get("signed_ballots"));
  if (signed_ballots.size() != public_sheet_.m()) {
    throw ProtocolRejection("malformed", "authority returned the wrong number of signed ballots");
  }

  // Confirming the blinded pair proves the unblinded one: unblind divides
  // out exactly y^b. The authority never sees r_id in the clear.
  confirm_or_throw(bus, Signature{blinded, signed_blinded}, "credential signature");
  for (std::size_t j = 0; j < signed_ballots.size(); ++j) {
    confirm_or_throw(bus, Signature{public_sheet_.ballots[j], signed_ballots[j]},
                     "signed ballot for " + public_sheet_.candidates[j]);
  }

  credential_ = Credential{r_id, unblind(signed_blinded, b, y_)};
  signed_ballots_ = std::move(signed_ballots);
  if (r_id.value() == 1) warnings_.push_back("degenerate r_id = 1: signature 1 is trivially forgeable");
  return *credential_;
}

const SessionToken& Voter::authenticate(MessageBus& bus) {
  if (!credential_) throw ProtocolRejection("malformed", "voter has no credential");
  Message reply = expect_reply(bus,
                               make_message(voter_endpoint(index_), std::string(kBooth), "auth_request",
                                            {to_dec(credential_->r_id), to_dec(credential_->r_id_sig),
                                             authenticated_before_ ? "0" : "1"}),
                               "auth_response");
  authenticated_before_ = true;
  token_ = SessionToken{reply.get("token"), credential_->r_id, parse_u64(reply.get("issued_at"))};
  return *token_;
}

CastAck Voter::cast(MessageBus& bus, std::size_t candidate, std::size_t k,
                    const std::function<void(std::size_t)>& after_each) {
  if (!credential_ || !token_) throw ProtocolRejection("malformed", "voter must register and authenticate first");
  if (candidate >= signed_ballots_.size()) throw ParamError("cast: candidate index out of range");
  const ShareSet shares = split(signed_ballots_[candidate], k, rng_);
  CastAck ack;
  ack.version = ++version_;
  for (std::size_t i = 0; i < k; ++i) {
    Message reply = bus.call(make_message(voter_endpoint(index_), server_endpoint(i), "store_request",
                                          {to_dec(credential_->r_id), std::to_string(ack.version), to_dec(shares[i]),
                                           token_->token}));
    ack.accepted.push_back(reply.type == "store_ack");
    if (after_each) after_each(i);
  }
  return ack;
}

json Voter::snapshot() const {
  json j{{"version", version_},
         {"sessions", sessions_},
         {"authenticated_before", authenticated_before_},
         {"signed_ballots", elements_to_json(signed_ballots_)},
         {"warnings", warnings_},
         {"rng", rng_to_json(rng_)}};
  j["credential"] = credential_ ? json{to_dec(credential_->r_id), to_dec(credential_->r_id_sig)} : json(nullptr);
  j["token"] = token_ ? json{token_->token, token_->issued_at} : json(nullptr);
  return j;
}

void Voter::restore(const json& j) {
  version_ = j.at("version").get<std::uint64_t>();
  sessions_ = j.at("sessions").get<std::uint64_t>();
  authenticated_before_ = j.at("authenticated_before").get<bool>();
  signed_ballots_ = elements_from_json(params_, j.at("signed_ballots"));
  warnings_ = j.at("warnings").get<std::vector<std::string>>();
  rng_from_json(rng_, j.at("rng"));
  credential_.reset();
  token_.reset();
  if (!j.at("credential").is_null()) {
    const auto& c = j.at("credential");
    credential_ = Credential{from_dec(params_, c[0].get<std::string>()), from_dec(params_, c[1].get<std::string>())};
  }
  if (!j.at("token").is_null()) {
    const auto& t = j.at("token");
    token_ = SessionToken{t[0].get<std::string>(), credential_->r_id, t[1].get<std::uint64_t>()};
  }
}

// ---------------------------------------------------------------------------
// Tally

TallyResult tally(const std::vector<std::map<mpz_class, CastRecord>>& stores, const BallotSheet& sheet,
                  SignatureChecker& checker) {
  TallyResult result;
  result.counts.assign(sheet.m(), 0);
  std::set<mpz_class> r_ids;
  for (const auto& store : stores) {
    for (const auto& [r, rec] : store) r_ids.insert(r);
  }
  result.distinct_r_ids = r_ids.size();

  std::vector<FieldElement> shares;
  for (const auto& r : r_ids) {
    shares.clear();
    std::optional<std::uint64_t> version;
    bool consistent = true;
    for (const auto& store : stores) {
      auto it = store.find(r);
      if (it == store.end() || (version && *version != it->second.version) || it->second.share.is_zero()) {
        consistent = false;
        break;
      }
      version = it->second.version;
      shares.push_back(it->second.share);
    }
    if (!consistent) {
      ++result.inconsistent;
      continue;
    }
    const FieldElement value = reconstruct(shares);
    const auto j = sheet.match(value);
    if (j && checker.check(Signature{sheet.ballots[*j], value})) {
      ++result.counts[*j];
    } else {
      ++result.invalid;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Election

Election::Election(const ElectionSetup& setup) : params_(setup.params), seed_(setup.seed) {
  if (!params_) throw ParamError("election: missing field parameters");
  if (setup.k < 2) throw ParamError("election: k must be at least 2");
  Rng setup_rng = Rng::derive(seed_, "setup");
  SigningKey key = SigningKey::generate(params_, setup_rng);
  BallotSheet sheet = BallotSheet::generate(setup.candidates, key, setup_rng);
  BallotSheet public_sheet{sheet.candidates, sheet.ballots, {}};

  ra_ = std::make_unique<RegistrationAuthority>(key, sheet, Rng::derive(seed_, "ra"));
  std::optional<SigningKey> booth_key;
  if (setup.booth_mode == BoothMode::KeyCopy) booth_key = key;
  booth_ = std::make_unique<PollingBooth>(setup.booth_mode, key.public_key(), booth_key, bus_, Rng::derive(seed_, "booth"));
  for (std::size_t i = 0; i < setup.k; ++i) servers_.push_back(std::make_unique<VoteServer>(i, params_, bus_));
  for (std::size_t i = 0; i < setup.voters.size(); ++i) {
    ra_->enroll(setup.voters[i]);
    voters_.push_back(std::make_unique<Voter>(i, setup.voters[i], params_, key.public_key(), public_sheet,
                                              Rng::derive(seed_, voter_endpoint(i))));
  }
  tally_rng_ = Rng::derive(seed_, "tally");
  wire();
}

void Election::wire() {
  bus_.attach(std::string(kAuthority), [this](const Message& m) { return ra_->handle(m); });
  bus_.attach(std::string(kBooth), [this](const Message& m) { return booth_->handle(m); });
  for (auto& s : servers_) {
    VoteServer* server = s.get();
    bus_.attach(server_endpoint(server->index()), [server](const Message& m) { return server->handle(m); });
  }
}

const Credential& Election::register_voter(std::size_t i) { return voters_.at(i)->voter_register(bus_); }

CastAck Election::cast(std::size_t i, std::size_t candidate, const std::function<void(std::size_t)>& after_each) {
  Voter& v = *voters_.at(i);
  v.authenticate(bus_);
  return v.cast(bus_, candidate, servers_.size(), after_each);
}

void Election::revoke(std::size_t i) {
  const auto& cred = voters_.at(i)->credential();
  if (!cred) throw ParamError("revoke: voter has no credential");
  expect_reply(bus_, make_message(std::string(kHarness), std::string(kBooth), "revoke", {to_dec(cred->r_id)}), "revoke_ack");
}

void Election::close() {
  expect_reply(bus_, make_message(std::string(kHarness), std::string(kBooth), "close", {}), "close_ack");
}

TallyResult Election::run_tally() {
  Message status =
      expect_reply(bus_, make_message(std::string(kTallier), std::string(kBooth), "status_request", {}), "status_response");
  if (status.get("closed") != "1" || status.get("live_tokens") != "0") {
    throw ProtocolRejection("not_closed", "tally requires closed polls with no live sessions");
  }
  std::vector<std::map<mpz_class, CastRecord>> stores;
  for (std::size_t i = 0; i < servers_.size(); ++i) {
    Message reply =
        expect_reply(bus_, make_message(std::string(kTallier), server_endpoint(i), "export_request", {}), "export_response");
    std::map<mpz_class, CastRecord> store;
    std::istringstream is(reply.get("records"));
    std::string item;
    while (std::getline(is, item, ';')) {
      const auto a = item.find(':');
      const auto b = item.find(':', a + 1);
      if (a == std::string::npos || b == std::string::npos) throw ProtocolRejection("malformed", "bad export record");
      CastRecord rec{from_dec(params_, item.substr(0, a)), parse_u64(item.substr(a + 1, b - a - 1)),
                     from_dec(params_, item.substr(b + 1))};
      store[rec.r_id.value()] = rec;
    }
    stores.push_back(std::move(store));
  }
  if (booth_->mode() == BoothMode::KeyCopy) {
    KeyCopyChecker checker(ra_->key());
    return tally(stores, ra_->sheet(), checker);
  }
  ZkRelayChecker checker(bus_, std::string(kTallier), ra_->public_key(), tally_rng_);
  return tally(stores, ra_->sheet(), checker);
}

json Election::snapshot() const {
  json voters = json::array();
  for (const auto& v : voters_) {
    voters.push_back(json{{"v_id", v->identity().v_id}, {"precinct", v->identity().precinct}, {"state", v->snapshot()}});
  }
  json servers = json::array();
  for (const auto& s : servers_) servers.push_back(s->snapshot());
  return json{{"field", params_to_json(*params_)},
              {"seed", seed_},
              {"k", servers_.size()},
              {"booth_mode", std::string(to_string(booth_->mode()))},
              {"authority", ra_->snapshot()},
              {"booth", booth_->snapshot()},
              {"servers", servers},
              {"voters", voters},
              {"tally_rng", rng_to_json(tally_rng_)},
              {"bus", bus_.snapshot()}};
}

std::unique_ptr<Election> Election::restore(const json& j) {
  std::unique_ptr<Election> e(new Election());
  e->params_ = params_from_json(j.at("field"));
  e->seed_ = j.at("seed").get<std::uint64_t>();
  const auto& params = e->params_;

  const auto& ra = j.at("authority");
  SigningKey key(params, mpz_class(ra.at("x").get<std::string>()));
  BallotSheet sheet{ra.at("candidates").get<std::vector<std::string>>(), elements_from_json(params, ra.at("ballots")),
                    elements_from_json(params, ra.at("signed_ballots"))};
  for (std::size_t i = 0; i < sheet.m(); ++i) {
    if (!verify_with_key(Signature{sheet.ballots[i], sheet.signed_ballots[i]}, key)) {
      throw ParamError("snapshot: signed ballot does not match the authority key");
    }
  }
  BallotSheet public_sheet{sheet.candidates, sheet.ballots, {}};
  e->ra_ = std::make_unique<RegistrationAuthority>(key, sheet, Rng());
  e->ra_->restore(ra);

  const BoothMode mode = booth_mode_from_string(j.at("booth_mode").get<std::string>());
  std::optional<SigningKey> booth_key;
  if (mode == BoothMode::KeyCopy) booth_key = key;
  e->booth_ = std::make_unique<PollingBooth>(mode, key.public_key(), booth_key, e->bus_, Rng());
  e->booth_->restore(j.at("booth"));

  const auto k = j.at("k").get<std::size_t>();
  const auto& servers = j.at("servers");
  if (servers.size() != k || k < 2) throw ParamError("snapshot: server count mismatch");
  for (std::size_t i = 0; i < k; ++i) {
    e->servers_.push_back(std::make_unique<VoteServer>(i, params, e->bus_));
    e->servers_.back()->restore(servers[i]);
  }
  const auto& voters = j.at("voters");
  for (std::size_t i = 0; i < voters.size(); ++i) {
    VoterIdentity id{voters[i].at("v_id").get<std::string>(), voters[i].at("precinct").get<std::string>()};
    e->voters_.push_back(std::make_unique<Voter>(i, id, params, key.public_key(), public_sheet, Rng()));
    e->voters_.back()->restore(voters[i].at("state"));
  }
  rng_from_json(e->tally_rng_, j.at("tally_rng"));
  e->bus_.restore(j.at("bus"));
  e->wire();
  return e;
}

}  // namespace ivote
