#include "ivote/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <type_traits>

namespace ivote {

using nlohmann::json;

namespace {

constexpr const char* kSnapshotFormat = "ivote-snapshot-v1";

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

/// Accumulates field-level diagnostics while reading a JSON object.
class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) fail("", "must be a JSON object");
  }

  void fail(const std::string& field, const std::string& msg) {
    errors_.push_back((field.empty() ? context_ : field) + ": " + msg);
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }

  template <typename T>
  std::optional<T> get(const char* key, bool required) {
    if (!has(key)) {
      if (required) fail(key, "missing");
      return std::nullopt;
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (!j_.at(key).is_number_unsigned()) {
        fail(key, "must be a non-negative integer");
        return std::nullopt;
      }
    }
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
      return std::nullopt;
    }
  }

  void reject_unknown(const std::set<std::string>& known) {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items()) {
      if (!known.count(key)) fail(key, "unknown field");
    }
  }

  void merge(const std::vector<std::string>& more) { errors_.insert(errors_.end(), more.begin(), more.end()); }
  const std::vector<std::string>& errors() const { return errors_; }

  void throw_if_failed() const {
    if (!errors_.empty()) throw ConfigError(context_ + " is invalid:\n  " + join(errors_, "\n  "));
  }

 private:
  const json& j_;
  std::string context_;
  std::vector<std::string> errors_;
};

FieldSpec field_from_json(Reader& r) {
  FieldSpec spec;
  if (!r.has("field")) {
    r.fail("field", "missing");
    return spec;
  }
  const json& f = r.at("field");
  if (f.is_string() && f.get<std::string>() == "fixture") {
    spec.explicit_params = *fixture_params();
    return spec;
  }
  if (!f.is_object()) {
    r.fail("field", "must be \"fixture\", {\"bits\": n} or {\"p\", \"q\", \"g\"}");
    return spec;
  }
  if (f.contains("bits")) {
    if (!f.at("bits").is_number_integer() || f.at("bits").get<int>() < 5) {
      r.fail("field.bits", "must be an integer >= 5 (smallest field is p = 23)");
    } else {
      spec.bits = f.at("bits").get<int>();
    }
    return spec;
  }
  try {
    spec.explicit_params = FieldParams{mpz_class(f.at("p").get<std::string>()), mpz_class(f.at("q").get<std::string>()),
                                       mpz_class(f.at("g").get<std::string>())};
    spec.explicit_params->validate();
  } catch (const json::exception&) {
    r.fail("field", "explicit parameters need decimal strings p, q, g");
    spec.explicit_params.reset();
  } catch (const std::invalid_argument&) {
    r.fail("field", "p, q, g must be decimal integers");
    spec.explicit_params.reset();
  } catch (const ParamError& e) {
    r.fail("field", e.what());
    spec.explicit_params.reset();
  }
  return spec;
}

json field_to_json(const FieldSpec& spec) {
  if (spec.bits) return json{{"bits", *spec.bits}};
  if (spec.explicit_params) return params_to_json(*spec.explicit_params);
  return nullptr;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(static_cast<std::uint64_t>(i))]);
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), 0);
  shuffle(out, rng);
  return out;
}

const char* kind_name(ScheduledEvent::Kind k) {
  switch (k) {
    case ScheduledEvent::Kind::Register: return "register";
    case ScheduledEvent::Kind::Cast: return "cast";
    case ScheduledEvent::Kind::Close: return "close";
    case ScheduledEvent::Kind::Tally: return "tally";
  }
  return "?";
}

ScheduledEvent::Kind kind_from_name(const std::string& s) {
  for (auto k : {ScheduledEvent::Kind::Register, ScheduledEvent::Kind::Cast, ScheduledEvent::Kind::Close,
                 ScheduledEvent::Kind::Tally}) {
    if (s == kind_name(k)) return k;
  }
  throw ConfigError("snapshot: unknown event kind '" + s + "'");
}

json tally_to_json(const TallyResult& t) {
  return json{{"counts", t.counts}, {"invalid", t.invalid}, {"inconsistent", t.inconsistent}, {"distinct", t.distinct_r_ids}};
}

TallyResult tally_from_json(const json& j) {
  return TallyResult{j.at("counts").get<std::vector<std::uint64_t>>(), j.at("invalid").get<std::uint64_t>(),
                     j.at("inconsistent").get<std::uint64_t>(), j.at("distinct").get<std::uint64_t>()};
}

std::string fraction(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ParamsPtr FieldSpec::resolve(std::uint64_t seed) const {
  if (explicit_params) return make_params(explicit_params->p, explicit_params->q, explicit_params->g);
  if (!bits) throw ConfigError("field: no bit length or explicit parameters");
  Rng rng = Rng::derive(seed, "params");
  const FieldParams params = generate_params(*bits, rng);
  return make_params(params.p, params.q, params.g);
}

ElectionConfig election_config_from_json(const json& j) {
  Reader r(j, "election config");
  r.throw_if_failed();
  r.reject_unknown({"field", "k", "candidates", "m", "n_voters", "recast_fraction", "incomplete_cast_fraction", "seed",
                    "booth_mode"});
  ElectionConfig c;
  c.field = field_from_json(r);
  c.k = r.get<std::size_t>("k", true).value_or(0);
  if (r.has("candidates") && r.has("m")) r.fail("candidates", "give either candidates or m, not both");
  if (auto labels = r.get<std::vector<std::string>>("candidates", false)) {
    c.candidates = *labels;
  } else if (auto m = r.get<std::size_t>("m", false)) {
    for (std::size_t i = 1; i <= *m; ++i) c.candidates.push_back("C" + std::to_string(i));
  } else if (!r.has("candidates") && !r.has("m")) {
    r.fail("candidates", "missing (give candidates or m)");
  }
  c.n_voters = r.get<std::size_t>("n_voters", true).value_or(0);
  c.recast_fraction = r.get<double>("recast_fraction", false).value_or(0.0);
  c.incomplete_cast_fraction = r.get<double>("incomplete_cast_fraction", false).value_or(0.0);
  c.seed = r.get<std::uint64_t>("seed", false).value_or(0);
  if (auto mode = r.get<std::string>("booth_mode", false)) {
    try {
      c.booth_mode = booth_mode_from_string(*mode);
    } catch (const ParamError&) {
      r.fail("booth_mode", "must be key-copy or zk-relay");
    }
  }
  if (c.k < 2) r.fail("k", "must be at least 2");
  if (c.candidates.size() < 2) r.fail("candidates", "need at least two candidates");
  if (std::set<std::string>(c.candidates.begin(), c.candidates.end()).size() != c.candidates.size()) {
    r.fail("candidates", "labels must be distinct");
  }
  if (!(c.recast_fraction >= 0.0 && c.recast_fraction <= 1.0)) r.fail("recast_fraction", "must lie in [0, 1]");
  if (!(c.incomplete_cast_fraction >= 0.0 && c.incomplete_cast_fraction <= 1.0)) {
    r.fail("incomplete_cast_fraction", "must lie in [0, 1]");
  }
  r.throw_if_failed();
  return c;
}

void validate(const ElectionConfig& c) {
  std::vector<std::string> errors;
  if (!c.field.bits && !c.field.explicit_params) errors.push_back("field: missing");
  if (c.field.bits && *c.field.bits < 5) errors.push_back("field.bits: must be at least 5");
  if (c.k < 2) errors.push_back("k: must be at least 2");
  if (c.candidates.size() < 2) errors.push_back("candidates: need at least two candidates");
  if (!(c.recast_fraction >= 0.0 && c.recast_fraction <= 1.0)) errors.push_back("recast_fraction: must lie in [0, 1]");
  if (!(c.incomplete_cast_fraction >= 0.0 && c.incomplete_cast_fraction <= 1.0)) {
    errors.push_back("incomplete_cast_fraction: must lie in [0, 1]");
  }
  if (!errors.empty()) throw ConfigError("election config is invalid:\n  " + join(errors, "\n  "));
}

json election_config_to_json(const ElectionConfig& c) {
  return json{{"field", field_to_json(c.field)},
              {"k", c.k},
              {"candidates", c.candidates},
              {"n_voters", c.n_voters},
              {"recast_fraction", c.recast_fraction},
              {"incomplete_cast_fraction", c.incomplete_cast_fraction},
              {"seed", c.seed},
              {"booth_mode", std::string(to_string(c.booth_mode))}};
}

// ---------------------------------------------------------------------------
// Ledger

TallyResult IntentLedger::expected(std::size_t m) const {
  TallyResult t;
  t.counts.assign(m, 0);
  for (const auto& v : voters) {
    if (v.rejected || !v.latest) continue;
    ++t.distinct_r_ids;
    if (v.latest_complete) {
      ++t.counts.at(*v.latest);
    } else {
      ++t.inconsistent;
    }
  }
  return t;
}

json IntentLedger::to_json() const {
  json out = json::array();
  for (const auto& v : voters) {
    out.push_back(json{{"registered", v.registered},
                       {"rejected", v.rejected},
                       {"latest", v.latest ? json(*v.latest) : json(nullptr)},
                       {"complete", v.latest_complete},
                       {"casts", v.casts}});
  }
  return out;
}

IntentLedger IntentLedger::from_json(const json& j) {
  IntentLedger l;
  for (const auto& e : j) {
    Entry v;
    v.registered = e.at("registered").get<bool>();
    v.rejected = e.at("rejected").get<bool>();
    if (!e.at("latest").is_null()) v.latest = e.at("latest").get<std::size_t>();
    v.latest_complete = e.at("complete").get<bool>();
    v.casts = e.at("casts").get<std::uint64_t>();
    l.voters.push_back(v);
  }
  return l;
}

std::string ScheduledEvent::describe() const {
  std::string out = kind_name(kind);
  if (kind == Kind::Register || kind == Kind::Cast) out += " voter=" + std::to_string(voter);
  if (kind == Kind::Cast) out += " candidate=" + std::to_string(candidate);
  if (cutoff) out += " cutoff=" + std::to_string(*cutoff);
  return out;
}

// ---------------------------------------------------------------------------
// Election run

ElectionRun::ElectionRun(ElectionConfig config) : config_(std::move(config)) {
  validate(config_);
  ElectionSetup setup;
  setup.params = config_.field.resolve(config_.seed);
  setup.k = config_.k;
  setup.candidates = config_.candidates;
  setup.booth_mode = config_.booth_mode;
  setup.seed = config_.seed;
  for (std::size_t i = 0; i < config_.n_voters; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "V%06zu", i + 1);
    setup.voters.push_back(VoterIdentity{id, "P" + std::to_string(i % 10)});
  }
  election_ = std::make_unique<Election>(setup);
  ledger_.voters.assign(config_.n_voters, {});
  build_schedule();
}

void ElectionRun::build_schedule() {
  Rng rng = Rng::derive(config_.seed, "scheduler");
  const std::size_t n = config_.n_voters;
  const std::size_t m = config_.candidates.size();

  for (std::size_t v : permutation(n, rng)) schedule_.push_back({ScheduledEvent::Kind::Register, v, 0, std::nullopt});

  std::vector<std::size_t> intent(n);
  for (auto& c : intent) c = rng.below(m);
  std::vector<std::size_t> final_cast(n);
  for (std::size_t v : permutation(n, rng)) {
    final_cast[v] = schedule_.size();
    schedule_.push_back({ScheduledEvent::Kind::Cast, v, intent[v], std::nullopt});
  }

  const auto n_recast = static_cast<std::size_t>(std::llround(config_.recast_fraction * static_cast<double>(n)));
  auto recasters = permutation(n, rng);
  recasters.resize(n_recast);
  std::vector<ScheduledEvent> recasts;
  for (std::size_t v : recasters) recasts.push_back({ScheduledEvent::Kind::Cast, v, (intent[v] + 1 + rng.below(m - 1)) % m, std::nullopt});
  shuffle(recasts, rng);
  for (const auto& e : recasts) {
    final_cast[e.voter] = schedule_.size();
    schedule_.push_back(e);
  }

  const auto n_incomplete =
      static_cast<std::size_t>(std::llround(config_.incomplete_cast_fraction * static_cast<double>(n)));
  auto truncated = permutation(n, rng);
  truncated.resize(n_incomplete);
  for (std::size_t v : truncated) schedule_[final_cast[v]].cutoff = rng.below(config_.k - 1);

  schedule_.push_back({ScheduledEvent::Kind::Close, 0, 0, std::nullopt});
  schedule_.push_back({ScheduledEvent::Kind::Tally, 0, 0, std::nullopt});
}

void ElectionRun::step() {
  if (done()) return;
  const ScheduledEvent e = schedule_[cursor_];
  auto& bus = election_->bus();
  switch (e.kind) {
    case ScheduledEvent::Kind::Register: {
      bus.set_phase(Phase::Registration);
      auto& entry = ledger_.voters.at(e.voter);
      try {
        election_->register_voter(e.voter);
        entry.registered = true;
      } catch (const ProtocolRejection&) {
        entry.rejected = true;
      } catch (const CredentialInvalid&) {
        entry.rejected = true;
      }
      break;
    }
    case ScheduledEvent::Kind::Cast: {
      bus.set_phase(Phase::Voting);
      auto& entry = ledger_.voters.at(e.voter);
      if (!entry.registered || entry.rejected) break;
      try {
        std::function<void(std::size_t)> cut;
        if (e.cutoff) {
          const std::size_t after = *e.cutoff;
          cut = [this, &e, after](std::size_t i) {
            if (i == after) election_->revoke(e.voter);
          };
        }
        election_->cast(e.voter, e.candidate, cut);
        entry.latest = e.candidate;
        entry.latest_complete = !e.cutoff.has_value();
        ++entry.casts;
      } catch (const ProtocolRejection& err) {
        // A first-use collision: the r_id is held by someone else.
        if (err.code() != "collision") throw;
        entry.rejected = true;
      }
      break;
    }
    case ScheduledEvent::Kind::Close:
      bus.set_phase(Phase::Voting);
      election_->close();
      break;
    case ScheduledEvent::Kind::Tally:
      bus.set_phase(Phase::Counting);
      tally_ = election_->run_tally();
      break;
  }
  ++cursor_;
}

void ElectionRun::run_until(std::size_t limit) {
  while (!done() && cursor_ < limit) step();
}

std::string ElectionRun::event_log() const {
  std::string out;
  for (const auto& line : election_->bus().log()) out += line + "\n";
  return out;
}

RunReport ElectionRun::report() const {
  if (!done() || !tally_) throw Error("report: the run has not finished");
  RunReport r;
  r.config = config_;
  r.field = election_->params() ? *election_->params() : FieldParams{};
  r.tally = *tally_;
  r.expected = ledger_.expected(config_.candidates.size());
  r.phase_messages = election_->bus().phase_counts();
  r.events = cursor_;
  for (const auto& v : ledger_.voters) r.rejected_voters += v.rejected;
  for (std::size_t i = 0; i < election_->voter_count(); ++i) {
    r.warnings += election_->voter(i).warnings().size();
  }
  // Everything else is compared field by field.
  const auto& labels = config_.candidates;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (r.tally.counts[j] != r.expected.counts[j]) {
      r.diff.push_back("candidate " + labels[j] + ": expected " + std::to_string(r.expected.counts[j]) + ", tallied " +
                       std::to_string(r.tally.counts[j]));
    }
  }
  auto compare = [&](const char* what, std::uint64_t expected, std::uint64_t actual) {
    if (expected != actual) {
      r.diff.push_back(std::string(what) + ": expected " + std::to_string(expected) + ", tallied " + std::to_string(actual));
    }
  };
  compare("invalid", r.expected.invalid, r.tally.invalid);
  compare("inconsistent", r.expected.inconsistent, r.tally.inconsistent);
  compare("distinct_r_ids", r.expected.distinct_r_ids, r.tally.distinct_r_ids);
  return r;
}

json ElectionRun::snapshot() const {
  json schedule = json::array();
  for (const auto& e : schedule_) {
    schedule.push_back(json{{"kind", kind_name(e.kind)},
                            {"voter", e.voter},
                            {"candidate", e.candidate},
                            {"cutoff", e.cutoff ? json(*e.cutoff) : json(nullptr)}});
  }
  return json{{"format", kSnapshotFormat},
              {"config", election_config_to_json(config_)},
              {"cursor", cursor_},
              {"schedule", schedule},
              {"ledger", ledger_.to_json()},
              {"tally", tally_ ? tally_to_json(*tally_) : json(nullptr)},
              {"election", election_->snapshot()}};
}

ElectionRun ElectionRun::resume(const json& j) {
  if (!j.is_object() || j.value("format", "") != kSnapshotFormat) {
    throw ConfigError("snapshot: not an " + std::string(kSnapshotFormat) + " document");
  }
  try {
    ElectionRun run;
    run.config_ = election_config_from_json(j.at("config"));
    run.election_ = Election::restore(j.at("election"));
    for (const auto& e : j.at("schedule")) {
      ScheduledEvent ev;
      ev.kind = kind_from_name(e.at("kind").get<std::string>());
      ev.voter = e.at("voter").get<std::size_t>();
      ev.candidate = e.at("candidate").get<std::size_t>();
      if (!e.at("cutoff").is_null()) ev.cutoff = e.at("cutoff").get<std::size_t>();
      run.schedule_.push_back(ev);
    }
    run.cursor_ = j.at("cursor").get<std::size_t>();
    run.ledger_ = IntentLedger::from_json(j.at("ledger"));
    if (!j.at("tally").is_null()) run.tally_ = tally_from_json(j.at("tally"));
    if (run.cursor_ > run.schedule_.size() || run.ledger_.voters.size() != run.config_.n_voters ||
        run.election_->voter_count() != run.config_.n_voters) {
      throw ConfigError("snapshot: inconsistent cursor or roster size");
    }
    return run;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("snapshot: ") + e.what());
  } catch (const ParamError& e) {
    throw ConfigError(std::string("snapshot: ") + e.what());
  }
}

RunReport run_election(const ElectionConfig& config) {
  ElectionRun run(config);
  while (!run.done()) run.step();
  return run.report();
}

// ---------------------------------------------------------------------------
// Reports

std::string RunReport::to_records() const {
  std::ostringstream os;
  os << "config " << election_config_to_json(config).dump() << "\n";
  os << "field p=" << field.p << " q=" << field.q << " g=" << field.g << "\n";
  for (std::size_t j = 0; j < config.candidates.size(); ++j) {
    os << "tally candidate=" << config.candidates[j] << " count=" << tally.counts[j] << " expected=" << expected.counts[j]
       << "\n";
  }
  os << "tally invalid=" << tally.invalid << " inconsistent=" << tally.inconsistent
     << " distinct_r_ids=" << tally.distinct_r_ids << "\n";
  os << "ledger invalid=" << expected.invalid << " inconsistent=" << expected.inconsistent
     << " distinct_r_ids=" << expected.distinct_r_ids << " rejected_voters=" << rejected_voters << "\n";
  for (const auto& [phase, count] : phase_messages) os << "messages phase=" << phase << " count=" << count << "\n";
  os << "run events=" << events << " warnings=" << warnings << "\n";
  if (diff.empty()) {
    os << "diff match=1\n";
  } else {
    for (const auto& d : diff) os << "diff match=0 " << d << "\n";
  }
  return os.str();
}

std::string RunReport::to_table() const {
  std::ostringstream os;
  os << "Election report\n";
  os << "  field       p=" << field.p << " (q=" << field.q << ", g=" << field.g << ")\n";
  os << "  servers     k=" << config.k << "   booth=" << to_string(config.booth_mode) << "   seed=" << config.seed << "\n";
  os << "  voters      " << config.n_voters << "   recast=" << fraction(config.recast_fraction)
     << "   incomplete=" << fraction(config.incomplete_cast_fraction) << "\n\n";
  os << "  " << std::left << std::setw(16) << "candidate" << std::right << std::setw(10) << "tallied" << std::setw(10)
     << "intended" << "\n";
  for (std::size_t j = 0; j < config.candidates.size(); ++j) {
    os << "  " << std::left << std::setw(16) << config.candidates[j] << std::right << std::setw(10) << tally.counts[j]
       << std::setw(10) << expected.counts[j] << "\n";
  }
  os << "  " << std::left << std::setw(16) << "invalid" << std::right << std::setw(10) << tally.invalid << std::setw(10)
     << expected.invalid << "\n";
  os << "  " << std::left << std::setw(16) << "inconsistent" << std::right << std::setw(10) << tally.inconsistent
     << std::setw(10) << expected.inconsistent << "\n\n";
  os << "  messages   ";
  for (const auto& [phase, count] : phase_messages) os << " " << phase << "=" << count;
  os << "\n  events      " << events << "   rejected voters=" << rejected_voters << "   warnings=" << warnings << "\n";
  os << "  result      " << (diff.empty() ? "tally matches the intent ledger" : "MISMATCH") << "\n";
  for (const auto& d : diff) os << "    " << d << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Attacks

AttackConfig attack_config_from_json(const json& j) {
  Reader r(j, "attack config");
  r.throw_if_failed();
  r.reject_unknown({"field", "k", "colluders", "m", "target", "mode", "trials", "seed", "strategy", "threads"});
  AttackConfig c;
  c.field = field_from_json(r);
  c.k = r.get<std::size_t>("k", true).value_or(0);
  c.colluders = r.get<std::vector<std::size_t>>("colluders", true).value_or(std::vector<std::size_t>{});
  c.m = r.get<std::size_t>("m", false).value_or(3);
  if (r.has("target")) {
    const json& t = r.at("target");
    if (t.is_number_unsigned()) {
      c.target = std::to_string(t.get<std::size_t>());
    } else if (t.is_string() && (t == "any" || t == "original")) {
      c.target = t.get<std::string>();
    } else {
      r.fail("target", "must be \"any\", \"original\" or a candidate index");
    }
  }
  const auto mode = r.get<std::string>("mode", false).value_or("exhaustive");
  if (mode == "exhaustive") {
    c.mode = AttackMode::Exhaustive;
  } else if (mode == "montecarlo") {
    c.mode = AttackMode::MonteCarlo;
  } else {
    r.fail("mode", "must be exhaustive or montecarlo");
  }
  c.trials = r.get<std::uint64_t>("trials", c.mode == AttackMode::MonteCarlo).value_or(0);
  c.seed = r.get<std::uint64_t>("seed", false).value_or(0);
  c.threads = r.get<unsigned>("threads", false).value_or(0);
  const auto strategy = r.get<std::string>("strategy", false).value_or("sweep");
  if (strategy == "sweep") {
    c.strategy = ManipulationStrategy::SweepPivot;
  } else if (strategy == "keep") {
    c.strategy = ManipulationStrategy::KeepOriginal;
  } else {
    r.fail("strategy", "must be sweep or keep");
  }
  if (c.k < 2) r.fail("k", "must be at least 2");
  if (r.has("colluders") && c.colluders.empty()) r.fail("colluders", "must name at least one server");
  for (auto i : c.colluders) {
    if (i >= c.k) r.fail("colluders", "index " + std::to_string(i) + " is not below k");
  }
  if (c.k >= 2 && c.colluders.size() > c.k - 1) r.fail("colluders", "at most k-1 servers may collude");
  if (c.m < 2) r.fail("m", "must be at least 2");
  if (c.target != "any" && c.target != "original" && std::stoull(c.target) >= c.m) {
    r.fail("target", "candidate index must be below m");
  }
  if (c.mode == AttackMode::MonteCarlo && c.trials == 0 && r.has("trials")) r.fail("trials", "must be positive");
  r.throw_if_failed();
  return c;
}

AttackReport run_attack(const AttackConfig& config) {
  AttackReport rep;
  auto& s = rep.scenario;
  s.params = config.field.resolve(config.seed);
  Rng rng = Rng::derive(config.seed, "attack/setup");
  const SigningKey key = SigningKey::generate(s.params, rng);
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= config.m; ++i) labels.push_back("C" + std::to_string(i));
  const BallotSheet sheet = BallotSheet::generate(labels, key, rng);

  s.k = config.k;
  s.colluders = config.colluders;
  s.valid_values = sheet.signed_ballots;
  s.mode = config.mode;
  s.trials = config.trials;
  s.seed = config.seed;
  s.strategy = config.strategy;
  s.threads = config.threads;
  if (config.target == "any") {
    s.target = AttackTarget::any_valid();
  } else if (config.target == "original") {
    s.target = AttackTarget::original();
  } else {
    s.target = AttackTarget::specific(sheet.signed_ballots.at(std::stoull(config.target)));
  }

  const auto& p = s.params->p;
  rep.targeted_exact = exact_targeted_probability(*s.params);
  rep.targeted_approx = mpq_class(mpz_class(1), p);
  rep.any_exact = exact_any_valid_probability(*s.params, config.m);
  rep.any_other_exact = mpq_class(mpz_class(static_cast<unsigned long>(config.m - 1)), mpz_class(p - 1));
  rep.any_other_exact.canonicalize();
  rep.any_approx = mpq_class(mpz_class(static_cast<unsigned long>(config.m)), p);
  rep.any_approx.canonicalize();
  if (s.target.kind != AttackTarget::Kind::AnyValid) rep.targeted = attack_targeted(s);
  rep.any = attack_any_valid(s);
  return rep;
}

std::string AttackReport::to_records() const {
  std::string out;
  if (targeted) out += outcome_record("targeted", scenario, *targeted, targeted_exact, targeted_approx) + "\n";
  out += outcome_record("any-valid", scenario, any.any, any_exact, any_approx) + "\n";
  out += outcome_record("any-other", scenario, any.any_other, any_other_exact, any_approx) + "\n";
  return out;
}

std::string AttackReport::to_table() const {
  std::ostringstream os;
  os << "Collusion attack\n";
  os << "  p=" << scenario.params->p << " k=" << scenario.k << " colluders=";
  for (std::size_t i = 0; i < scenario.colluders.size(); ++i) os << (i ? "," : "") << scenario.colluders[i];
  os << " m=" << scenario.valid_values.size() << " mode="
     << (scenario.mode == AttackMode::Exhaustive ? "exhaustive" : "montecarlo") << "\n\n";
  auto row = [&](const char* name, const AttackOutcome& o, const mpq_class& exact, const mpq_class& approx) {
    os << "  " << std::left << std::setw(10) << name << std::right << " successes " << o.successes << "/" << o.trials;
    if (o.exhaustive) {
      os << "   probability " << o.probability;
    } else {
      os << std::scientific << std::setprecision(4) << "   estimate " << o.estimate << " [" << o.lower << ", " << o.upper
         << "]" << std::defaultfloat;
    }
    os << "   exact " << exact << "   1/p approx " << approx;
    if (!o.exhaustive) {
      os << "   within 3 SE: " << (within_three_standard_errors(o, exact.get_d()) ? "yes" : "no");
    } else {
      os << "   equal: " << (o.probability == exact ? "yes" : "no");
    }
    os << "\n";
  };
  if (targeted) row("targeted", *targeted, targeted_exact, targeted_approx);
  row("any-valid", any.any, any_exact, any_approx);
  row("any-other", any.any_other, any_other_exact, any_approx);
  return os.str();
}

std::string emit_params(int bits, std::uint64_t seed) {
  FieldSpec spec;
  spec.bits = bits;
  return params_to_text(*spec.resolve(seed));
}

}  // namespace ivote
