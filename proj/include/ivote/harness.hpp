#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivote/adversary.hpp"
#include "ivote/protocol.hpp"

namespace ivote {

/// Field selection: a generated safe-prime field of `bits` bits, or explicit
/// parameters. The generated field is derived from the run seed.
struct FieldSpec {
  std::optional<int> bits;
  std::optional<FieldParams> explicit_params;

  ParamsPtr resolve(std::uint64_t seed) const;
  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

struct ElectionConfig {
  FieldSpec field;
  std::size_t k = 3;
  std::vector<std::string> candidates;
  std::size_t n_voters = 0;
  double recast_fraction = 0.0;
  double incomplete_cast_fraction = 0.0;
  std::uint64_t seed = 0;
  BoothMode booth_mode = BoothMode::KeyCopy;

  friend bool operator==(const ElectionConfig&, const ElectionConfig&) = default;
};

/// Parses the JSON config format (see README). Collects every field-level
/// problem and throws one ConfigError listing them.
ElectionConfig election_config_from_json(const nlohmann::json& j);
nlohmann::json election_config_to_json(const ElectionConfig& c);
void validate(const ElectionConfig& c);

/// What the harness intended each voter to do, independent of what the
/// servers recorded.
struct IntentLedger {
  struct Entry {
    bool registered = false;
    bool rejected = false;  // registration or authentication refused
    std::optional<std::size_t> latest;
    bool latest_complete = false;
    std::uint64_t casts = 0;
  };
  std::vector<Entry> voters;

  /// The tally an honest run must produce.
  TallyResult expected(std::size_t m) const;
  nlohmann::json to_json() const;
  static IntentLedger from_json(const nlohmann::json& j);
};

struct ScheduledEvent {
  enum class Kind { Register, Cast, Close, Tally };
  Kind kind = Kind::Register;
  std::size_t voter = 0;
  std::size_t candidate = 0;
  /// For a truncated cast: the session is revoked right after server
  /// `cutoff` was contacted, so servers 0..cutoff receive shares.
  std::optional<std::size_t> cutoff;

  std::string describe() const;
};

struct RunReport {
  ElectionConfig config;
  FieldParams field;
  TallyResult tally;
  TallyResult expected;
  std::vector<std::string> diff;  // empty when tally matches the ledger
  std::map<std::string, std::uint64_t> phase_messages;
  std::uint64_t events = 0;
  std::uint64_t rejected_voters = 0;
  std::uint64_t warnings = 0;

  bool matches() const { return diff.empty(); }
  std::string to_records() const;
  std::string to_table() const;
};

/// A seeded election simulation that can be stepped, snapshotted and resumed.
class ElectionRun {
 public:
  explicit ElectionRun(ElectionConfig config);

  bool done() const { return cursor_ >= schedule_.size(); }
  std::size_t cursor() const { return cursor_; }
  const std::vector<ScheduledEvent>& schedule() const { return schedule_; }
  /// Processes the next scheduled event.
  void step();
  /// Steps until done or `limit` events have been processed in total.
  void run_until(std::size_t limit);
  RunReport report() const;

  const Election& election() const { return *election_; }
  Election& election() { return *election_; }
  const IntentLedger& ledger() const { return ledger_; }
  std::string event_log() const;

  nlohmann::json snapshot() const;
  static ElectionRun resume(const nlohmann::json& snapshot);

 private:
  ElectionRun() = default;
  void build_schedule();

  ElectionConfig config_;
  std::unique_ptr<Election> election_;
  std::vector<ScheduledEvent> schedule_;
  std::size_t cursor_ = 0;
  IntentLedger ledger_;
  std::optional<TallyResult> tally_;
};

/// Runs a whole election from a config.
RunReport run_election(const ElectionConfig& config);

struct AttackConfig {
  FieldSpec field;
  std::size_t k = 3;
  std::vector<std::size_t> colluders;
  std::size_t m = 3;
  /// "any", "original" or a 0-based candidate index.
  std::string target = "any";
  AttackMode mode = AttackMode::Exhaustive;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  ManipulationStrategy strategy = ManipulationStrategy::SweepPivot;
  unsigned threads = 0;
};

AttackConfig attack_config_from_json(const nlohmann::json& j);

struct AttackReport {
  CollusionScenario scenario;
  std::optional<AttackOutcome> targeted;
  AnyValidOutcome any;
  mpq_class targeted_exact;
  mpq_class targeted_approx;
  mpq_class any_exact;
  mpq_class any_other_exact;
  mpq_class any_approx;

  std::string to_records() const;
  std::string to_table() const;
};

AttackReport run_attack(const AttackConfig& config);

/// Canonical parameter file for `bits` derived from `seed`.
std::string emit_params(int bits, std::uint64_t seed);

}  // namespace ivote
