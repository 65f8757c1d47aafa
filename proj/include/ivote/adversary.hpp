#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "ivote/modmath.hpp"

namespace ivote {

/// Colluding-server manipulation experiments.
///
/// A cast value s (one of the valid signed ballots) is partitioned across k
/// servers. The colluders see only their own shares. Following the
/// best-strategy argument, they keep all but one of their shares fixed and
/// replace the remaining one (the pivot) with a value of their choosing.
/// The honest servers' shares stay hidden. Success is judged on the value
/// the tally would reconstruct.

enum class AttackMode { Exhaustive, MonteCarlo };

enum class ManipulationStrategy {
  /// Replace the pivot share: every value in [1, p-1] in exhaustive mode,
  /// a uniform one per trial in Monte Carlo mode.
  SweepPivot,
  /// Resubmit the original shares unchanged.
  KeepOriginal,
};

struct AttackTarget {
  enum class Kind { Value, OriginalCast, AnyValid };
  Kind kind = Kind::AnyValid;
  std::optional<FieldElement> value;

  static AttackTarget specific(FieldElement v) { return {Kind::Value, std::move(v)}; }
  static AttackTarget original() { return {Kind::OriginalCast, std::nullopt}; }
  static AttackTarget any_valid() { return {Kind::AnyValid, std::nullopt}; }
};

struct CollusionScenario {
  ParamsPtr params;
  std::size_t k = 3;
  /// 0-based server indices; 1 <= |colluders| <= k-1.
  std::vector<std::size_t> colluders;
  AttackTarget target;
  /// The m valid signed-ballot values. Cast values are drawn from here.
  std::vector<FieldElement> valid_values;
  AttackMode mode = AttackMode::Exhaustive;
  std::uint64_t trials = 0;  // Monte Carlo only
  std::uint64_t seed = 0;
  ManipulationStrategy strategy = ManipulationStrategy::SweepPivot;
  /// Worker threads for Monte Carlo; results do not depend on it.
  unsigned threads = 0;

  /// Throws ParamError (bad sizes or fields) or RegimeError (exhaustive
  /// mode with p > 2^16).
  void validate() const;
};

struct AttackOutcome {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  /// successes / trials as an exact rational.
  mpq_class probability;
  bool exhaustive = false;
  /// Monte Carlo point estimate and 3-standard-error interval.
  double estimate = 0.0;
  double std_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Exact reference values: 1/(p-1) targeted, m/(p-1) any-valid.
mpq_class exact_targeted_probability(const FieldParams& params);
mpq_class exact_any_valid_probability(const FieldParams& params, std::size_t m);

AttackOutcome attack_targeted(const CollusionScenario& scenario);

struct AnyValidOutcome {
  /// Reconstruction equals any valid value, the original cast included.
  AttackOutcome any;
  /// Reconstruction equals a valid value other than the one cast.
  AttackOutcome any_other;
};

AnyValidOutcome attack_any_valid(const CollusionScenario& scenario);

/// |estimate - reference| <= 3 * sqrt(reference * (1 - reference) / trials).
bool within_three_standard_errors(const AttackOutcome& outcome, double reference);

/// Reconstructions reached when `position` sweeps [1, p-1] with the other
/// shares held fixed.
std::set<mpz_class> sweep_image(const std::vector<FieldElement>& shares, std::size_t position);

struct EquivalenceReport {
  std::size_t k = 0;
  std::size_t i = 0;
  mpq_class full;     // k-1 colluders
  mpq_class reduced;  // k-i colluders
  bool sweep_is_bijection = false;
  bool equivalent = false;
};

/// Compares exact targeted-attack probabilities for k-1 and k-i colluders
/// and checks the sweep bijection. Requires 1 <= i <= k-2 and p <= 2^16.
EquivalenceReport collusion_equivalence(const ParamsPtr& params, std::size_t k, std::size_t i,
                                        const FieldElement& target, std::uint64_t seed);

/// `attack kind=.. p=.. k=.. colluders=a,b m=.. mode=.. successes=.. trials=.. exact=n/d
///  estimate=.. lower=.. upper=.. reference=n/d approx=n/d`
std::string outcome_record(const std::string& kind, const CollusionScenario& scenario, const AttackOutcome& outcome,
                           const mpq_class& reference, const mpq_class& approx);

}  // namespace ivote
