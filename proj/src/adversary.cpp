#include "ivote/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "ivote/errors.hpp"
#include "ivote/rng.hpp"
#include "ivote/sharing.hpp"

namespace ivote {

namespace {

constexpr std::uint64_t kChunkTrials = 1u << 16;

struct Counts {
  std::uint64_t trials = 0;
  std::uint64_t targeted = 0;
  std::uint64_t any = 0;
  std::uint64_t any_other = 0;

  Counts& operator+=(const Counts& o) {
    trials += o.trials;
    targeted += o.targeted;
    any += o.any;
    any_other += o.any_other;
    return *this;
  }
};

class Judge {
 public:
  explicit Judge(const CollusionScenario& s) : scenario_(s) {
    for (const auto& v : s.valid_values) valid_.insert(v.value());
  }

  void record(Counts& c, const FieldElement& reconstructed, const FieldElement& cast) const {
    ++c.trials;
    const auto& t = scenario_.target;
    if (t.kind == AttackTarget::Kind::Value && reconstructed == *t.value) ++c.targeted;
    if (t.kind == AttackTarget::Kind::OriginalCast && reconstructed == cast) ++c.targeted;
    if (valid_.count(reconstructed.value())) {
      ++c.any;
      if (!(reconstructed == cast)) ++c.any_other;
    }
  }

 private:
  const CollusionScenario& scenario_;
  std::set<mpz_class> valid_;
};

std::size_t pivot_of(const CollusionScenario& s) {
  return *std::max_element(s.colluders.begin(), s.colluders.end());
}

std::size_t hidden_of(const CollusionScenario& s) {
  for (std::size_t i = 0; i < s.k; ++i) {
    if (std::find(s.colluders.begin(), s.colluders.end(), i) == s.colluders.end()) return i;
  }
  throw ParamError("scenario has no honest server");
}

Counts run_exhaustive(const CollusionScenario& s) {
  const Judge judge(s);
  const auto& params = s.params;
  const std::size_t pivot = pivot_of(s);
  const std::size_t hidden = hidden_of(s);
  const unsigned long n = params->p.get_ui() - 1;

  Counts c;
  for (const auto& cast : s.valid_values) {
    // Every share other than the hidden honest one and the pivot is fixed
    // by a seeded draw; the hidden share is enumerated and the pivot forced.
    Rng rng = Rng::derive(s.seed, "exhaustive/" + cast.str());
    std::vector<FieldElement> shares(s.k, FieldElement(params, 1));
    for (std::size_t i = 0; i < s.k; ++i) {
      if (i != pivot && i != hidden) shares[i] = FieldElement(params, rng.between(1, params->p - 1));
    }
    for (unsigned long h = 1; h <= n; ++h) {
      shares[hidden] = FieldElement(params, mpz_class(h));
      shares[pivot] = FieldElement(params, 1);
      const FieldElement others = reconstruct(shares);
      shares[pivot] = cast * mod_inv(others);

      if (s.strategy == ManipulationStrategy::KeepOriginal) {
        judge.record(c, reconstruct(shares), cast);
        continue;
      }
      for (unsigned long r = 1; r <= n; ++r) {
        judge.record(c, others * FieldElement(params, mpz_class(r)), cast);
      }
    }
  }
  return c;
}

Counts run_chunk(const CollusionScenario& s, std::uint64_t chunk, std::uint64_t trials) {
  const Judge judge(s);
  const auto& params = s.params;
  const std::size_t pivot = pivot_of(s);
  Rng rng = Rng::derive(s.seed, "montecarlo/" + std::to_string(chunk));
  Counts c;
  std::vector<FieldElement> shares;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const FieldElement& cast = s.valid_values[rng.below(s.valid_values.size())];
    ShareSet original = split(cast, s.k, rng);
    shares = original.shares();
    if (s.strategy == ManipulationStrategy::SweepPivot) {
      shares[pivot] = FieldElement(params, rng.between(1, params->p - 1));
    }
    judge.record(c, reconstruct(shares), cast);
  }
  return c;
}

Counts run_monte_carlo(const CollusionScenario& s) {
  const std::uint64_t chunks = (s.trials + kChunkTrials - 1) / kChunkTrials;
  unsigned threads = s.threads ? s.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(chunks, 1)));

  // Chunk i always uses the stream derived from (seed, i), so the merged
  // counts are independent of how chunks are assigned to workers.
  auto worker = [&](unsigned id) {
    Counts c;
    for (std::uint64_t chunk = id; chunk < chunks; chunk += threads) {
      const std::uint64_t begin = chunk * kChunkTrials;
      c += run_chunk(s, chunk, std::min(kChunkTrials, s.trials - begin));
    }
    return c;
  };
  std::vector<std::future<Counts>> futures;
  for (unsigned id = 1; id < threads; ++id) futures.push_back(std::async(std::launch::async, worker, id));
  Counts total = worker(0);
  for (auto& f : futures) total += f.get();
  return total;
}

AttackOutcome make_outcome(std::uint64_t successes, std::uint64_t trials, bool exhaustive) {
  AttackOutcome o;
  o.successes = successes;
  o.trials = trials;
  o.exhaustive = exhaustive;
  o.probability = mpq_class(mpz_class(static_cast<unsigned long>(successes)),
                            mpz_class(static_cast<unsigned long>(trials)));
  o.probability.canonicalize();
  o.estimate = static_cast<double>(successes) / static_cast<double>(trials);
  o.std_error = std::sqrt(o.estimate * (1.0 - o.estimate) / static_cast<double>(trials));
  o.lower = std::max(0.0, o.estimate - 3.0 * o.std_error);
  o.upper = std::min(1.0, o.estimate + 3.0 * o.std_error);
  return o;
}

Counts run(const CollusionScenario& s) {
  s.validate();
  return s.mode == AttackMode::Exhaustive ? run_exhaustive(s) : run_monte_carlo(s);
}

}  // namespace

void CollusionScenario::validate() const {
  if (!params) throw ParamError("scenario: missing field parameters");
  if (k < 2) throw ParamError("scenario: k must be at least 2");
  if (colluders.empty()) throw ParamError("scenario: at least one colluding server is required");
  std::set<std::size_t> unique(colluders.begin(), colluders.end());
  if (unique.size() != colluders.size()) throw ParamError("scenario: duplicate colluder index");
  if (*unique.rbegin() >= k) throw ParamError("scenario: colluder index out of range");
  if (colluders.size() > k - 1) {
    throw ParamError("scenario: all k servers collude; at least one honest server is required");
  }
  if (valid_values.empty()) throw ParamError("scenario: no valid ballot values");
  for (const auto& v : valid_values) {
    if (!v.same_field(FieldElement(params, 0))) throw ParamError("scenario: valid value from another field");
    if (v.is_zero()) throw DomainError("scenario: valid values must be nonzero");
  }
  if (target.kind == AttackTarget::Kind::Value) {
    if (!target.value) throw ParamError("scenario: target value missing");
    if (!target.value->same_field(FieldElement(params, 0))) throw ParamError("scenario: target from another field");
  }
  if (mode == AttackMode::Exhaustive) {
    if (params->p > kExhaustiveMaxP) throw RegimeError("scenario: exhaustive mode needs p <= 2^16");
  } else if (trials == 0) {
    throw ParamError("scenario: Monte Carlo mode needs trials > 0");
  }
}

mpq_class exact_targeted_probability(const FieldParams& params) {
  mpq_class r(mpz_class(1), mpz_class(params.p - 1));
  r.canonicalize();
  return r;
}

mpq_class exact_any_valid_probability(const FieldParams& params, std::size_t m) {
  mpq_class r(mpz_class(static_cast<unsigned long>(m)), mpz_class(params.p - 1));
  r.canonicalize();
  return r;
}

AttackOutcome attack_targeted(const CollusionScenario& scenario) {
  if (scenario.target.kind == AttackTarget::Kind::AnyValid) {
    throw ParamError("attack_targeted: scenario needs a specific target");
  }
  const Counts c = run(scenario);
  return make_outcome(c.targeted, c.trials, scenario.mode == AttackMode::Exhaustive);
}

AnyValidOutcome attack_any_valid(const CollusionScenario& scenario) {
  const Counts c = run(scenario);
  const bool exhaustive = scenario.mode == AttackMode::Exhaustive;
  return AnyValidOutcome{make_outcome(c.any, c.trials, exhaustive), make_outcome(c.any_other, c.trials, exhaustive)};
}

bool within_three_standard_errors(const AttackOutcome& outcome, double reference) {
  const double se = std::sqrt(reference * (1.0 - reference) / static_cast<double>(outcome.trials));
  return std::abs(outcome.estimate - reference) <= 3.0 * se;
}

std::set<mpz_class> sweep_image(const std::vector<FieldElement>& shares, std::size_t position) {
  if (position >= shares.size()) throw ParamError("sweep_image: position out of range");
  const auto& params = shares.front().params_ptr();
  if (params->p > kExhaustiveMaxP) throw RegimeError("sweep_image: p exceeds 2^16");
  std::vector<FieldElement> work = shares;
  std::set<mpz_class> image;
  for (unsigned long r = 1; r < params->p.get_ui(); ++r) {
    work[position] = FieldElement(params, mpz_class(r));
    image.insert(reconstruct(work).value());
  }
  return image;
}

EquivalenceReport collusion_equivalence(const ParamsPtr& params, std::size_t k, std::size_t i,
                                        const FieldElement& target, std::uint64_t seed) {
  if (k < 3 || i < 1 || i > k - 2) throw ParamError("collusion_equivalence: need 1 <= i <= k-2");
  if (params->p > kExhaustiveMaxP) throw RegimeError("collusion_equivalence: p exceeds 2^16");

  auto probability = [&](std::size_t colluding) {
    CollusionScenario s;
    s.params = params;
    s.k = k;
    for (std::size_t c = 0; c < colluding; ++c) s.colluders.push_back(c);
    s.target = AttackTarget::specific(target);
    s.valid_values = {target};
    s.seed = seed;
    return attack_targeted(s).probability;
  };

  EquivalenceReport r;
  r.k = k;
  r.i = i;
  r.full = probability(k - 1);
  r.reduced = probability(k - i);

  Rng rng = Rng::derive(seed, "sweep");
  ShareSet shares = split(target, k, rng);
  const auto image = sweep_image(shares.shares(), k - 1);
  r.sweep_is_bijection = image.size() == params->p.get_ui() - 1 && !image.count(mpz_class(0));
  r.equivalent = r.full == r.reduced && r.sweep_is_bijection;
  return r;
}

std::string outcome_record(const std::string& kind, const CollusionScenario& scenario, const AttackOutcome& outcome,
                           const mpq_class& reference, const mpq_class& approx) {
  std::ostringstream os;
  os << "attack kind=" << kind << " p=" << scenario.params->p << " k=" << scenario.k << " colluders=";
  for (std::size_t i = 0; i < scenario.colluders.size(); ++i) os << (i ? "," : "") << scenario.colluders[i];
  os << " m=" << scenario.valid_values.size()
     << " mode=" << (outcome.exhaustive ? "exhaustive" : "montecarlo") << " successes=" << outcome.successes
     << " trials=" << outcome.trials;
  if (outcome.exhaustive) {
    os << " exact=" << outcome.probability;
  } else {
    os.precision(6);
    os << std::scientific << " estimate=" << outcome.estimate << " lower=" << outcome.lower
       << " upper=" << outcome.upper;
  }
  os << " reference=" << reference << " approx=" << approx;
  return os.str();
}

}  // namespace ivote
