// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "ivote/adversary.hpp"
#include "ivote/blindsig.hpp"
#include "ivote/harness.hpp"
#include "ivote/sharing.hpp"

using namespace ivote;

namespace {

using Clock = std::chrono::steady_clock;

struct Result {
  bool pass = true;
  std::string detail;
};

FieldElement fx(long v) { return FieldElement(fixture_params(), v); }

std::vector<FieldElement> subgroup() {
  std::vector<FieldElement> out;
  for (long v = 1; v < 23; ++v) {
    if (in_subgroup(fx(v))) out.push_back(fx(v));
  }
  return out;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double secs) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f s", secs);
  return buf;
}

CollusionScenario fixture_scenario(std::size_t k, std::vector<std::size_t> colluders, std::vector<FieldElement> valid,
                                   AttackTarget target) {
  CollusionScenario s;
  s.params = fixture_params();
  s.k = k;
  s.colluders = std::move(colluders);
  s.valid_values = std::move(valid);
  s.target = std::move(target);
  s.mode = AttackMode::Exhaustive;
  s.seed = 2024;
  return s;
}

ElectionConfig election_config() {
  ElectionConfig c;
  c.field.bits = 64;
  c.k = 4;
  c.candidates = {"C1", "C2", "C3"};
  c.n_voters = 100;
  c.recast_fraction = 0.2;
  c.seed = 42;
  return c;
}

Result blind_round_trip() {
  const auto t0 = Clock::now();
  const SigningKey key(fixture_params(), 3);
  const PublicKey y = key.public_key();
  int ok = 0, total = 0;
  for (const auto& m : subgroup()) {
    for (long b = 1; b <= 10; ++b) {
      const BlindingFactor bf(*fixture_params(), mpz_class(b));
      const FieldElement s = unblind(sign(blind(m, bf, y), key).sig, bf, y);
      ok += s == sign(m, key).sig;
      ++total;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == 110 && total == 110 && secs < 1.0,
          std::to_string(ok) + "/" + std::to_string(total) + " round trips, " + fmt(secs)};
}

Result sharing_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(7);
  std::uint64_t cases = 0, bad = 0, enumerated = 0;
  for (long v = 1; v <= 22; ++v) {
    for (std::size_t k = 2; k <= 6; ++k) {
      for (int rep = 0; rep < 200; ++rep) {
        bad += !(reconstruct(split(fx(v), k, rng)) == fx(v));
        ++cases;
      }
    }
    for (long a = 1; a <= 22; ++a) {
      for (long b = 1; b <= 22; ++b) {
        const std::vector<FieldElement> leading{fx(a), fx(b)};
        bad += !(reconstruct(split_with(fx(v), leading)) == fx(v));
        ++cases;
        ++enumerated;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && enumerated == 22 * 484 && secs < 5.0,
          std::to_string(cases - bad) + "/" + std::to_string(cases) + " reconstructions (484 forced choices per v at k=3), " +
              fmt(secs)};
}

Result targeted_probability() {
  const auto t0 = Clock::now();
  const auto ex = attack_targeted(fixture_scenario(3, {1, 2}, {fx(4), fx(9), fx(13)}, AttackTarget::specific(fx(9))));
  const bool exact_ok = ex.probability == mpq_class(1, 22) && ex.probability == exact_targeted_probability(*fixture_params());

  Rng prng = Rng::derive(31, "params");
  const ParamsPtr big = std::make_shared<const FieldParams>(generate_params(32, prng));
  Rng krng(5);
  const SigningKey key = SigningKey::generate(big, krng);
  const BallotSheet sheet = BallotSheet::generate({"C1", "C2", "C3"}, key, krng);
  CollusionScenario mc;
  mc.params = big;
  mc.k = 4;
  mc.colluders = {1, 2, 3};
  mc.valid_values = sheet.signed_ballots;
  mc.target = AttackTarget::specific(sheet.signed_ballots[0]);
  mc.mode = AttackMode::MonteCarlo;
  mc.trials = 1'000'000;
  mc.seed = 99;
  const auto out = attack_targeted(mc);
  const mpq_class ref = exact_targeted_probability(*big);
  const bool mc_ok = out.trials == 1'000'000 && within_three_standard_errors(out, ref.get_d());
  const double secs = seconds_since(t0);

  std::ostringstream d;
  d << "fixture exact " << ex.probability << " (1/p approx 1/23); p=" << big->p << " (~2^"
    << mpz_sizeinbase(big->p.get_mpz_t(), 2) - 1 << "): " << out.successes << "/" << out.trials << " vs 1/(p-1)="
    << ref.get_d() << ", within 3 SE: " << (mc_ok ? "yes" : "no") << ", " << fmt(secs);
  return {exact_ok && mc_ok && secs < 30.0, d.str()};
}

Result any_valid_probability() {
  const auto sg = subgroup();
  bool ok = true;
  std::ostringstream d;
  for (std::size_t m : {2u, 3u, 5u}) {
    std::vector<FieldElement> valid(sg.begin() + 1, sg.begin() + 1 + static_cast<long>(m));
    const auto out = attack_any_valid(fixture_scenario(3, {1, 2}, valid, AttackTarget::any_valid()));
    mpq_class want(static_cast<long>(m), 22);
    want.canonicalize();
    ok = ok && out.any.probability == want && exact_any_valid_probability(*fixture_params(), m) == want;
    d << "m=" << m << ": " << out.any.probability << (out.any.probability == want ? " == " : " != ") << m << "/22; ";
  }
  return {ok, d.str()};
}

Result sweep_equivalence() {
  std::set<mpz_class> image = sweep_image({fx(5), fx(7), fx(11), fx(20)}, 3);
  bool ok = image.size() == 22;
  std::ostringstream d;
  d << "sweep image " << image.size() << "/22 residues; ";
  std::vector<mpq_class> probs;
  for (const auto& colluders : std::vector<std::vector<std::size_t>>{{3}, {2, 3}, {1, 2, 3}}) {
    probs.push_back(
        attack_targeted(fixture_scenario(4, colluders, {fx(4), fx(9), fx(13)}, AttackTarget::specific(fx(13))))
            .probability);
    d << colluders.size() << " colluder(s): " << probs.back() << "; ";
  }
  ok = ok && probs[0] == probs[1] && probs[1] == probs[2];
  for (std::size_t i : {1u, 2u}) {
    const auto rep = collusion_equivalence(fixture_params(), 4, i, fx(13), 17);
    ok = ok && rep.equivalent && rep.sweep_is_bijection;
  }
  d << "equivalence report k=4, i=1,2: " << (ok ? "equal" : "differs");
  return {ok, d.str()};
}

Result hiding() {
  std::uint64_t tables = 0, mismatches = 0;
  for (std::size_t k : {2u, 3u, 4u}) {
    // every proper non-empty subset of positions
    for (unsigned mask = 1; mask + 1 < (1u << k); ++mask) {
      std::vector<std::size_t> positions;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) positions.push_back(i);
      }
      const DistributionTable ref = marginal_distribution(fx(1), k, positions);
      for (long v = 2; v <= 22; ++v) {
        mismatches += !(marginal_distribution(fx(v), k, positions) == ref);
        ++tables;
      }
    }
  }
  return {mismatches == 0, std::to_string(tables - mismatches) + "/" + std::to_string(tables) +
                               " tables equal to v=1 (k=2..4, all proper position subsets)"};
}

Result confirmation_soundness() {
  Rng rng(77);
  int genuine = 0;
  for (int i = 0; i < 100; ++i) {
    const SigningKey key = SigningKey::generate(fixture_params(), rng);
    HonestSigner signer(key, rng.split("signer"));
    const FieldElement m = sample_subgroup_element(fixture_params(), rng);
    genuine += confirm(sign(m, key), signer, key.public_key(), rng).accepted;
  }
  // fixed key x=3, message 4, genuine signature 18
  const SigningKey key(fixture_params(), 3);
  HonestSigner signer(key, Rng(3));
  std::map<long, int> accepted;
  for (long forged : {13L, 17L}) {
    for (long e1 = 0; e1 < 11; ++e1) {
      for (long e2 = 0; e2 < 11; ++e2) {
        accepted[forged] += confirm_with({fx(4), fx(forged)}, signer, key.public_key(), e1, e2).accepted;
      }
    }
  }
  std::ostringstream d;
  d << "genuine " << genuine << "/100; forged (m=4, sig=13) " << accepted[13] << "/121, (m=4, sig=17) " << accepted[17]
    << "/121, bound 11";
  return {genuine == 100 && accepted[13] <= 11 && accepted[17] <= 11, d.str()};
}

Result end_to_end() {
  const auto t0 = Clock::now();
  ElectionRun run(election_config());
  std::map<std::string, std::vector<Message>> by_rid;
  run.election().bus().set_tamper([&](Message& m) {
    if (m.type == "store_request" && m.get("version") == "1") by_rid[m.get("r_id")].push_back(m);
  });
  // stop before close so recast sessions are still live
  run.run_until(run.schedule().size() - 2);
  run.election().bus().set_tamper({});

  std::uint64_t replays = 0, rejected = 0;
  for (std::size_t i = 0; i < run.ledger().voters.size(); ++i) {
    if (run.ledger().voters[i].casts < 2) continue;
    const Voter& voter = run.election().voter(i);
    for (Message m : by_rid.at(to_dec(voter.credential()->r_id))) {
      m.set("token", voter.token()->token);
      const Message reply = run.election().bus().call(m);
      ++replays;
      rejected += reply.type == "error" && reply.get("code") == "version_replay";
    }
  }
  run.run_until(run.schedule().size());
  const RunReport rep = run.report();
  const double secs = seconds_since(t0);

  std::uint64_t recast = 0, counted = 0;
  for (const auto& v : run.ledger().voters) recast += v.casts > 1;
  for (auto c : rep.tally.counts) counted += c;
  const bool ok = rep.matches() && rep.tally.inconsistent == 0 && rep.tally.invalid == 0 && counted == 100 &&
                  rep.tally.distinct_r_ids == 100 && recast == 20 && replays == 20 * 4 && rejected == replays &&
                  secs < 5.0;
  std::ostringstream d;
  d << "tally";
  for (std::size_t j = 0; j < rep.tally.counts.size(); ++j) d << " " << rep.tally.counts[j] << "/" << rep.expected.counts[j];
  d << " (tallied/intended), " << recast << " recast voters counted once, " << rejected << "/" << replays
    << " version-1 replays rejected, " << fmt(secs);
  return {ok, d.str()};
}

Result determinism() {
  auto once = [] {
    ElectionRun run(election_config());
    run.run_until(run.schedule().size());
    const RunReport rep = run.report();
    return std::tuple{run.event_log(), rep.to_records(), rep.to_table(), run.snapshot().dump()};
  };
  const auto a = once();
  const auto b = once();
  const bool ok = a == b;
  return {ok, "event log " + std::to_string(std::get<0>(a).size()) + " bytes, report " +
                  std::to_string(std::get<1>(a).size()) + " bytes: " + (ok ? "identical" : "differ")};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"blind-signature round trip", blind_round_trip},
      {"sharing round trip", sharing_round_trip},
      {"targeted attack probability", targeted_probability},
      {"any-valid attack probability", any_valid_probability},
      {"sweep and colluder-count equivalence", sweep_equivalence},
      {"hiding", hiding},
      {"confirmation soundness", confirmation_soundness},
      {"end-to-end election", end_to_end},
      {"determinism", determinism},
  };
  std::vector<bool> passed;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    passed.push_back(r.pass);
    failures += !r.pass;
    std::cout << "criterion " << (i + 1) << ": " << (r.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << " -- "
              << r.detail << std::endl;
  }
  // The 2^-100 headline bound is not checkable directly; it is replaced by the
  // exact small-field equalities (3-5) and the large-p Monte Carlo check (3).
  const bool sub = passed[2] && passed[3] && passed[4];
  failures += !sub;
  std::cout << "criterion 10: " << (sub ? "PASS" : "FAIL")
            << "  2^-100 headline bound substituted -- not reproducible as stated; covered by criteria 3-5 "
            << (sub ? "(all pass)" : "(not all pass)") << std::endl;
  return failures == 0 ? 0 : 1;
}
