#include "doctest.h"
#include "ivote/adversary.hpp"
#include "ivote/blindsig.hpp"
#include "ivote/errors.hpp"

using namespace ivote;

namespace {

FieldElement fx(long v) { return FieldElement(fixture_params(), v); }

mpq_class q(long n, long d) {
  mpq_class r(n, d);
  r.canonicalize();
  return r;
}

// Signed ballots under x = 3 for ballots 4, 9, 13 (4^3 = 18, 9^3 = 16, 13^3 = 12).
std::vector<FieldElement> signed_ballots(std::size_t m) {
  const std::vector<long> all = {18, 16, 12, 6, 3};
  std::vector<FieldElement> out;
  for (std::size_t j = 0; j < m; ++j) out.push_back(fx(all[j]));
  return out;
}

CollusionScenario fixture_scenario(std::size_t k, std::vector<std::size_t> colluders, std::size_t m = 3) {
  CollusionScenario s;
  s.params = fixture_params();
  s.k = k;
  s.colluders = std::move(colluders);
  s.valid_values = signed_ballots(m);
  s.target = AttackTarget::specific(fx(16));
  s.seed = 42;
  return s;
}

std::vector<std::vector<std::size_t>> subsets_up_to(std::size_t k, std::size_t max_size) {
  std::vector<std::vector<std::size_t>> out;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) s.push_back(i);
    }
    if (s.size() <= max_size) out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("the signed-ballot fixture matches x = 3") {
  const SigningKey key(fixture_params(), 3);
  CHECK(sign(fx(4), key).sig.value() == 18);
  CHECK(sign(fx(9), key).sig.value() == 16);
  CHECK(sign(fx(13), key).sig.value() == 12);
}

TEST_CASE("targeted attack at the fixture is exactly 1/22") {
  const auto out = attack_targeted(fixture_scenario(3, {1, 2}));
  CHECK(out.exhaustive);
  CHECK(out.probability == q(1, 22));
  CHECK(out.probability == exact_targeted_probability(*fixture_params()));
  CHECK(out.trials == 3u * 22u * 22u);
}

TEST_CASE("targeted attack is 1/(p-1) for every k, colluder subset and target") {
  for (std::size_t k = 2; k <= 5; ++k) {
    for (const auto& colluders : subsets_up_to(k, k - 1)) {
      for (long target = 1; target < 23; ++target) {
        auto s = fixture_scenario(k, colluders);
        s.target = AttackTarget::specific(fx(target));
        CAPTURE(k);
        CAPTURE(target);
        CHECK(attack_targeted(s).probability == q(1, 22));
      }
    }
  }
}

TEST_CASE("keeping the original shares always reproduces the cast value") {
  auto s = fixture_scenario(3, {0, 1});
  s.strategy = ManipulationStrategy::KeepOriginal;
  s.target = AttackTarget::original();
  CHECK(attack_targeted(s).probability == 1);
}

TEST_CASE("any-valid attack is exactly m/(p-1)") {
  for (std::size_t m : {2u, 3u, 5u}) {
    for (std::size_t k = 2; k <= 4; ++k) {
      auto s = fixture_scenario(k, {k - 1}, m);
      s.target = AttackTarget::any_valid();
      const auto out = attack_any_valid(s);
      CHECK(out.any.probability == q(static_cast<long>(m), 22));
      CHECK(out.any.probability == exact_any_valid_probability(*fixture_params(), m));
      CHECK(out.any_other.probability == q(static_cast<long>(m) - 1, 22));
    }
  }
}

TEST_CASE("any-valid attack saturates when every nonzero value is valid") {
  auto s = fixture_scenario(3, {0, 1});
  s.valid_values.clear();
  for (long v = 1; v < 23; ++v) s.valid_values.push_back(fx(v));
  s.target = AttackTarget::any_valid();
  CHECK(attack_any_valid(s).any.probability == 1);
}

TEST_CASE("probability does not depend on the number of colluders") {
  for (std::size_t k = 3; k <= 5; ++k) {
    for (std::size_t i = 1; i <= k - 2; ++i) {
      const auto r = collusion_equivalence(fixture_params(), k, i, fx(16), 7);
      CHECK(r.equivalent);
      CHECK(r.full == q(1, 22));
      CHECK(r.reduced == q(1, 22));
      CHECK(r.sweep_is_bijection);
    }
  }
}

TEST_CASE("collusion_equivalence bounds") {
  CHECK_THROWS_AS(collusion_equivalence(fixture_params(), 4, 3, fx(16), 1), ParamError);  // zero colluders
  CHECK_THROWS_AS(collusion_equivalence(fixture_params(), 4, 0, fx(16), 1), ParamError);
  Rng rng(1);
  const auto big = std::make_shared<const FieldParams>(generate_params(24, rng));
  CHECK_THROWS_AS(collusion_equivalence(big, 4, 1, FieldElement(big, 4), 1), RegimeError);
}

TEST_CASE("sweep image is every nonzero residue") {
  const auto image = sweep_image({fx(3), fx(7), fx(11)}, 1);
  CHECK(image.size() == 22);
  CHECK_FALSE(image.count(mpz_class(0)));
}

TEST_CASE("scenario validation") {
  auto all = fixture_scenario(3, {0, 1, 2});
  CHECK_THROWS_AS(attack_targeted(all), ParamError);
  auto none = fixture_scenario(3, {});
  CHECK_THROWS_AS(attack_targeted(none), ParamError);
  auto dup = fixture_scenario(3, {1, 1});
  CHECK_THROWS_AS(attack_targeted(dup), ParamError);
  auto range = fixture_scenario(3, {3});
  CHECK_THROWS_AS(attack_targeted(range), ParamError);
  auto any = fixture_scenario(3, {1});
  any.target = AttackTarget::any_valid();
  CHECK_THROWS_AS(attack_targeted(any), ParamError);
  auto mc = fixture_scenario(3, {1});
  mc.mode = AttackMode::MonteCarlo;
  CHECK_THROWS_AS(attack_targeted(mc), ParamError);  // trials = 0
}

TEST_CASE("Monte Carlo at the fixture converges to the exact values") {
  auto s = fixture_scenario(3, {1, 2});
  s.mode = AttackMode::MonteCarlo;
  s.trials = 200000;
  const auto targeted = attack_targeted(s);
  CHECK(within_three_standard_errors(targeted, 1.0 / 22.0));
  CHECK(targeted.lower <= 1.0 / 22.0);
  CHECK(targeted.upper >= 1.0 / 22.0);

  s.target = AttackTarget::any_valid();
  const auto any = attack_any_valid(s);
  CHECK(within_three_standard_errors(any.any, 3.0 / 22.0));
  CHECK(within_three_standard_errors(any.any_other, 2.0 / 22.0));
}

TEST_CASE("Monte Carlo results do not depend on the thread count") {
  auto s = fixture_scenario(4, {0, 2});
  s.mode = AttackMode::MonteCarlo;
  s.trials = 300000;
  s.threads = 1;
  const auto one = attack_targeted(s);
  s.threads = 5;
  const auto five = attack_targeted(s);
  CHECK(one.successes == five.successes);
  CHECK(one.trials == five.trials);
}

TEST_CASE("exhaustive mode refuses large fields") {
  Rng rng(9);
  const auto big = std::make_shared<const FieldParams>(generate_params(31, rng));
  CollusionScenario s;
  s.params = big;
  s.k = 3;
  s.colluders = {0, 1};
  s.valid_values = {FieldElement(big, 4)};
  s.target = AttackTarget::specific(FieldElement(big, 4));
  CHECK_THROWS_AS(attack_targeted(s), RegimeError);
}

TEST_CASE("outcome record") {
  const auto s = fixture_scenario(3, {1, 2});
  const auto out = attack_targeted(s);
  CHECK(outcome_record("targeted", s, out, q(1, 22), q(1, 23)) ==
        "attack kind=targeted p=23 k=3 colluders=1,2 m=3 mode=exhaustive successes=66 trials=1452 exact=1/22 "
        "reference=1/22 approx=1/23");
}
