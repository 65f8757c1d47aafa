#include <chrono>

#include "doctest.h"
#include "ivote/harness.hpp"

using namespace ivote;
using nlohmann::json;

namespace {

ElectionConfig base_config(int bits = 64) {
  ElectionConfig c;
  c.field.bits = bits;
  c.k = 4;
  c.candidates = {"C1", "C2", "C3"};
  c.n_voters = 100;
  c.recast_fraction = 0.2;
  c.seed = 42;
  return c;
}

std::uint64_t total(const TallyResult& t) {
  std::uint64_t n = 0;
  for (auto c : t.counts) n += c;
  return n;
}

}  // namespace

TEST_CASE("election at a 64-bit field matches the intent ledger") {
  const auto t0 = std::chrono::steady_clock::now();
  const RunReport r = run_election(base_config());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.matches());
  CHECK(r.tally == r.expected);
  CHECK(r.tally.inconsistent == 0);
  CHECK(r.tally.invalid == 0);
  CHECK(r.rejected_voters == 0);
  CHECK(total(r.tally) == 100);
  CHECK(r.tally.distinct_r_ids == 100);
  CHECK(r.events == 100 + 100 + 20 + 2);
  CHECK(secs < 5.0);
}

TEST_CASE("fixture field: r_id collisions are refused and the tally still matches") {
  ElectionConfig c = base_config();
  c.field = FieldSpec{};
  c.field.explicit_params = *fixture_params();
  c.k = 3;
  const RunReport r = run_election(c);
  CHECK(r.matches());
  CHECK(r.tally.inconsistent == 0);
  // at most q distinct credentials exist
  CHECK(r.tally.distinct_r_ids <= 11);
  CHECK(r.rejected_voters >= 89);
}

TEST_CASE("recast voters are counted once under their final choice") {
  ElectionRun run(base_config());
  while (!run.done()) run.step();
  std::size_t recast = 0;
  for (const auto& v : run.ledger().voters) recast += v.casts > 1;
  CHECK(recast == 20);
  const RunReport r = run.report();
  CHECK(total(r.tally) == 100);
  CHECK(r.matches());
}

TEST_CASE("n = 0 gives an all-zero tally") {
  ElectionConfig c = base_config();
  c.n_voters = 0;
  const RunReport r = run_election(c);
  CHECK(r.matches());
  CHECK(r.tally.counts == std::vector<std::uint64_t>{0, 0, 0});
  CHECK(r.tally.inconsistent == 0);
  CHECK(r.tally.distinct_r_ids == 0);
}

TEST_CASE("incomplete casts land in inconsistent, nothing is miscounted") {
  ElectionConfig c = base_config();
  c.incomplete_cast_fraction = 0.1;
  const RunReport r = run_election(c);
  CHECK(r.matches());
  CHECK(r.tally.inconsistent == 10);
  CHECK(total(r.tally) == 90);
  CHECK(r.tally.invalid == 0);
}

TEST_CASE("zk-relay booth gives the same tally as key-copy") {
  ElectionConfig c = base_config(40);
  c.n_voters = 30;
  const RunReport a = run_election(c);
  c.booth_mode = BoothMode::ZkRelay;
  const RunReport b = run_election(c);
  CHECK(a.matches());
  CHECK(b.matches());
  CHECK(a.tally == b.tally);
  auto sum = [](const RunReport& r) {
    std::uint64_t n = 0;
    for (const auto& [phase, count] : r.phase_messages) n += count;
    return n;
  };
  CHECK(sum(b) > sum(a));
}

TEST_CASE("determinism: identical logs, snapshots and reports") {
  ElectionRun a(base_config()), b(base_config());
  a.run_until(a.schedule().size());
  b.run_until(b.schedule().size());
  CHECK(a.event_log() == b.event_log());
  CHECK(a.snapshot().dump() == b.snapshot().dump());
  CHECK(a.report().to_records() == b.report().to_records());
  CHECK(a.report().to_table() == b.report().to_table());

  ElectionConfig other = base_config();
  other.seed = 43;
  CHECK(run_election(other).to_records() != a.report().to_records());
}

TEST_CASE("snapshot and resume reproduce the uninterrupted run") {
  ElectionConfig c = base_config(48);
  c.n_voters = 40;
  c.incomplete_cast_fraction = 0.1;
  ElectionRun full(c);
  full.run_until(full.schedule().size());

  for (std::size_t t : {std::size_t{0}, std::size_t{17}, std::size_t{40}, std::size_t{63}, full.schedule().size() - 1}) {
    CAPTURE(t);
    ElectionRun part(c);
    part.run_until(t);
    const std::string text = part.snapshot().dump(2);
    ElectionRun resumed = ElectionRun::resume(json::parse(text));
    CHECK(resumed.cursor() == t);
    resumed.run_until(resumed.schedule().size());
    CHECK(resumed.report().to_records() == full.report().to_records());
    CHECK(resumed.event_log() == full.event_log());
    CHECK(resumed.snapshot().dump() == full.snapshot().dump());
  }
}

TEST_CASE("resume rejects foreign documents") {
  CHECK_THROWS_AS(ElectionRun::resume(json{{"format", "other"}}), ConfigError);
  CHECK_THROWS_AS(ElectionRun::resume(json{{"format", "ivote-snapshot-v1"}}), ConfigError);
}

TEST_CASE("report needs a finished run") {
  ElectionRun run(base_config(40));
  run.step();
  CHECK_THROWS_AS(run.report(), Error);
}

TEST_CASE("config parsing and echo") {
  const json j = json::parse(R"({
    "field": {"bits": 64}, "k": 4, "candidates": ["Ann", "Bo", "Cy"], "n_voters": 100,
    "recast_fraction": 0.2, "incomplete_cast_fraction": 0.0, "seed": 42, "booth_mode": "zk-relay"})");
  const ElectionConfig c = election_config_from_json(j);
  CHECK(c.k == 4);
  CHECK(c.booth_mode == BoothMode::ZkRelay);
  CHECK(election_config_to_json(c) == j);
  CHECK(election_config_from_json(election_config_to_json(c)) == c);

  SUBCASE("m expands to labels") {
    const auto d = election_config_from_json(json::parse(R"({"field": "fixture", "k": 3, "m": 4, "n_voters": 5})"));
    CHECK(d.candidates == std::vector<std::string>{"C1", "C2", "C3", "C4"});
    CHECK(*d.field.explicit_params == *fixture_params());
  }
  SUBCASE("explicit parameters") {
    const auto d = election_config_from_json(
        json::parse(R"({"field": {"p": "23", "q": "11", "g": "4"}, "k": 2, "m": 2, "n_voters": 0})"));
    CHECK(d.field.explicit_params->g == 4);
  }
  SUBCASE("echo appears in the records") {
    const auto rep = run_election(election_config_from_json(json::parse(
        R"({"field": {"bits": 32}, "k": 2, "candidates": ["x", "y"], "n_voters": 3, "seed": 7})")));
    const auto first = rep.to_records().substr(0, rep.to_records().find('\n'));
    CHECK(json::parse(first.substr(7)) == election_config_to_json(rep.config));
  }
}

TEST_CASE("config errors list every bad field") {
  const json j = json::parse(R"({
    "field": {"bits": 4}, "k": 1, "candidates": ["A"], "n_voters": -3,
    "recast_fraction": 1.5, "incomplete_cast_fraction": -0.1, "booth_mode": "postal", "colour": 1})");
  try {
    election_config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* field : {"field.bits", "k:", "candidates:", "n_voters:", "recast_fraction:",
                              "incomplete_cast_fraction:", "booth_mode:", "colour:"}) {
      CAPTURE(field);
      CHECK(msg.find(field) != std::string::npos);
    }
  }
  CHECK_THROWS_AS(election_config_from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(election_config_from_json(json::parse(R"({"k": 3, "m": 3, "n_voters": 1})")), ConfigError);
  CHECK_THROWS_AS(
      election_config_from_json(json::parse(R"({"field": {"p": "22", "q": "11", "g": "2"}, "k": 3, "m": 3, "n_voters": 1})")),
      ConfigError);
  CHECK_THROWS_AS(
      election_config_from_json(json::parse(R"({"field": "fixture", "k": 3, "m": 3, "candidates": ["a","b"], "n_voters": 1})")),
      ConfigError);

  ElectionConfig bad = base_config();
  bad.recast_fraction = -1;
  CHECK_THROWS_AS(ElectionRun{bad}, ConfigError);
}

TEST_CASE("emit_params") {
  CHECK_THROWS_AS(emit_params(4, 1), ParamError);
  const std::string five = emit_params(5, 99);
  CHECK(five.rfind("23\n11\n", 0) == 0);
  const FieldParams p5 = params_from_text(five);
  CHECK(in_subgroup(FieldElement(std::make_shared<const FieldParams>(p5), p5.g)));
  CHECK(emit_params(100, 7) == emit_params(100, 7));
  CHECK(emit_params(100, 7) != emit_params(100, 8));
  const FieldParams p100 = params_from_text(emit_params(100, 7));
  CHECK(mpz_sizeinbase(p100.p.get_mpz_t(), 2) == 100);
}

TEST_CASE("attack config and report") {
  const json j = json::parse(
      R"({"field": "fixture", "k": 3, "colluders": [1, 2], "m": 3, "target": 0, "mode": "exhaustive", "seed": 5})");
  const AttackReport rep = run_attack(attack_config_from_json(j));
  REQUIRE(rep.targeted);
  CHECK(rep.targeted->probability == mpq_class(1, 22));
  CHECK(rep.targeted_approx == mpq_class(1, 23));
  CHECK(rep.any.any.probability == mpq_class(3, 22));
  const std::string records = rep.to_records();
  CHECK(records.find("exact=1/22") != std::string::npos);
  CHECK(records.find("approx=1/23") != std::string::npos);
  CHECK(rep.to_table().find("equal: no") == std::string::npos);

  SUBCASE("missing colluders") {
    CHECK_THROWS_AS(attack_config_from_json(json::parse(R"({"field": "fixture", "k": 3})")), ConfigError);
  }
  SUBCASE("bad colluder index and too many colluders") {
    CHECK_THROWS_AS(attack_config_from_json(json::parse(R"({"field": "fixture", "k": 3, "colluders": [3]})")), ConfigError);
    CHECK_THROWS_AS(attack_config_from_json(json::parse(R"({"field": "fixture", "k": 3, "colluders": [0, 1, 2]})")),
                    ConfigError);
  }
  SUBCASE("montecarlo needs trials") {
    CHECK_THROWS_AS(
        attack_config_from_json(json::parse(R"({"field": "fixture", "k": 3, "colluders": [1], "mode": "montecarlo"})")),
        ConfigError);
  }
  SUBCASE("exhaustive beyond the cap is a regime error") {
    const auto c = attack_config_from_json(json::parse(R"({"field": {"bits": 40}, "k": 3, "colluders": [1, 2]})"));
    CHECK_THROWS_AS(run_attack(c), RegimeError);
  }
}
