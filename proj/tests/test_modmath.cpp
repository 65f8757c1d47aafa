#include <set>

#include "doctest.h"
#include "ivote/errors.hpp"
#include "ivote/modmath.hpp"

using namespace ivote;

namespace {

// Oracle: repeated multiplication with native integers.
unsigned long naive_pow(unsigned long base, unsigned long exp, unsigned long p) {
  unsigned long out = 1 % p;
  for (unsigned long i = 0; i < exp; ++i) out = (out * base) % p;
  return out;
}

bool naive_prime(unsigned long n) {
  if (n < 2) return false;
  for (unsigned long d = 2; d < n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

FieldElement fx(long v) { return FieldElement(fixture_params(), v); }

}  // namespace

TEST_CASE("mod_exp examples") {
  CHECK(mod_exp(fx(2), 11).value() == 1);
  CHECK(mod_exp(fx(5), 0).value() == 1);
  CHECK(mod_exp(fx(4), 3).value() == 18);
}

TEST_CASE("mod_exp agrees with the naive loop for base < 23, exp < 50") {
  for (unsigned long base = 0; base < 23; ++base) {
    for (unsigned long exp = 0; exp < 50; ++exp) {
      CHECK(mod_exp(fx(static_cast<long>(base)), exp).value() == naive_pow(base, exp, 23));
    }
  }
}

TEST_CASE("mod_inv examples and errors") {
  CHECK(mod_inv(fx(8)).value() == 3);
  CHECK(mod_inv(fx(1)).value() == 1);
  CHECK_THROWS_AS(mod_inv(fx(0)), NoInverseError);
}

TEST_CASE("mod_inv is a two-sided inverse for every nonzero element at p = 23") {
  for (long a = 1; a < 23; ++a) CHECK((mod_inv(fx(a)) * fx(a)).value() == 1);
}

TEST_CASE("mod_inv randomized at a large field") {
  Rng rng(7);
  const auto params = std::make_shared<const FieldParams>(generate_params(100, rng));
  for (int i = 0; i < 200; ++i) {
    FieldElement a(params, rng.between(1, params->p - 1));
    CHECK((mod_inv(a) * a).value() == 1);
  }
}

TEST_CASE("elements of different fields do not mix") {
  Rng rng(3);
  const auto other = make_params(mpz_class(47), mpz_class(23), mpz_class(2));
  FieldElement a(other, 5);
  CHECK_THROWS_AS(a * fx(5), ParamError);
  // Value-equal parameter sets are the same field.
  const auto copy = std::make_shared<const FieldParams>(*fixture_params());
  CHECK((FieldElement(copy, 3) * fx(4)).value() == 12);
}

TEST_CASE("field parameter validation") {
  CHECK_NOTHROW(fixture_params()->validate());
  CHECK_THROWS_AS(make_params(mpz_class(11), mpz_class(5), mpz_class(3)), ParamError);   // below floor
  CHECK_THROWS_AS(make_params(mpz_class(23), mpz_class(11), mpz_class(5)), ParamError);  // 5 is a non-residue
  CHECK_THROWS_AS(make_params(mpz_class(23), mpz_class(11), mpz_class(1)), ParamError);
  CHECK_THROWS_AS(make_params(mpz_class(29), mpz_class(14), mpz_class(2)), ParamError);  // q composite
}

TEST_CASE("is_probable_prime matches trial division below 5000") {
  for (unsigned long n = 0; n < 5000; ++n) CHECK(is_probable_prime(mpz_class(n)) == naive_prime(n));
  // Large cases beyond the trial-division cutoff.
  CHECK(is_probable_prime(mpz_class("2305843009213693951")));  // 2^61 - 1
  CHECK_FALSE(is_probable_prime(mpz_class("2305843009213693953")));
  CHECK_FALSE(is_probable_prime(mpz_class("3215031751")));  // strong pseudoprime to bases 2, 3, 5, 7
}

TEST_CASE("generate_params at 5 bits returns the fixture field") {
  // Oracle: enumerate 5-bit p with p and (p-1)/2 prime.
  std::set<unsigned long> safe;
  for (unsigned long p = 16; p < 32; ++p) {
    if (naive_prime(p) && naive_prime((p - 1) / 2)) safe.insert(p);
  }
  REQUIRE(safe == std::set<unsigned long>{23});

  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 999ULL}) {
    Rng rng(seed);
    const FieldParams params = generate_params(5, rng);
    CHECK(params == *fixture_params());
  }
}

TEST_CASE("generate_params rejects bit lengths below 5") {
  Rng rng(1);
  CHECK_THROWS_AS(generate_params(4, rng), ParamError);
  CHECK_THROWS_AS(generate_params(0, rng), ParamError);
}

TEST_CASE("generate_params at 100 bits") {
  Rng rng(2024);
  const FieldParams params = generate_params(100, rng);
  CHECK(params.p >= (mpz_class(1) << 99));
  CHECK(params.p < (mpz_class(1) << 100));
  CHECK(params.p == 2 * params.q + 1);
  CHECK_NOTHROW(params.validate());
}

TEST_CASE("generate_params is reproducible") {
  for (int bits : {5, 16, 32, 64}) {
    Rng a(99), b(99);
    CHECK(generate_params(bits, a) == generate_params(bits, b));
  }
}

TEST_CASE("sample_subgroup_element") {
  CHECK(square(fx(5)).value() == 2);

  // Exhaustive image of u -> u^2 equals the quadratic residues mod 23.
  std::set<long> image;
  for (long u = 1; u < 23; ++u) image.insert(square(fx(u)).value().get_si());
  CHECK(image == std::set<long>{1, 2, 3, 4, 6, 8, 9, 12, 13, 16, 18});

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    FieldElement r = sample_subgroup_element(fixture_params(), rng);
    CHECK(in_subgroup(r));
    CHECK(r.value() != 0);
    CHECK(r.value() != 22);
  }
}

TEST_CASE("in_subgroup examples") {
  CHECK(in_subgroup(fx(2)));
  CHECK_FALSE(in_subgroup(fx(5)));
  CHECK(mod_exp(fx(5), 11).value() == 22);
  CHECK_FALSE(in_subgroup(fx(0)));
}

TEST_CASE("subgroup closure at p = 23") {
  for (long a = 1; a < 23; ++a) {
    if (!in_subgroup(fx(a))) continue;
    CHECK(in_subgroup(mod_inv(fx(a))));
    for (long b = 1; b < 23; ++b) {
      if (in_subgroup(fx(b))) CHECK(in_subgroup(fx(a) * fx(b)));
    }
  }
}

TEST_CASE("params text form") {
  CHECK(params_to_text(*fixture_params()) == "23\n11\n2\n");
  CHECK(params_from_text("23\n11\n2\n") == *fixture_params());
  CHECK_THROWS_AS(params_from_text("23\n11\n"), ParamError);
  CHECK_THROWS_AS(params_from_text("23\neleven\n2\n"), ParamError);
  CHECK_THROWS_AS(params_from_text("23\n11\n5\n"), ParamError);
}
