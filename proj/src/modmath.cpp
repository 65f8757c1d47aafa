#include "ivote/modmath.hpp"

#include <array>
#include <ostream>
#include <sstream>
#include <vector>

#include "ivote/errors.hpp"

namespace ivote {

namespace {

constexpr unsigned long kTrialDivisionLimit = 1000000;

const std::vector<unsigned long>& small_primes() {
  static const std::vector<unsigned long> primes = [] {
    constexpr unsigned long kSieve = 2000;
    std::vector<bool> composite(kSieve, false);
    std::vector<unsigned long> out;
    for (unsigned long i = 2; i < kSieve; ++i) {
      if (composite[i]) continue;
      out.push_back(i);
      for (unsigned long j = i * i; j < kSieve; j += i) composite[j] = true;
    }
    return out;
  }();
  return primes;
}

bool trial_division(unsigned long n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (unsigned long d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

}  // namespace

void FieldParams::validate() const {
  if (p < 23) throw ParamError("field: p must be at least 23, got " + p.get_str());
  if (p != 2 * q + 1) throw ParamError("field: p must equal 2q + 1");
  if (!is_probable_prime(q)) throw ParamError("field: q = " + q.get_str() + " is not prime");
  if (!is_probable_prime(p)) throw ParamError("field: p = " + p.get_str() + " is not prime");
  if (g <= 1 || g >= p) throw ParamError("field: g must lie in [2, p)");
  if (powm(g, q, p) != 1) throw ParamError("field: g does not generate the order-q subgroup");
}

ParamsPtr fixture_params() {
  static const ParamsPtr fixture =
      std::make_shared<const FieldParams>(FieldParams{mpz_class(23), mpz_class(11), mpz_class(2)});
  return fixture;
}

ParamsPtr make_params(const mpz_class& p, const mpz_class& q, const mpz_class& g) {
  FieldParams params{p, q, g};
  params.validate();
  if (params == *fixture_params()) return fixture_params();
  return std::make_shared<const FieldParams>(std::move(params));
}

FieldElement::FieldElement(ParamsPtr params, const mpz_class& value) : params_(std::move(params)) {
  if (!params_) throw ParamError("FieldElement: null parameters");
  mpz_mod(value_.get_mpz_t(), value.get_mpz_t(), params_->p.get_mpz_t());
}

const FieldParams& FieldElement::params() const {
  if (!params_) throw ParamError("FieldElement: element is not bound to a field");
  return *params_;
}

bool FieldElement::same_field(const FieldElement& other) const {
  if (params_ == other.params_) return true;
  if (!params_ || !other.params_) return false;
  return *params_ == *other.params_;
}

void require_same_field(const FieldElement& a, const FieldElement& b) {
  if (!a.same_field(b)) throw ParamError("field elements belong to different parameter sets");
}

FieldElement FieldElement::operator*(const FieldElement& rhs) const {
  FieldElement out = *this;
  out *= rhs;
  return out;
}

FieldElement& FieldElement::operator*=(const FieldElement& rhs) {
  require_same_field(*this, rhs);
  value_ *= rhs.value_;
  mpz_mod(value_.get_mpz_t(), value_.get_mpz_t(), params_->p.get_mpz_t());
  return *this;
}

std::ostream& operator<<(std::ostream& os, const FieldElement& e) { return os << e.value(); }

FieldElement mod_exp(const FieldElement& base, const mpz_class& exp) {
  if (exp < 0) throw ParamError("mod_exp: exponent must be non-negative");
  const auto& params = base.params();
  return FieldElement(base.params_ptr(), powm(base.value(), exp, params.p));
}

FieldElement mod_inv(const FieldElement& a) {
  if (a.is_zero()) throw NoInverseError("mod_inv: zero has no multiplicative inverse");
  mpz_class out;
  if (mpz_invert(out.get_mpz_t(), a.value().get_mpz_t(), a.params().p.get_mpz_t()) == 0) {
    throw NoInverseError("mod_inv: " + a.str() + " is not invertible");
  }
  return FieldElement(a.params_ptr(), out);
}

bool is_probable_prime(const mpz_class& n, int rounds) {
  if (n < 2) return false;
  if (n < kTrialDivisionLimit) return trial_division(n.get_ui());
  for (unsigned long d : small_primes()) {
    if (mpz_divisible_ui_p(n.get_mpz_t(), d)) return false;
  }

  mpz_class d = n - 1;
  unsigned long s = 0;
  while (mpz_even_p(d.get_mpz_t())) {
    d >>= 1;
    ++s;
  }
  // Witness bases come from a fixed stream so the verdict is reproducible.
  Rng bases = Rng::derive(0x6d696c6c65722d72ULL, n.get_str());
  const mpz_class n_minus_1 = n - 1;
  for (int i = 0; i < rounds; ++i) {
    mpz_class a = bases.between(2, n - 2);
    mpz_class x = powm(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (unsigned long r = 1; r < s; ++r) {
      x = (x * x) % n;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

FieldParams generate_params(int bit_length, Rng& rng) {
  if (bit_length < 5) {
    throw ParamError("generate_params: bit length must be at least 5 (smallest accepted field is p = 23)");
  }
  // q has bit_length - 1 bits so that p = 2q + 1 has exactly bit_length bits.
  const mpz_class q_lo = mpz_class(1) << (bit_length - 2);
  const mpz_class q_hi = (mpz_class(1) << (bit_length - 1)) - 1;
  for (;;) {
    mpz_class q = rng.between(q_lo, q_hi);
    if (mpz_even_p(q.get_mpz_t())) q += 1;
    if (q > q_hi) continue;
    mpz_class p = 2 * q + 1;
    if (p < 23) continue;
    if (!is_probable_prime(q) || !is_probable_prime(p)) continue;

    // Smallest h >= 2 that is a quadratic residue generates the subgroup.
    mpz_class g = 2;
    while (powm(g, q, p) != 1) ++g;
    FieldParams params{p, q, g};
    params.validate();
    return params;
  }
}

FieldElement square(const FieldElement& u) { return u * u; }

FieldElement sample_subgroup_element(const ParamsPtr& params, Rng& rng) {
  FieldElement u(params, rng.between(1, params->p - 1));
  return square(u);
}

bool in_subgroup(const FieldElement& a) {
  if (a.is_zero()) return false;
  return mod_exp(a, a.params().q).value() == 1;
}

std::string params_to_text(const FieldParams& params) {
  std::ostringstream os;
  os << params.p << '\n' << params.q << '\n' << params.g << '\n';
  return os.str();
}

FieldParams params_from_text(const std::string& text) {
  std::istringstream is(text);
  std::array<std::string, 3> lines;
  for (auto& line : lines) {
    if (!std::getline(is, line) || line.empty()) {
      throw ParamError("params text: expected three decimal lines (p, q, g)");
    }
  }
  FieldParams params;
  try {
    params = FieldParams{mpz_class(lines[0], 10), mpz_class(lines[1], 10), mpz_class(lines[2], 10)};
  } catch (const std::invalid_argument&) {
    throw ParamError("params text: malformed decimal integer");
  }
  params.validate();
  return params;
}

}  // namespace ivote
