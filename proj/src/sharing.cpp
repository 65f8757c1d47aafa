#include "ivote/sharing.hpp"

#include <algorithm>
#include <set>

#include "ivote/errors.hpp"

namespace ivote {

ShareSet::ShareSet(std::vector<FieldElement> shares) : shares_(std::move(shares)) {
  if (shares_.size() < 2) throw ParamError("ShareSet: need at least two shares");
  for (const auto& s : shares_) {
    require_same_field(s, shares_.front());
    if (s.is_zero()) throw InvalidShareError("ShareSet: shares must be nonzero");
  }
}

ShareSet split_with(const FieldElement& value, std::span<const FieldElement> leading) {
  if (value.is_zero()) throw DomainError("split: cannot partition zero");
  if (leading.empty()) throw ParamError("split: k must be at least 2");
  std::vector<FieldElement> shares(leading.begin(), leading.end());
  FieldElement prefix(value.params_ptr(), 1);
  for (const auto& s : shares) {
    require_same_field(s, value);
    if (s.is_zero()) throw InvalidShareError("split: leading shares must be nonzero");
    prefix *= s;
  }
  shares.push_back(value * mod_inv(prefix));
  return ShareSet(std::move(shares));
}

ShareSet split(const FieldElement& value, std::size_t k, Rng& rng) {
  if (k < 2) throw ParamError("split: k must be at least 2");
  if (value.is_zero()) throw DomainError("split: cannot partition zero");
  const auto& params = value.params_ptr();
  std::vector<FieldElement> leading;
  leading.reserve(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) leading.emplace_back(params, rng.between(1, params->p - 1));
  return split_with(value, leading);
}

FieldElement reconstruct(std::span<const FieldElement> shares) {
  if (shares.empty()) throw ParamError("reconstruct: no shares");
  FieldElement out(shares.front().params_ptr(), 1);
  for (const auto& s : shares) {
    if (s.is_zero()) throw InvalidShareError("reconstruct: zero share");
    out *= s;
  }
  return out;
}

DistributionTable marginal_distribution(const FieldElement& value, std::size_t k,
                                        std::span<const std::size_t> positions) {
  if (k < 2) throw ParamError("marginal_distribution: k must be at least 2");
  if (positions.empty() || positions.size() > k - 1) {
    throw ParamError("marginal_distribution: subset size must lie in [1, k-1]");
  }
  std::set<std::size_t> unique(positions.begin(), positions.end());
  if (unique.size() != positions.size() || *unique.rbegin() >= k) {
    throw ParamError("marginal_distribution: positions must be distinct and below k");
  }
  const auto& params = value.params();
  if (params.p > kExhaustiveMaxP) throw RegimeError("marginal_distribution: p exceeds 2^16");
  const std::uint64_t n = params.p.get_ui() - 1;
  std::uint64_t cases = 1;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (cases > kExhaustiveMaxCases / n) throw RegimeError("marginal_distribution: (p-1)^(k-1) too large");
    cases *= n;
  }

  DistributionTable table;
  table.positions.assign(positions.begin(), positions.end());
  std::vector<std::uint64_t> digits(k - 1, 1);
  std::vector<FieldElement> leading;
  std::vector<std::uint64_t> key(positions.size());
  for (std::uint64_t c = 0; c < cases; ++c) {
    leading.clear();
    for (auto d : digits) leading.emplace_back(value.params_ptr(), mpz_class(static_cast<unsigned long>(d)));
    ShareSet set = split_with(value, leading);
    for (std::size_t i = 0; i < positions.size(); ++i) key[i] = set[positions[i]].value().get_ui();
    ++table.counts[key];
    ++table.total;
    // Odometer over [1, p-1]^(k-1).
    for (auto& d : digits) {
      if (++d <= n) break;
      d = 1;
    }
  }
  return table;
}

}  // namespace ivote
