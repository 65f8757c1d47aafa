#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ivote/modmath.hpp"
#include "ivote/rng.hpp"

namespace ivote {

/// k nonzero partitions whose product mod p is the partitioned value.
class ShareSet {
 public:
  explicit ShareSet(std::vector<FieldElement> shares);

  std::size_t k() const { return shares_.size(); }
  const std::vector<FieldElement>& shares() const { return shares_; }
  const FieldElement& operator[](std::size_t i) const { return shares_.at(i); }

 private:
  std::vector<FieldElement> shares_;
};

/// Draws r_1..r_{k-1} uniformly from [1, p-1] and forces
/// r_k = value * (r_1 * ... * r_{k-1})^-1.
ShareSet split(const FieldElement& value, std::size_t k, Rng& rng);

/// The deterministic half of split(): the leading k-1 shares are supplied.
ShareSet split_with(const FieldElement& value, std::span<const FieldElement> leading);

/// Product of all shares. Throws InvalidShareError on a zero share.
FieldElement reconstruct(std::span<const FieldElement> shares);
inline FieldElement reconstruct(const ShareSet& set) { return reconstruct(set.shares()); }

/// Largest p for which exhaustive tables are computed.
inline constexpr std::uint64_t kExhaustiveMaxP = 1u << 16;
/// Upper bound on enumerated split choices, (p-1)^(k-1).
inline constexpr std::uint64_t kExhaustiveMaxCases = 10'000'000;

/// Exact joint distribution of a fixed set of share positions, taken over
/// every random choice split() can make.
struct DistributionTable {
  std::vector<std::size_t> positions;
  std::uint64_t total = 0;
  std::map<std::vector<std::uint64_t>, std::uint64_t> counts;

  friend bool operator==(const DistributionTable&, const DistributionTable&) = default;
};

/// Enumerates all (p-1)^(k-1) leading-share choices for `value` and tabulates
/// the shares at `positions` (0-based, 1 <= |positions| <= k-1).
/// Throws RegimeError when p or the enumeration is too large.
DistributionTable marginal_distribution(const FieldElement& value, std::size_t k,
                                        std::span<const std::size_t> positions);

}  // namespace ivote
