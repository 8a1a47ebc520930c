#pragma once

#include <string>
#include <vector>

#include "colm/common.hpp"

namespace colm {

/// The chain-base vector C = {c1..cn}. Every chain layer splits its
/// widths proportionally to c_i / sum(C); n = 1 reduces each layer to
/// its standard dense counterpart.
struct ChainSpec {
  std::vector<i64> bases;

  ChainSpec() = default;
  explicit ChainSpec(std::vector<i64> b);

  i64 n() const { return static_cast<i64>(bases.size()); }
  i64 total() const;  // sum(C)

  bool operator==(const ChainSpec&) const = default;

  std::string str() const;                       // "8,8,8,8"
  static ChainSpec parse(const std::string& s);  // accepts "8,8" or "{8,8}"
};

/// Exact per-chain widths of a layer dimension D: D_i = c_i * D / sum(C).
/// Construction rejects indivisible (D, C) pairs.
struct ChainDims {
  std::vector<i64> widths;  // D_i
  std::vector<i64> prefix;  // P_i = sum_{j<=i} D_j; prefix[n-1] == D
  i64 total = 0;

  i64 n() const { return static_cast<i64>(widths.size()); }
  /// P_active for active in [1, n].
  i64 prefix_width(i64 active) const;
  /// Chain index (0-based) owning feature column `col`.
  i64 chain_of(i64 col) const;
};

ChainDims chain_dims(const ChainSpec& spec, i64 d);

/// Parameter count of a chain linear layer Dx -> Dy:
/// sum_i Dy_i * Px_i (+ Dy if biased).
i64 chain_param_count(const ChainSpec& spec, i64 dx, i64 dy, bool biased);

/// Density of the step mask as an exact rational:
/// num/den = sum_i c_i * sum_{j<=i} c_j / (sum C)^2.
struct Ratio {
  i64 num = 0;
  i64 den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
Ratio chain_density_ratio(const ChainSpec& spec);

}  // namespace colm
