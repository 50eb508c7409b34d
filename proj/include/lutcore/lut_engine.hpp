#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lutcore/matrix.hpp"
#include "lutcore/numerics.hpp"
#include "lutcore/quantizer.hpp"

namespace lutcore {

// Activation values already projected onto the declared dtype grid
// (re-rounding any element is a no-op).
struct ActivationTile {
  Matrix values;  // [m_rows, k_dim]
  Dtype dtype = Dtype::fp16;
};

ActivationTile make_activation_tile(Matrix values, Dtype dtype);

// Per-(row, group) table of precomputed +/- dot products. Index bit j
// addresses activation element j; a set bit means +1. The symmetric form
// stores the 2^(k-1) entries whose select bit k-1 is 0.
struct LookupTable {
  int k = 0;
  bool symmetric = true;
  bool quantized = false;
  std::vector<double> entries;  // real entry values (scale*code once quantized)
  std::vector<int> codes;       // int8 codes, present iff quantized
  double table_scale = 1.0;     // present iff quantized
  double group_sum = 0.0;       // all-ones entry, cached for zero-point correction
};

// Full 2^k table (testing/reference form).
LookupTable precompute_table_full(std::span<const double> act_group);

// Symmetric 2^(k-1) half-table.
LookupTable precompute_table_symmetric(std::span<const double> act_group);

// Table read with the raw index convention: the select bit (bit k-1) picks
// between the stored half and the negated, bit-complemented half.
double lut_lookup(const LookupTable& table, uint32_t idx);

// Table read in the offline-negated form: the low bits were already
// complemented when the weights were packed, so the read is a plain select
// plus a conditional negation.
double lut_lookup_precomplemented(const LookupTable& table, uint32_t idx);

// Per-table int8 quantization: scale = max|entry| / 127 (1 if all zero).
LookupTable quantize_table(const LookupTable& table);

struct GemmConfig {
  int group_k = 4;              // dot-product group length, in [2, 8]
  bool quantize_tables = false;
  Dtype a_dtype = Dtype::fp16;
};

// One symmetric table per (activation row, K-element group); the trailing
// group is zero-padded when k_dim is not divisible by group_k.
struct TableTensor {
  int m_rows = 0;
  int groups = 0;
  int group_k = 0;
  std::vector<LookupTable> tables;  // row-major [m_rows, groups]

  const LookupTable& table(int m, int g) const { return tables[static_cast<size_t>(m) * groups + g]; }
};

TableTensor precompute_operator(const ActivationTile& act, const GemmConfig& cfg);

// Bit planes plus the reinterpreted per-channel scale/zero they belong to.
struct PackedWeights {
  BitPlanes planes;
  std::vector<double> scale;
  std::vector<double> zero;
};

PackedWeights pack_weights(const QuantizedWeights& reinterpreted);

struct GemmStats {
  uint64_t lookups = 0;
};

// Bit-serial LUT-based mpGEMM: O[m,n] = scale[n] * (sum_g sum_b 2^b * lookup
// - zero[n] * sum_g group_sum[m,g]), groups ascending then planes ascending,
// accumulated in binary64 (exact for integer and in-range fp16/fp8 grids).
Matrix lut_mpgemm(const ActivationTile& act, const PackedWeights& w, const GemmConfig& cfg,
                  GemmStats* stats = nullptr);

// Same, reusing tables computed once per activation tile.
Matrix lut_mpgemm(const TableTensor& tables, const PackedWeights& w, const GemmConfig& cfg,
                  GemmStats* stats = nullptr);

// Dequantization-route oracle: accumulates activation x code products in the
// same group-ascending order and the same wide accumulator, then applies the
// channel scale/zero the weights carry.
Matrix reference_mpgemm(const ActivationTile& act, const QuantizedWeights& qw,
                        const GemmConfig& cfg);

}  // namespace lutcore
