#pragma once

#include <ostream>
#include <utility>
#include <vector>

namespace lutcore {

// MNK tile geometry of one LUT array.
struct LutArrayConfig {
  int m = 0;
  int n = 0;
  int k = 0;
  int lut_bit = 8;  // bits per table entry
  int w_bit = 1;    // weight bits
  int a_bit = 16;   // activation bits (I/O accounting only)
};

// Per-unit cost weights for the proxy objective. The true objective in a
// silicon flow is synthesized area x power; these weights are a configurable
// stand-in, reported alongside every sweep. The adder weight dominates the
// mux weight by the rough gate-count ratio of a wide adder to a 2-way mux.
struct CostWeights {
  double table_bit = 1.0;
  double weight_bit = 1.0;
  double mux2 = 1.0;
  double adder = 100.0;
  double fanout = 0.1;
};

struct CostReport {
  double table_bits = 0;   // M * 2^(K-1) * LUT_BIT
  double weight_bits = 0;  // K * N * W_BIT
  double mux2_count = 0;   // M * N * (2^(K-1) - 1) * LUT_BIT
  double adder_count = 0;  // M * N accumulator lanes (precompute adders are software-side)
  int table_broadcast_fanout = 0;   // N
  int weight_broadcast_fanout = 0;  // M
  double table_bits_per_op = 0;
  double weight_bits_per_op = 0;
  double io_bits_per_cycle = 0;
  double proxy_cost = 0;
};

double table_storage_bits(const LutArrayConfig& cfg);
double weight_buffer_bits(const LutArrayConfig& cfg);

CostReport cost_model(const LutArrayConfig& cfg, const CostWeights& weights);

// All (M, N, K) with M, N powers of two, K in [k_min, k_max], M*N*K == budget,
// sorted ascending by proxy cost; ties broken by larger N, then smaller K.
std::vector<std::pair<LutArrayConfig, CostReport>> enumerate_designs(
    long long budget, int k_min, int k_max, int lut_bit, int w_bit,
    const CostWeights& weights);

// CSV: m,n,k,lut_bit,w_bit,table_bits,weight_bits,mux2,adders,
// table_bits_per_op,weight_bits_per_op,proxy_cost
void write_design_csv(std::ostream& os,
                      const std::vector<std::pair<LutArrayConfig, CostReport>>& designs);

}  // namespace lutcore
