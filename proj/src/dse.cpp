#include "lutcore/dse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace lutcore {

double table_storage_bits(const LutArrayConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("table_storage_bits: K must be >= 1");
  return static_cast<double>(cfg.m) * std::ldexp(1.0, cfg.k - 1) * cfg.lut_bit;
}

double weight_buffer_bits(const LutArrayConfig& cfg) {
  return static_cast<double>(cfg.k) * cfg.n * cfg.w_bit;
}

CostReport cost_model(const LutArrayConfig& cfg, const CostWeights& w) {
  if (w.table_bit < 0 || w.weight_bit < 0 || w.mux2 < 0 || w.adder < 0 || w.fanout < 0)
    throw std::invalid_argument("cost_model: weights must be non-negative");
  CostReport r;
  const double half = std::ldexp(1.0, cfg.k - 1);
  const double ops = static_cast<double>(cfg.m) * cfg.n * cfg.k;
  r.table_bits = table_storage_bits(cfg);
  r.weight_bits = weight_buffer_bits(cfg);
  r.mux2_count = static_cast<double>(cfg.m) * cfg.n * (half - 1.0) * cfg.lut_bit;
  r.adder_count = static_cast<double>(cfg.m) * cfg.n;
  r.table_broadcast_fanout = cfg.n;
  r.weight_broadcast_fanout = cfg.m;
  r.table_bits_per_op = r.table_bits / ops;
  r.weight_bits_per_op = r.weight_bits / ops;
  // activations in, grouped binary weights in, accumulators out
  r.io_bits_per_cycle = static_cast<double>(cfg.m) * cfg.k * cfg.a_bit + r.weight_bits +
                        static_cast<double>(cfg.m) * cfg.n * 32.0;
  r.proxy_cost = (w.table_bit * r.table_bits + w.weight_bit * r.weight_bits +
                  w.mux2 * r.mux2_count + w.adder * r.adder_count +
                  w.fanout * (cfg.m + cfg.n)) /
                 ops;
  return r;
}

std::vector<std::pair<LutArrayConfig, CostReport>> enumerate_designs(
    long long budget, int k_min, int k_max, int lut_bit, int w_bit, const CostWeights& weights) {
  if (budget < 1) throw std::invalid_argument("enumerate_designs: budget must be >= 1");
  std::vector<std::pair<LutArrayConfig, CostReport>> out;
  for (int k = std::max(1, k_min); k <= k_max; ++k) {
    if (budget % k != 0) continue;
    long long mn = budget / k;
    for (long long m = 1; m <= mn; m <<= 1) {
      if (mn % m != 0) continue;
      long long n = mn / m;
      if ((n & (n - 1)) != 0) continue;  // n must be a power of two
      LutArrayConfig cfg{static_cast<int>(m), static_cast<int>(n), k, lut_bit, w_bit};
      out.emplace_back(cfg, cost_model(cfg, weights));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second.proxy_cost != b.second.proxy_cost) return a.second.proxy_cost < b.second.proxy_cost;
    if (a.first.n != b.first.n) return a.first.n > b.first.n;
    return a.first.k < b.first.k;
  });
  return out;
}

void write_design_csv(std::ostream& os,
                      const std::vector<std::pair<LutArrayConfig, CostReport>>& designs) {
  os << "m,n,k,lut_bit,w_bit,table_bits,weight_bits,mux2,adders,"
        "table_bits_per_op,weight_bits_per_op,proxy_cost\n";
  char buf[256];
  for (const auto& [cfg, r] : designs) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  cfg.m, cfg.n, cfg.k, cfg.lut_bit, cfg.w_bit, r.table_bits, r.weight_bits,
                  r.mux2_count, r.adder_count, r.table_bits_per_op, r.weight_bits_per_op,
                  r.proxy_cost);
    os << buf;
  }
}

}  // namespace lutcore
