#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lutcore/dfg.hpp"

namespace lutcore {

// Analytical hardware model. Peak rates are calibration inputs keyed by
// (activation dtype, weight dtype); plain GEMM and element-wise work look up
// (a, a). JSON schema:
//   {name, mem_bandwidth_Bps, on_chip_bytes, peaks: [{a_dtype, w_dtype, ops_per_s}]}
struct HwConfig {
  std::string name;
  double mem_bandwidth = 0;   // bytes/s
  double on_chip_bytes = 0;
  std::map<std::pair<std::string, std::string>, double> peaks;  // ops/s

  double peak_for(const std::string& a, const std::string& w) const;
};

HwConfig hw_config_from_json(const nlohmann::json& j);
HwConfig load_hw_config(const std::string& path);

enum class Bound { compute, memory };

struct OpProfile {
  std::string kind;     // mpgemm | gemm | elementwise | precompute | fused
  double flops = 0;
  double bytes_in = 0;
  double bytes_out = 0;
  std::string a_dtype = "fp16";
  std::string w_dtype = "fp16";
  double precompute_flops = 0;  // portion attributable to table precompute
};

// latency = max(flops / peak, (bytes_in + bytes_out) / bandwidth);
// ties classify as compute-bound.
std::pair<double, Bound> op_latency(const OpProfile& p, const HwConfig& hw);

struct OpSim {
  std::string id;
  std::string kind;
  double flops = 0;
  double traffic = 0;
  double latency = 0;
  Bound bound = Bound::compute;
  double precompute_latency = 0;  // compute time of the precompute portion
};

struct SimReport {
  std::vector<OpSim> ops;
  double total_latency = 0;
  double total_traffic = 0;
  double fusion_savings = 0;     // bytes kept on-chip by fused groups
  double precompute_share = 0;   // precompute-attributable latency / total
};

struct SimOptions {
  bool tiling_aware = false;  // multiply matmul input traffic by capacity-derived reload factors
};

// Sequential roofline over the graph in topological order. Intermediates
// inside a fused group contribute zero main-memory traffic.
SimReport simulate_graph(const Dfg& g, const HwConfig& hw, const SimOptions& opt = {});

nlohmann::json sim_report_to_json(const SimReport& r, const HwConfig& hw);

// CSV: op,intensity_flops_per_byte,perf_ops_per_s,bound
void write_roofline_csv(std::ostream& os, const SimReport& r);

// One transformer layer's projection graph (QKV, attention output, FFN
// up/down plus the element-wise ops feeding them) for a model in the bundled
// library; batch and seq set the GEMM M dimension.
Dfg model_library(const std::string& name, int batch, int seq, const std::string& data_dir,
                  const std::string& a_dtype = "fp16", int w_bits = 1);

std::vector<std::string> model_names(const std::string& data_dir);

// Default data directory: $LUTCORE_DATA_DIR, falling back to the path
// configured at build time.
std::string default_data_dir();

}  // namespace lutcore
