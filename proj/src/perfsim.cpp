#include "lutcore/perfsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lutcore {

using nlohmann::json;

#ifndef LUTCORE_DEFAULT_DATA_DIR
#define LUTCORE_DEFAULT_DATA_DIR "data"
#endif

std::string default_data_dir() {
  if (const char* env = std::getenv("LUTCORE_DATA_DIR")) return env;
  return LUTCORE_DEFAULT_DATA_DIR;
}

double HwConfig::peak_for(const std::string& a, const std::string& w) const {
  auto it = peaks.find({a, w});
  if (it == peaks.end())
    throw std::invalid_argument("hw config '" + name + "' has no peak entry for (" + a + ", " + w + ")");
  return it->second;
}

HwConfig hw_config_from_json(const json& j) {
  HwConfig hw;
  hw.name = j.at("name").get<std::string>();
  hw.mem_bandwidth = j.at("mem_bandwidth_Bps").get<double>();
  hw.on_chip_bytes = j.at("on_chip_bytes").get<double>();
  if (hw.mem_bandwidth <= 0 || hw.on_chip_bytes <= 0)
    throw std::invalid_argument("hw config rates must be positive");
  for (const auto& jp : j.at("peaks")) {
    double ops = jp.at("ops_per_s").get<double>();
    if (ops <= 0) throw std::invalid_argument("hw config peak rates must be positive");
    hw.peaks[{jp.at("a_dtype").get<std::string>(), jp.at("w_dtype").get<std::string>()}] = ops;
  }
  return hw;
}

HwConfig load_hw_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open hw config '" + path + "'");
  json j;
  in >> j;
  return hw_config_from_json(j);
}

std::pair<double, Bound> op_latency(const OpProfile& p, const HwConfig& hw) {
  double compute = p.flops > 0 ? p.flops / hw.peak_for(p.a_dtype, p.w_dtype) : 0.0;
  double memory = (p.bytes_in + p.bytes_out) / hw.mem_bandwidth;
  if (compute >= memory) return {compute, Bound::compute};
  return {memory, Bound::memory};
}

namespace {

int attr_int(const json& attrs, const char* key, int dflt) {
  return attrs.contains(key) ? attrs.at(key).get<int>() : dflt;
}

std::string attr_str(const json& attrs, const char* key, const std::string& dflt) {
  return attrs.contains(key) ? attrs.at(key).get<std::string>() : dflt;
}

bool attr_bool(const json& attrs, const char* key, bool dflt) {
  return attrs.contains(key) ? attrs.at(key).get<bool>() : dflt;
}

double act_bytes(const std::string& a_dtype) {
  Dtype d;
  if (!dtype_from_name(a_dtype, d)) throw std::invalid_argument("bad a_dtype '" + a_dtype + "'");
  return bit_width(d) / 8.0;
}

double table_bytes(const ValueShape& tbl, bool quantized, double a_b) {
  return static_cast<double>(tbl.rows) * tbl.cols * std::ldexp(1.0, tbl.group_k - 1) *
         (quantized ? 1.0 : a_b);
}

struct PartProfile {
  double flops = 0;
  double in_bytes = 0;   // consumed tensor bytes
  double out_bytes = 0;  // produced tensor bytes
  double precompute_flops = 0;
  std::string peak_a = "fp16";
  std::string peak_w = "fp16";
};

// Profile of a single (non-fused) op given its input shapes.
PartProfile profile_part(OpKind op, const json& attrs, const std::vector<ValueShape>& in,
                         const ValueShape& out_shape, int weight_bits) {
  PartProfile p;
  std::string a = attr_str(attrs, "a_dtype", "fp16");
  double a_b = act_bytes(a);
  p.peak_a = a;
  p.peak_w = a;
  switch (op) {
    case OpKind::elementwise: {
      p.flops = static_cast<double>(in[0].rows) * in[0].cols;
      p.in_bytes = p.flops * a_b;
      p.out_bytes = p.in_bytes;
      break;
    }
    case OpKind::matmul: {
      double m = in[0].rows, kd = in[0].cols, n = in[1].rows;
      p.flops = 2.0 * m * n * kd;
      p.in_bytes = m * kd * a_b + n * kd * a_b;
      p.out_bytes = m * n * a_b;
      break;
    }
    case OpKind::mpgemm: {
      double m = in[0].rows, kd = in[0].cols, n = in[1].rows;
      p.flops = 2.0 * m * n * kd;
      p.in_bytes = m * kd * a_b + n * kd * weight_bits / 8.0;
      p.out_bytes = m * n * a_b;
      p.peak_w = "int" + std::to_string(weight_bits);
      break;
    }
    case OpKind::precompute: {
      bool tq = attr_bool(attrs, "table_quant", false);
      p.flops = static_cast<double>(out_shape.rows) * out_shape.cols *
                std::ldexp(1.0, out_shape.group_k - 1);
      p.precompute_flops = p.flops;
      p.in_bytes = static_cast<double>(in[0].rows) * in[0].cols * a_b;
      p.out_bytes = table_bytes(out_shape, tq, a_b);
      break;
    }
    case OpKind::lut_mpgemm: {
      bool tq = attr_bool(attrs, "table_quant", false);
      double m = in[0].rows, n = in[1].rows, kd = in[0].k_dim;
      p.flops = 2.0 * m * n * kd;
      p.in_bytes = table_bytes(in[0], tq, a_b) + n * kd * weight_bits / 8.0;
      p.out_bytes = m * n * a_b;
      p.peak_w = "int" + std::to_string(weight_bits);
      break;
    }
    default:
      throw std::invalid_argument("profile_part: unsupported op kind");
  }
  return p;
}

ValueShape infer_part_shape(OpKind op, const json& attrs, const ValueShape& in) {
  if (op == OpKind::elementwise) return in;
  if (op == OpKind::precompute) {
    int k = attr_int(attrs, "group_k", 4);
    ValueShape s;
    s.is_tables = true;
    s.rows = in.rows;
    s.group_k = k;
    s.k_dim = in.cols;
    s.cols = (in.cols + k - 1) / k;
    return s;
  }
  throw std::invalid_argument("fused parts must be elementwise or precompute");
}

// Capacity-derived reload factors for matmul-like ops (tiling-aware mode).
// Searches power-of-two output tiles whose operand rows plus output tile fit
// on-chip; full-operand residency keeps the factor at 1.
double tiled_input_traffic(double m, double n, double row_a_bytes, double row_w_bytes,
                           double out_elem_bytes, double capacity) {
  if (m * row_a_bytes + n * row_w_bytes + m * n * out_elem_bytes <= capacity)
    return m * row_a_bytes + n * row_w_bytes;
  double best = -1.0;
  for (double mt = 1; mt <= m; mt *= 2) {
    for (double nt = 1; nt <= n; nt *= 2) {
      if (mt * row_a_bytes + nt * row_w_bytes + mt * nt * out_elem_bytes > capacity) break;
      double traffic = std::ceil(n / nt) * m * row_a_bytes + std::ceil(m / mt) * n * row_w_bytes;
      if (best < 0 || traffic < best) best = traffic;
    }
  }
  if (best < 0) best = n * m * row_a_bytes + m * n * row_w_bytes;  // nothing fits
  return best;
}

}  // namespace

SimReport simulate_graph(const Dfg& g, const HwConfig& hw, const SimOptions& opt) {
  auto shapes = infer_shapes(g);
  auto order = topo_order(g);
  SimReport rep;
  for (int i : order) {
    const Node& n = g.nodes[i];
    if (n.op == OpKind::input || n.op == OpKind::output) continue;

    std::vector<ValueShape> in;
    for (const auto& dep : n.inputs) in.push_back(shapes.at(dep));
    int w_bits = attr_int(n.attrs, "w_bits", 2);

    OpSim sim;
    sim.id = n.id;
    sim.kind = op_kind_name(n.op);

    double compute_time = 0, in_bytes = 0, out_bytes = 0, pre_time = 0;
    if (n.op == OpKind::fused) {
      ValueShape cur = in.at(0);
      bool first = true;
      double prev_out = 0;
      for (const auto& jp : n.attrs.at("parts")) {
        OpKind pop = op_kind_from_name(jp.at("op").get<std::string>());
        json pattrs = jp.contains("attrs") ? jp.at("attrs") : json::object();
        ValueShape next = infer_part_shape(pop, pattrs, cur);
        PartProfile p = profile_part(pop, pattrs, {cur}, next, w_bits);
        sim.flops += p.flops;
        compute_time += p.flops / hw.peak_for(p.peak_a, p.peak_w);
        if (p.precompute_flops > 0)
          pre_time += p.precompute_flops / hw.peak_for(p.peak_a, p.peak_w);
        if (first) {
          in_bytes = p.in_bytes;
          first = false;
        } else {
          rep.fusion_savings += 2.0 * prev_out;  // one write plus one read eliminated
        }
        prev_out = p.out_bytes;
        cur = next;
      }
      out_bytes = prev_out;
    } else {
      PartProfile p = profile_part(n.op, n.attrs, in, shapes.at(n.id), w_bits);
      if (opt.tiling_aware &&
          (n.op == OpKind::matmul || n.op == OpKind::mpgemm || n.op == OpKind::lut_mpgemm)) {
        double m = in[0].rows, nn = in[1].rows;
        double a_total, w_total;
        // split input bytes back into per-operand totals
        std::string a = attr_str(n.attrs, "a_dtype", "fp16");
        double a_b = act_bytes(a);
        if (n.op == OpKind::lut_mpgemm) {
          bool tq = attr_bool(n.attrs, "table_quant", false);
          a_total = table_bytes(in[0], tq, a_b);
          w_total = nn * in[0].k_dim * w_bits / 8.0;
        } else if (n.op == OpKind::mpgemm) {
          a_total = m * in[0].cols * a_b;
          w_total = nn * in[0].cols * w_bits / 8.0;
        } else {
          a_total = m * in[0].cols * a_b;
          w_total = nn * in[0].cols * a_b;
        }
        p.in_bytes =
            tiled_input_traffic(m, nn, a_total / m, w_total / nn, a_b, hw.on_chip_bytes);
      }
      sim.flops = p.flops;
      compute_time = p.flops / hw.peak_for(p.peak_a, p.peak_w);
      if (p.precompute_flops > 0)
        pre_time = p.precompute_flops / hw.peak_for(p.peak_a, p.peak_w);
      in_bytes = p.in_bytes;
      out_bytes = p.out_bytes;
    }

    double mem_time = (in_bytes + out_bytes) / hw.mem_bandwidth;
    sim.traffic = in_bytes + out_bytes;
    sim.latency = std::max(compute_time, mem_time);
    sim.bound = compute_time >= mem_time ? Bound::compute : Bound::memory;
    sim.precompute_latency = pre_time;
    rep.total_latency += sim.latency;
    rep.total_traffic += sim.traffic;
    rep.ops.push_back(std::move(sim));
  }
  double pre_total = 0;
  for (const auto& o : rep.ops) pre_total += o.precompute_latency;
  rep.precompute_share = rep.total_latency > 0 ? pre_total / rep.total_latency : 0.0;
  return rep;
}

json sim_report_to_json(const SimReport& r, const HwConfig& hw) {
  json j;
  j["hw"] = hw.name;
  j["total_latency_s"] = r.total_latency;
  j["total_traffic_bytes"] = r.total_traffic;
  j["fusion_savings_bytes"] = r.fusion_savings;
  j["precompute_share"] = r.precompute_share;
  j["ops"] = json::array();
  for (const auto& o : r.ops) {
    j["ops"].push_back({{"id", o.id},
                        {"kind", o.kind},
                        {"flops", o.flops},
                        {"traffic_bytes", o.traffic},
                        {"latency_s", o.latency},
                        {"bound", o.bound == Bound::compute ? "compute" : "memory"},
                        {"precompute_latency_s", o.precompute_latency}});
  }
  return j;
}

void write_roofline_csv(std::ostream& os, const SimReport& r) {
  os << "op,intensity_flops_per_byte,perf_ops_per_s,bound\n";
  char buf[256];
  for (const auto& o : r.ops) {
    double intensity = o.traffic > 0 ? o.flops / o.traffic : 0.0;
    double perf = o.latency > 0 ? o.flops / o.latency : 0.0;
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%s\n", o.id.c_str(), intensity, perf,
                  o.bound == Bound::compute ? "compute" : "memory");
    os << buf;
  }
}

namespace {

Node make_input(const std::string& id, int rows, int cols, bool weight) {
  Node n;
  n.id = id;
  n.op = OpKind::input;
  n.attrs["shape"] = {rows, cols};
  if (weight) n.attrs["role"] = "weight";
  return n;
}

Node make_ew(const std::string& id, const std::string& fn, const std::string& a_dtype,
             const std::string& input) {
  Node n;
  n.id = id;
  n.op = OpKind::elementwise;
  n.attrs["fn"] = fn;
  n.attrs["a_dtype"] = a_dtype;
  n.inputs = {input};
  return n;
}

Node make_mpgemm(const std::string& id, const std::string& act, const std::string& w,
                 const std::string& a_dtype, int w_bits) {
  Node n;
  n.id = id;
  n.op = OpKind::mpgemm;
  n.attrs["w_bits"] = w_bits;
  n.attrs["a_dtype"] = a_dtype;
  n.attrs["group_k"] = 4;
  n.attrs["mode"] = "symmetric";
  n.attrs["table_quant"] = true;
  n.inputs = {act, w};
  return n;
}

}  // namespace

Dfg model_library(const std::string& name, int batch, int seq, const std::string& data_dir,
                  const std::string& a_dtype, int w_bits) {
  if (batch < 1 || seq < 1) throw std::invalid_argument("batch and seq must be >= 1");
  std::string path = data_dir + "/models/" + name + ".json";
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("unknown model '" + name + "' (no " + path + ")");
  json j;
  in >> j;
  const int hidden = j.at("hidden").get<int>();
  const int qkv_n = j.at("qkv_n").get<int>();
  const int ffn_up_n = j.at("ffn_up_n").get<int>();
  const int ffn_down_k = j.at("ffn_down_k").get<int>();
  const bool gated = j.at("gated").get<bool>();
  const int m = batch * seq;

  Dfg g;
  g.nodes.push_back(make_input("x", m, hidden, false));
  g.nodes.push_back(make_input("w_qkv", qkv_n, hidden, true));
  g.nodes.push_back(make_input("w_attn_out", hidden, hidden, true));
  g.nodes.push_back(make_input("w_ffn_up", ffn_up_n, hidden, true));
  g.nodes.push_back(make_input("w_ffn_down", hidden, ffn_down_k, true));

  g.nodes.push_back(make_ew("attn_norm", "identity", a_dtype, "x"));
  g.nodes.push_back(make_mpgemm("qkv_proj", "attn_norm", "w_qkv", a_dtype, w_bits));
  g.nodes.push_back(make_ew("attn_ctx", "identity", a_dtype, "x"));
  g.nodes.push_back(make_mpgemm("attn_out_proj", "attn_ctx", "w_attn_out", a_dtype, w_bits));
  g.nodes.push_back(make_ew("ffn_norm", "identity", a_dtype, "x"));
  g.nodes.push_back(make_mpgemm("ffn_up_proj", "ffn_norm", "w_ffn_up", a_dtype, w_bits));

  if (gated) {
    // Gate/up are one fused projection (N = 2 * intermediate); the gating
    // product is stood in by an element-wise op on a second graph input.
    g.nodes.push_back(make_input("ffn_mid", m, ffn_down_k, false));
    g.nodes.push_back(make_ew("ffn_act", "silu", a_dtype, "ffn_mid"));
    g.nodes.push_back(make_mpgemm("ffn_down_proj", "ffn_act", "w_ffn_down", a_dtype, w_bits));
    g.outputs = {"qkv_proj", "attn_out_proj", "ffn_up_proj", "ffn_down_proj"};
  } else {
    g.nodes.push_back(make_ew("ffn_act", "relu", a_dtype, "ffn_up_proj"));
    g.nodes.push_back(make_mpgemm("ffn_down_proj", "ffn_act", "w_ffn_down", a_dtype, w_bits));
    g.outputs = {"qkv_proj", "attn_out_proj", "ffn_down_proj"};
  }
  validate_graph(g);
  return g;
}

std::vector<std::string> model_names(const std::string& data_dir) {
  std::vector<std::string> names;
  std::filesystem::path dir = std::filesystem::path(data_dir) / "models";
  if (!std::filesystem::is_directory(dir)) return names;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace lutcore
