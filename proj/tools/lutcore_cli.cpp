#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lutcore/dfg.hpp"
#include "lutcore/dse.hpp"
#include "lutcore/isa.hpp"
#include "lutcore/lut_engine.hpp"
#include "lutcore/perfsim.hpp"
#include "lutcore/rng.hpp"
#include "lutcore/tensor_file.hpp"

using nlohmann::json;
using namespace lutcore;

namespace {

uint64_t fnv1a(const void* data, size_t len) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

Matrix random_activations(Pcg32& rng, int rows, int cols, Dtype d) {
  Matrix m(rows, cols);
  for (auto& v : m.data) {
    if (is_integer_dtype(d)) {
      int span = d == Dtype::int8 ? 127 : 512;
      v = static_cast<double>(rng.uniform_int(-span, span));
    } else {
      v = rng.uniform(-1.0, 1.0);
    }
  }
  return m;
}

Matrix random_weights(Pcg32& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

int cmd_gemm(int m, int n, int k_dim, int w_bits, const std::string& a_dtype_name, int group_k,
             bool quant_table, uint64_t seed, bool check, const std::string& mode_name,
             const std::string& dump_prefix) {
  Dtype a_dtype;
  if (!dtype_from_name(a_dtype_name, a_dtype) || !is_activation_dtype(a_dtype))
    throw std::invalid_argument("a-dtype must be one of fp16, fp8, int8, int16");
  if (w_bits < 1 || w_bits > 4) throw std::invalid_argument("w-bits must be in [1, 4]");
  QuantMode mode;
  if (mode_name == "symmetric") mode = QuantMode::symmetric;
  else if (mode_name == "asymmetric") mode = QuantMode::asymmetric;
  else throw std::invalid_argument("mode must be symmetric or asymmetric");

  Pcg32 rng(seed);
  ActivationTile act = make_activation_tile(random_activations(rng, m, k_dim, a_dtype), a_dtype);
  QuantizedWeights qw = reinterpret_symmetric(quantize_weights(random_weights(rng, n, k_dim), w_bits, mode));
  PackedWeights pw = pack_weights(qw);

  GemmConfig cfg;
  cfg.group_k = group_k;
  cfg.quantize_tables = quant_table;
  cfg.a_dtype = a_dtype;

  GemmStats stats;
  Matrix out = lut_mpgemm(act, pw, cfg, &stats);

  json rep;
  rep["m"] = m;
  rep["n"] = n;
  rep["k_dim"] = k_dim;
  rep["w_bits"] = w_bits;
  rep["a_dtype"] = a_dtype_name;
  rep["group_k"] = group_k;
  rep["quant_table"] = quant_table;
  rep["seed"] = seed;
  rep["lookups"] = stats.lookups;
  rep["checksum"] = hex64(fnv1a(out.data.data(), out.data.size() * sizeof(double)));
  if (check) {
    Matrix ref = reference_mpgemm(act, qw, cfg);
    double max_err = 0;
    bool exact = true;
    for (size_t i = 0; i < out.data.size(); ++i) {
      max_err = std::max(max_err, std::fabs(out.data[i] - ref.data[i]));
      if (out.data[i] != ref.data[i]) exact = false;
    }
    rep["max_abs_err"] = max_err;
    rep["exact_match"] = exact;
  }
  if (!dump_prefix.empty()) {
    save_matrix(dump_prefix + ".a.bin", act.values);
    save_weights(dump_prefix + ".w.bin", qw);
    save_matrix(dump_prefix + ".accum.bin", Matrix(m, n, 0.0));
    save_matrix(dump_prefix + ".out.bin", out);
  }
  std::cout << rep.dump(2) << "\n";
  return 0;
}

int cmd_dse(long long budget, int k_min, int k_max, int lut_bit, int w_bit,
            const std::vector<double>& weight_vals, const std::string& out_path) {
  CostWeights w;
  if (!weight_vals.empty()) {
    if (weight_vals.size() != 5)
      throw std::invalid_argument("--weights needs 5 values: table_bit,weight_bit,mux2,adder,fanout");
    w = CostWeights{weight_vals[0], weight_vals[1], weight_vals[2], weight_vals[3], weight_vals[4]};
  }
  auto designs = enumerate_designs(budget, k_min, k_max, lut_bit, w_bit, w);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    write_design_csv(out, designs);
  } else {
    write_design_csv(std::cout, designs);
  }
  std::fprintf(stderr, "# %zu designs; proxy weights (table_bit,weight_bit,mux2,adder,fanout) = "
                       "(%g, %g, %g, %g, %g)\n",
               designs.size(), w.table_bit, w.weight_bit, w.mux2, w.adder, w.fanout);
  std::fprintf(stderr, "# top designs by proxy cost:\n");
  for (size_t i = 0; i < designs.size() && i < 5; ++i) {
    const auto& [cfg, r] = designs[i];
    std::fprintf(stderr, "#   m%dn%dk%d  proxy=%.6g  table_bits=%g  weight_bits=%g\n", cfg.m,
                 cfg.n, cfg.k, r.proxy_cost, r.table_bits, r.weight_bits);
  }
  return 0;
}

int cmd_sim(const std::string& model, int batch, int seq, const std::string& hw_path, bool split,
            bool fuse, bool tiling_aware, const std::string& out_path,
            const std::string& roofline_path, const std::string& data_dir,
            const std::string& a_dtype, int w_bits) {
  HwConfig hw = load_hw_config(hw_path);
  Dfg g = model_library(model, batch, seq, data_dir, a_dtype, w_bits);
  if (split || fuse) g = transform_split_mpgemm(g);
  if (fuse) g = fuse_precompute(g);
  SimOptions opt;
  opt.tiling_aware = tiling_aware;
  SimReport rep = simulate_graph(g, hw, opt);
  json j = sim_report_to_json(rep, hw);
  j["model"] = model;
  j["batch"] = batch;
  j["seq"] = seq;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << j.dump(2) << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  if (!roofline_path.empty()) {
    std::ofstream out(roofline_path);
    if (!out) throw std::runtime_error("cannot write '" + roofline_path + "'");
    write_roofline_csv(out, rep);
  }
  std::fprintf(stderr, "# total latency %.6g s, traffic %.6g B, precompute share %.4f%%\n",
               rep.total_latency, rep.total_traffic, 100.0 * rep.precompute_share);
  return 0;
}

int cmd_isa_validate(const std::string& text) {
  LmmaInstruction instr = parse_lmma(text);
  std::cout << json{{"ok", true}, {"canonical", encode_lmma(instr)}}.dump(2) << "\n";
  return 0;
}

int cmd_isa_execute(const std::string& text, const std::string& a_path, const std::string& w_path,
                    const std::string& accum_path, const std::string& out_path) {
  LmmaInstruction instr = parse_lmma(text);
  ActivationTile a = make_activation_tile(load_matrix(a_path), instr.a_dtype);
  QuantizedWeights qw = load_weights(w_path);
  Matrix accum = load_matrix(accum_path);
  Matrix out = execute_lmma(instr, a, pack_weights(qw), accum);
  save_matrix(out_path, out);
  std::cout << json{{"ok", true},
                    {"out", out_path},
                    {"checksum", hex64(fnv1a(out.data.data(), out.data.size() * sizeof(double)))}}
                   .dump(2)
            << "\n";
  return 0;
}

Dfg load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  in >> j;
  return dfg_from_json(j);
}

void save_graph(const std::string& path, const Dfg& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << dfg_to_json(g).dump(2) << "\n";
}

int cmd_dfg(const std::string& action, const std::string& in_path, const std::string& out_path,
            const std::vector<std::string>& input_specs, const std::string& out_dir) {
  Dfg g = load_graph(in_path);
  if (action == "transform") {
    save_graph(out_path, transform_split_mpgemm(g));
  } else if (action == "fuse") {
    save_graph(out_path, fuse_precompute(g));
  } else if (action == "run") {
    std::map<std::string, Matrix> inputs;
    for (const auto& spec : input_specs) {
      auto eq = spec.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--input expects id=path, got '" + spec + "'");
      inputs[spec.substr(0, eq)] = load_matrix(spec.substr(eq + 1));
    }
    auto outputs = execute_graph(g, inputs);
    std::filesystem::create_directories(out_dir);
    json rep;
    for (const auto& [id, mat] : outputs) {
      std::string path = out_dir + "/" + id + ".bin";
      save_matrix(path, mat);
      rep[id] = {{"path", path},
                 {"checksum", hex64(fnv1a(mat.data.data(), mat.data.size() * sizeof(double)))}};
    }
    std::cout << rep.dump(2) << "\n";
  } else {
    throw std::invalid_argument("unknown dfg action '" + action + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LUT-based mixed-precision GEMM engine, cost models and simulator"};
  app.require_subcommand(1);

  // gemm
  auto* gemm = app.add_subcommand("gemm", "run a seeded random LUT-mpGEMM and report");
  int m = 4, n = 8, k_dim = 16, w_bits = 2, group_k = 4;
  std::string a_dtype = "fp16", mode = "symmetric", dump_prefix;
  bool quant_table = false, check = false;
  uint64_t seed = 1;
  gemm->add_option("--m", m, "activation rows");
  gemm->add_option("--n", n, "output channels");
  gemm->add_option("--k-dim", k_dim, "reduction length");
  gemm->add_option("--w-bits", w_bits, "weight bits (1-4)");
  gemm->add_option("--a-dtype", a_dtype, "activation dtype: fp16|fp8|int8|int16");
  gemm->add_option("--group-k", group_k, "dot-product group length (2-8)");
  gemm->add_option("--mode", mode, "quantization mode: symmetric|asymmetric");
  gemm->add_flag("--quant-table", quant_table, "quantize tables to int8");
  gemm->add_option("--seed", seed, "PCG32 seed");
  gemm->add_flag("--check", check, "also run the dequantization oracle");
  gemm->add_option("--dump-prefix", dump_prefix, "write .a/.w/.accum/.out tensor files");

  // dse
  auto* dse = app.add_subcommand("dse", "enumerate LUT-array MNK designs under a budget");
  long long budget = 512;
  int k_min = 2, k_max = 8, lut_bit = 8, w_bit = 1;
  std::vector<double> weight_vals;
  std::string dse_out;
  dse->add_option("--budget", budget, "M*N*K product budget");
  dse->add_option("--k-min", k_min, "smallest group length");
  dse->add_option("--k-max", k_max, "largest group length");
  dse->add_option("--lut-bit", lut_bit, "bits per table entry");
  dse->add_option("--w-bit", w_bit, "weight bits");
  dse->add_option("--weights", weight_vals, "proxy weights: table_bit,weight_bit,mux2,adder,fanout")
      ->delimiter(',');
  dse->add_option("--out", dse_out, "CSV output path (default stdout)");

  // sim
  auto* sim = app.add_subcommand("sim", "tile-level roofline simulation of a transformer layer");
  std::string model, hw_path, sim_out, roofline_out, data_dir = default_data_dir();
  std::string sim_a_dtype = "fp16";
  int batch = 1, seq = 2048, sim_w_bits = 1;
  bool split = false, fuse = false, tiling_aware = false;
  sim->add_option("--model", model, "model name from the bundled library")->required();
  sim->add_option("--batch", batch, "batch size");
  sim->add_option("--seq", seq, "sequence length");
  sim->add_option("--hw", hw_path, "hardware config JSON")->required();
  sim->add_flag("--split", split, "apply the precompute split pass");
  sim->add_flag("--fuse", fuse, "apply split + precompute fusion passes");
  sim->add_flag("--tiling-aware", tiling_aware, "capacity-derived reload factors for matmuls");
  sim->add_option("--out", sim_out, "report JSON path (default stdout)");
  sim->add_option("--roofline", roofline_out, "roofline CSV path");
  sim->add_option("--data-dir", data_dir, "data directory with models/*.json");
  sim->add_option("--a-dtype", sim_a_dtype, "activation dtype for the layer");
  sim->add_option("--w-bits", sim_w_bits, "weight bits for the layer");

  // isa
  auto* isa = app.add_subcommand("isa", "LMMA instruction tools");
  isa->require_subcommand(1);
  auto* validate = isa->add_subcommand("validate", "parse and validate an instruction");
  std::string instr_text;
  validate->add_option("instruction", instr_text, "LMMA instruction text")->required();
  auto* execute = isa->add_subcommand("execute", "execute one instruction over tensor files");
  std::string exec_text, a_path, w_path, accum_path, o_path;
  execute->add_option("instruction", exec_text, "LMMA instruction text")->required();
  execute->add_option("--a", a_path, "activation tensor file")->required();
  execute->add_option("--w", w_path, "weight tensor file")->required();
  execute->add_option("--accum", accum_path, "accumulator tensor file")->required();
  execute->add_option("--out", o_path, "output tensor file")->required();

  // dfg
  auto* dfg = app.add_subcommand("dfg", "graph passes and the functional interpreter");
  dfg->require_subcommand(1);
  std::string g_in, g_out = "out.json", run_in, run_dir = ".";
  std::vector<std::string> run_inputs;
  auto* transform = dfg->add_subcommand("transform", "split mpgemm into precompute + lut_mpgemm");
  transform->add_option("--in", g_in, "graph JSON")->required();
  transform->add_option("--out", g_out, "output graph JSON")->required();
  auto* fusecmd = dfg->add_subcommand("fuse", "fuse precompute into preceding elementwise ops");
  fusecmd->add_option("--in", g_in, "graph JSON")->required();
  fusecmd->add_option("--out", g_out, "output graph JSON")->required();
  auto* run = dfg->add_subcommand("run", "execute a graph over tensor files");
  run->add_option("--in", run_in, "graph JSON")->required();
  run->add_option("--input", run_inputs, "input binding id=path (repeatable)");
  run->add_option("--out-dir", run_dir, "directory for output tensors");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gemm->parsed())
      return cmd_gemm(m, n, k_dim, w_bits, a_dtype, group_k, quant_table, seed, check, mode,
                      dump_prefix);
    if (dse->parsed()) return cmd_dse(budget, k_min, k_max, lut_bit, w_bit, weight_vals, dse_out);
    if (sim->parsed())
      return cmd_sim(model, batch, seq, hw_path, split, fuse, tiling_aware, sim_out, roofline_out,
                     data_dir, sim_a_dtype, sim_w_bits);
    if (isa->parsed()) {
      if (validate->parsed()) return cmd_isa_validate(instr_text);
      if (execute->parsed()) return cmd_isa_execute(exec_text, a_path, w_path, accum_path, o_path);
    }
    if (dfg->parsed()) {
      if (transform->parsed()) return cmd_dfg("transform", g_in, g_out, {}, "");
      if (fusecmd->parsed()) return cmd_dfg("fuse", g_in, g_out, {}, "");
      if (run->parsed()) return cmd_dfg("run", run_in, "", run_inputs, run_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
