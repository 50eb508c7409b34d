// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every numeric pin is checked against an independent oracle
// (brute-force enumeration, exact rational arithmetic, or closed-form
// recomputation) rather than against the implementation under test.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "lutcore/dfg.hpp"
#include "lutcore/dse.hpp"
#include "lutcore/isa.hpp"
#include "lutcore/lut_engine.hpp"
#include "lutcore/perfsim.hpp"
#include "lutcore/quantizer.hpp"
#include "lutcore/rng.hpp"

using namespace lutcore;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail = "") {
  std::printf("criterion %2d [%s] %s%s%s\n", idx, ok ? "PASS" : "FAIL", name,
              detail.empty() ? "" : " — ", detail.c_str());
  if (!ok) ++g_failures;
}

int log_uniform(Pcg32& rng, int hi) {
  double u = rng.uniform(0.0, std::log(static_cast<double>(hi) + 0.999));
  return std::max(1, std::min(hi, static_cast<int>(std::exp(u))));
}

Matrix random_activations(Pcg32& rng, int rows, int cols, Dtype d) {
  Matrix m(rows, cols);
  for (auto& v : m.data)
    v = is_integer_dtype(d) ? static_cast<double>(rng.uniform_int(-127, 127))
                            : rng.uniform(-1.0, 1.0);
  return m;
}

Matrix random_weights(Pcg32& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

// ---------------------------------------------------------------- criterion 1
void criterion_oracle_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  uint64_t seed = 1;
  for (int w_bits = 1; w_bits <= 4 && ok; ++w_bits) {
    for (Dtype ad : {Dtype::int8, Dtype::fp16}) {
      for (QuantMode mode : {QuantMode::symmetric, QuantMode::asymmetric}) {
        Pcg32 rng(seed++);
        for (int i = 0; i < 1000; ++i) {
          int m = log_uniform(rng, 64);
          int n = log_uniform(rng, 256);
          int k_dim = log_uniform(rng, 256);
          auto act = make_activation_tile(random_activations(rng, m, k_dim, ad), ad);
          auto qw =
              reinterpret_symmetric(quantize_weights(random_weights(rng, n, k_dim), w_bits, mode));
          GemmConfig cfg;
          cfg.group_k = 4;
          cfg.a_dtype = ad;
          if (lut_mpgemm(act, pack_weights(qw), cfg) != reference_mpgemm(act, qw, cfg)) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char detail[128];
  std::snprintf(detail, sizeof detail, "16000 instances exact in %.1f s", secs);
  report(1, "lut path equals dequantization oracle, zero tolerance", ok && secs < 60.0, detail);
}

// ---------------------------------------------------------------- criterion 2
void criterion_worked_example() {
  // signs -A +B -C -D over A..D = [1,2,3,4] with one-bit codes [0,1,0,0],
  // scale 2, zero-point 1/2
  Matrix a(1, 4);
  a.data = {1, 2, 3, 4};
  auto act = make_activation_tile(a, Dtype::int8);
  QuantizedWeights pre;
  pre.n_out = 1;
  pre.k_dim = 4;
  pre.w_bits = 1;
  pre.codes = {0, 1, 0, 0};
  pre.scale = {2.0};
  pre.zero = {0.5};
  GemmConfig cfg;
  cfg.group_k = 4;
  cfg.a_dtype = Dtype::int8;
  bool pre_ok = reference_mpgemm(act, pre, cfg).at(0, 0) == -6.0;

  auto post = reinterpret_symmetric(pre);
  bool post_ok = post.codes == std::vector<int>{-1, 1, -1, -1} && post.scale[0] == 1.0 &&
                 post.zero[0] == 0.0 &&
                 lut_mpgemm(act, pack_weights(post), cfg).at(0, 0) == -6.0;

  const double group[] = {1, 2, 3, 4};
  bool table_ok = precompute_table_full(group).entries[0b0010] == -6.0;
  report(2, "worked example -A+B-C-D evaluates to -6 on both paths",
         pre_ok && post_ok && table_ok);
}

// ---------------------------------------------------------------- criterion 3
void criterion_symmetry() {
  Pcg32 rng(3);
  bool ok = true;
  for (int i = 0; i < 10000 && ok; ++i) {
    int k = 2 + static_cast<int>(rng.uniform_int(0, 6));
    std::vector<double> a(k);
    for (auto& v : a) v = rng.uniform(-8.0, 8.0);
    auto full = precompute_table_full(a);
    auto sym = precompute_table_symmetric(a);
    if (sym.entries.size() != size_t{1} << (k - 1)) ok = false;
    for (uint32_t idx = 0; ok && idx < (1u << k); ++idx) {
      if (lut_lookup(sym, idx) != full.entries[idx]) ok = false;
    }
  }
  report(3, "half-table reconstruction matches the full table on every index", ok);
}

// ---------------------------------------------------------------- criterion 4
// Exact dyadic rationals m * 2^e with a 128-bit mantissa; every double is one.
struct Dyadic {
  __int128 m = 0;
  int e = 0;

  static Dyadic from_double(double x) {
    if (x == 0.0) return {0, 0};
    int exp;
    double frac = std::frexp(x, &exp);           // x = frac * 2^exp, |frac| in [0.5, 1)
    auto mant = static_cast<long long>(std::ldexp(frac, 53));  // exact: 53-bit integer
    return Dyadic{static_cast<__int128>(mant), exp - 53}.normalized();
  }
  static Dyadic from_int(long long v) { return Dyadic{static_cast<__int128>(v), 0}.normalized(); }

  Dyadic normalized() const {
    if (m == 0) return {0, 0};
    Dyadic r = *this;
    while ((r.m & 1) == 0) {
      r.m >>= 1;
      ++r.e;
    }
    return r;
  }
  Dyadic operator*(const Dyadic& o) const { return Dyadic{m * o.m, e + o.e}.normalized(); }
  Dyadic operator-(const Dyadic& o) const {
    int common = std::min(e, o.e);
    return Dyadic{(m << (e - common)) - (o.m << (o.e - common)), common}.normalized();
  }
  bool operator==(const Dyadic& o) const { return m == o.m && e == o.e; }
};

void criterion_reinterpretation() {
  Pcg32 rng(4);
  bool ok = true;
  for (int w_bits = 1; w_bits <= 4 && ok; ++w_bits) {
    const int qmax = (1 << w_bits) - 1;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      Dyadic s = Dyadic::from_double(rng.uniform(0.05, 4.0));
      Dyadic z = Dyadic::from_double(rng.uniform(-8.0, 8.0));
      Dyadic two = Dyadic::from_int(2);
      Dyadic half = Dyadic{1, -1};
      Dyadic s2 = s * half;                                          // s' = s / 2
      Dyadic z2 = two * z - Dyadic::from_int(qmax);                  // z' = 2z + 1 - 2^W
      for (int q = 0; q <= qmax && ok; ++q) {
        Dyadic lhs = s * (Dyadic::from_int(q) - z);
        Dyadic rhs = s2 * (Dyadic::from_int(2 * q - qmax) - z2);
        if (!(lhs == rhs)) ok = false;
      }
    }
  }

  // 4-bit code mapping {0..15} -> {-15,-13,...,15}
  QuantizedWeights qw;
  qw.n_out = 1;
  qw.k_dim = 16;
  qw.w_bits = 4;
  for (int q = 0; q < 16; ++q) qw.codes.push_back(q);
  qw.scale = {1.0};
  qw.zero = {7.5};
  auto r = reinterpret_symmetric(qw);
  for (int q = 0; q < 16; ++q) {
    if (r.codes[q] != 2 * q - 15) ok = false;
  }
  report(4, "reinterpretation identity holds in exact rational arithmetic", ok);
}

// ---------------------------------------------------------------- criterion 5
void criterion_table_quantization() {
  Pcg32 rng(5);
  bool bound_ok = true;
  for (int i = 0; i < 1000 && bound_ok; ++i) {
    int m = log_uniform(rng, 16);
    int n = log_uniform(rng, 32);
    int k_dim = log_uniform(rng, 128);
    int w_bits = 1 + static_cast<int>(rng.uniform_int(0, 3));
    auto act = make_activation_tile(random_activations(rng, m, k_dim, Dtype::fp16), Dtype::fp16);
    auto qw = reinterpret_symmetric(
        quantize_weights(random_weights(rng, n, k_dim), w_bits, QuantMode::symmetric));
    GemmConfig cfg;
    cfg.group_k = 4;
    cfg.quantize_tables = true;
    auto tables = precompute_operator(act, cfg);
    Matrix out = lut_mpgemm(tables, pack_weights(qw), cfg);
    Matrix ref = reference_mpgemm(act, qw, cfg);
    const double plane_weight = std::ldexp(1.0, w_bits) - 1.0;  // sum of 2^b
    for (int r = 0; r < m && bound_ok; ++r) {
      double half_scales = 0.0;
      for (int g = 0; g < tables.groups; ++g) half_scales += tables.table(r, g).table_scale / 2.0;
      for (int c = 0; c < n; ++c) {
        double bound = std::fabs(qw.scale[c]) * plane_weight * half_scales;
        if (std::fabs(out.at(r, c) - ref.at(r, c)) > bound * (1.0 + 1e-9) + 1e-12)
          bound_ok = false;
      }
    }
  }

  // median relative error at K_dim = 4096
  auto act = make_activation_tile(random_activations(rng, 4, 4096, Dtype::fp16), Dtype::fp16);
  auto qw = reinterpret_symmetric(
      quantize_weights(random_weights(rng, 32, 4096), 2, QuantMode::symmetric));
  GemmConfig cfg;
  cfg.group_k = 4;
  cfg.quantize_tables = true;
  Matrix out = lut_mpgemm(act, pack_weights(qw), cfg);
  cfg.quantize_tables = false;
  Matrix ref = reference_mpgemm(act, qw, cfg);
  std::vector<double> rel;
  for (size_t i = 0; i < out.data.size(); ++i) {
    if (std::fabs(ref.data[i]) > 1e-9)
      rel.push_back(std::fabs(out.data[i] - ref.data[i]) / std::fabs(ref.data[i]));
  }
  std::sort(rel.begin(), rel.end());
  double median = rel.empty() ? 1.0 : rel[rel.size() / 2];
  char detail[96];
  std::snprintf(detail, sizeof detail, "median relative error %.4f%%", 100.0 * median);
  report(5, "int8 table quantization stays within the analytic bound",
         bound_ok && median < 0.01, detail);
}

// ---------------------------------------------------------------- criterion 6
void criterion_dse() {
  Pcg32 rng(6);
  bool formulas_ok = true;
  for (int i = 0; i < 1000 && formulas_ok; ++i) {
    LutArrayConfig cfg;
    cfg.m = 1 << rng.uniform_int(0, 8);
    cfg.n = 1 << rng.uniform_int(0, 8);
    cfg.k = static_cast<int>(rng.uniform_int(1, 8));
    cfg.lut_bit = static_cast<int>(rng.uniform_int(1, 16));
    cfg.w_bit = static_cast<int>(rng.uniform_int(1, 4));
    double tb = static_cast<double>(cfg.m) * (1 << (cfg.k - 1)) * cfg.lut_bit;
    double wb = static_cast<double>(cfg.k) * cfg.n * cfg.w_bit;
    if (table_storage_bits(cfg) != tb || weight_buffer_bits(cfg) != wb) formulas_ok = false;
  }

  auto designs = enumerate_designs(512, 4, 4, 8, 1, CostWeights{});
  const CostReport* target = nullptr;
  for (const auto& [cfg, r] : designs) {
    if (cfg.m == 2 && cfg.n == 64 && cfg.k == 4) target = &r;
  }
  bool pareto_ok = target != nullptr;
  if (target) {
    for (const auto& [cfg, r] : designs) {
      bool dominates = r.table_bits_per_op <= target->table_bits_per_op &&
                       r.weight_bits_per_op <= target->weight_bits_per_op &&
                       (r.table_bits_per_op < target->table_bits_per_op ||
                        r.weight_bits_per_op < target->weight_bits_per_op);
      if (dominates) pareto_ok = false;
    }
  }
  report(6, "storage formulas exact; m2n64k4 sits on the Pareto frontier",
         formulas_ok && pareto_ok);
}

// ---------------------------------------------------------------- criterion 7
Dfg random_graph(Pcg32& rng) {
  Dfg g;
  int m = 1 + static_cast<int>(rng.uniform_int(0, 7));
  int cols = 1 + static_cast<int>(rng.uniform_int(0, 15));
  Node x;
  x.id = "x";
  x.op = OpKind::input;
  x.attrs["shape"] = {m, cols};
  g.nodes.push_back(x);

  std::string cur = "x";
  int steps = 1 + static_cast<int>(rng.uniform_int(0, 4));
  int next_id = 0;
  const char* fns[] = {"identity", "add_const", "mul_const", "relu"};
  for (int s = 0; s < steps && static_cast<int>(g.nodes.size()) < 7; ++s) {
    if (rng.uniform() < 0.5) {
      Node e;
      e.id = "e" + std::to_string(next_id++);
      e.op = OpKind::elementwise;
      e.attrs["fn"] = fns[rng.uniform_int(0, 3)];
      e.attrs["c"] = std::floor(rng.uniform(-3.0, 4.0));
      e.attrs["a_dtype"] = "int8";
      e.inputs = {cur};
      g.nodes.push_back(e);
      cur = e.id;
    } else {
      int n = 1 + static_cast<int>(rng.uniform_int(0, 15));
      Node w;
      w.id = "w" + std::to_string(next_id);
      w.op = OpKind::input;
      w.attrs["shape"] = {n, cols};
      Node mm;
      mm.id = "g" + std::to_string(next_id++);
      mm.op = OpKind::mpgemm;
      mm.attrs["w_bits"] = 1 + static_cast<int>(rng.uniform_int(0, 3));
      mm.attrs["a_dtype"] = "int8";
      mm.attrs["group_k"] = 2 + static_cast<int>(rng.uniform_int(0, 6));
      mm.attrs["mode"] = rng.uniform() < 0.5 ? "symmetric" : "asymmetric";
      mm.inputs = {cur, w.id};
      g.nodes.push_back(w);
      g.nodes.push_back(mm);
      cur = mm.id;
      cols = n;
    }
  }
  g.outputs = {cur};
  // occasionally add a second consumer so fusion legality gets exercised
  if (rng.uniform() < 0.3) {
    Node w;
    w.id = "w_extra";
    w.op = OpKind::input;
    w.attrs["shape"] = {3, cols};
    Node mm;
    mm.id = "g_extra";
    mm.op = OpKind::mpgemm;
    mm.attrs["w_bits"] = 2;
    mm.attrs["a_dtype"] = "int8";
    mm.attrs["group_k"] = 4;
    mm.inputs = {cur, w.id};
    g.nodes.push_back(w);
    g.nodes.push_back(mm);
    g.outputs.push_back("g_extra");
  }
  validate_graph(g);
  return g;
}

void criterion_pass_correctness() {
  Pcg32 rng(7);
  bool ok = true;
  for (int trial = 0; trial < 500 && ok; ++trial) {
    Dfg g = random_graph(rng);
    std::map<std::string, Matrix> inputs;
    auto shapes = infer_shapes(g);
    for (const auto& n : g.nodes) {
      if (n.op != OpKind::input) continue;
      Matrix t(shapes.at(n.id).rows, shapes.at(n.id).cols);
      for (auto& v : t.data) {
        bool weight = n.id[0] == 'w';
        v = weight ? rng.uniform(-1.0, 1.0) : static_cast<double>(rng.uniform_int(-20, 20));
      }
      inputs[n.id] = std::move(t);
    }
    Dfg t = transform_split_mpgemm(g);
    Dfg f = fuse_precompute(t);
    auto base = execute_graph(g, inputs);
    if (execute_graph(t, inputs) != base || execute_graph(f, inputs) != base) ok = false;
    if (dfg_to_json(transform_split_mpgemm(t)) != dfg_to_json(t)) ok = false;
    if (dfg_to_json(fuse_precompute(f)) != dfg_to_json(f)) ok = false;
  }
  report(7, "split and fuse passes preserve graph semantics exactly", ok);
}

// ---------------------------------------------------------------- criterion 8
void criterion_simulator() {
  std::string dir = default_data_dir();
  HwConfig hw = load_hw_config(dir + "/hw/a100-like.json");
  bool dominance_ok = true, share_ok = true;
  for (const auto& name : model_names(dir)) {
    for (auto [batch, seq] : std::vector<std::pair<int, int>>{{1, 2048}, {1024, 1}}) {
      Dfg split = transform_split_mpgemm(model_library(name, batch, seq, dir));
      Dfg fused = fuse_precompute(split);
      SimReport rs = simulate_graph(split, hw);
      SimReport rf = simulate_graph(fused, hw);
      if (rf.total_traffic > rs.total_traffic || rf.total_latency > rs.total_latency)
        dominance_ok = false;
      if (seq == 2048 && rf.precompute_share >= 0.05) share_ok = false;
    }
  }

  Dfg g = model_library("llama2-13b", 1, 2048, dir);
  SimReport r = simulate_graph(g, hw);
  bool shape_ok = false;
  for (const auto& op : r.ops) {
    if (op.id == "ffn_up_proj")
      shape_ok = op.flops == 2.0 * 2048 * 27648 * 5120 && op.bound == Bound::compute;
  }
  report(8, "fusion dominance, flagship shape flops, precompute share < 5%",
         dominance_ok && share_ok && shape_ok);
}

// ---------------------------------------------------------------- criterion 9
void criterion_isa() {
  bool ok = true;
  size_t valid_count = 0;
  for (auto [m, n, k] : std::vector<std::array<int, 3>>{{2, 64, 4}, {8, 4, 16}}) {
    auto all = enumerate_valid_lmma(m, n, k);
    valid_count = all.size();
    for (const auto& i : all) {
      if (!(parse_lmma(encode_lmma(i)) == i)) ok = false;
    }
  }
  if (valid_count != 32) ok = false;

  const Dtype menu[] = {Dtype::fp16, Dtype::fp8_e4m3, Dtype::int16, Dtype::int8, Dtype::int4,
                        Dtype::int3, Dtype::int2,     Dtype::int1,  Dtype::fp32, Dtype::int32};
  int negatives = 0;
  for (Dtype a : menu)
    for (Dtype w : menu)
      for (Dtype acc : menu)
        for (Dtype o : menu) {
          LmmaInstruction i{2, 64, 4, a, w, acc, o};
          bool valid = true;
          try {
            validate_lmma(i);
          } catch (const std::invalid_argument&) {
            valid = false;
          }
          if (valid) continue;
          ++negatives;
          std::string text = std::string("lmma.m2n64k4.") + dtype_name(a) + "." + dtype_name(w) +
                             "." + dtype_name(acc) + "." + dtype_name(o);
          try {
            parse_lmma(text);
            ok = false;  // must reject
          } catch (const std::invalid_argument& e) {
            if (std::string(e.what()).find("invalid LMMA instruction") == std::string::npos)
              ok = false;
          }
        }
  for (const char* bad : {"", "lmma", "lmma.", "lmma.m2n64k4", "lmma.m2n64k4.fp16.int1.fp32",
                          "LMMA.m2n64k4.fp16.int1.fp32.fp16", "lmma.mXn64k4.fp16.int1.fp32.fp16",
                          "lmma.m2n64k4.fp16.int1.fp32.fp16 "}) {
    try {
      parse_lmma(bad);
      ok = false;
    } catch (const std::invalid_argument&) {
    }
  }
  char detail[64];
  std::snprintf(detail, sizeof detail, "%d invalid combinations rejected", negatives);
  report(9, "LMMA round-trip and negative-corpus rejection", ok && negatives >= 50, detail);
}

// --------------------------------------------------------------- criterion 10
void criterion_bit_serial_scaling() {
  Pcg32 rng(10);
  Matrix a = random_activations(rng, 16, 96, Dtype::fp16);
  auto act = make_activation_tile(a, Dtype::fp16);
  Matrix w = random_weights(rng, 24, 96);
  GemmConfig cfg;
  cfg.group_k = 4;
  uint64_t base = 0;
  bool ok = true;
  for (int w_bits = 1; w_bits <= 4; ++w_bits) {
    auto qw = reinterpret_symmetric(quantize_weights(w, w_bits, QuantMode::symmetric));
    GemmStats stats;
    lut_mpgemm(act, pack_weights(qw), cfg, &stats);
    if (w_bits == 1) base = stats.lookups;
    if (stats.lookups != static_cast<uint64_t>(w_bits) * base) ok = false;
  }
  report(10, "lookup count scales as W_BIT x the one-bit count", ok && base > 0);
}

}  // namespace

int main() {
  criterion_oracle_equivalence();
  criterion_worked_example();
  criterion_symmetry();
  criterion_reinterpretation();
  criterion_table_quantization();
  criterion_dse();
  criterion_pass_correctness();
  criterion_simulator();
  criterion_isa();
  criterion_bit_serial_scaling();
  if (g_failures) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
