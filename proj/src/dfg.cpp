#include "lutcore/dfg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lutcore {

using nlohmann::json;

const char* op_kind_name(OpKind op) {
  switch (op) {
    case OpKind::input: return "input";
    case OpKind::elementwise: return "elementwise";
    case OpKind::matmul: return "matmul";
    case OpKind::mpgemm: return "mpgemm";
    case OpKind::precompute: return "precompute";
    case OpKind::lut_mpgemm: return "lut_mpgemm";
    case OpKind::output: return "output";
    case OpKind::fused: return "fused";
  }
  throw std::invalid_argument("unknown op kind");
}

OpKind op_kind_from_name(const std::string& name) {
  for (OpKind op : {OpKind::input, OpKind::elementwise, OpKind::matmul, OpKind::mpgemm,
                    OpKind::precompute, OpKind::lut_mpgemm, OpKind::output, OpKind::fused}) {
    if (name == op_kind_name(op)) return op;
  }
  throw std::invalid_argument("unknown op kind '" + name + "'");
}

const Node* Dfg::find(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

Node* Dfg::find(const std::string& id) {
  for (auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

Dfg dfg_from_json(const json& j) {
  Dfg g;
  for (const auto& jn : j.at("nodes")) {
    Node n;
    n.id = jn.at("id").get<std::string>();
    n.op = op_kind_from_name(jn.at("op").get<std::string>());
    if (jn.contains("attrs")) n.attrs = jn.at("attrs");
    if (jn.contains("inputs")) n.inputs = jn.at("inputs").get<std::vector<std::string>>();
    g.nodes.push_back(std::move(n));
  }
  if (j.contains("outputs")) g.outputs = j.at("outputs").get<std::vector<std::string>>();
  validate_graph(g);
  return g;
}

json dfg_to_json(const Dfg& g) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : g.nodes) {
    j["nodes"].push_back(
        {{"id", n.id}, {"op", op_kind_name(n.op)}, {"attrs", n.attrs}, {"inputs", n.inputs}});
  }
  j["outputs"] = g.outputs;
  return j;
}

std::vector<int> topo_order(const Dfg& g) {
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    if (!index.emplace(g.nodes[i].id, i).second)
      throw std::invalid_argument("duplicate node id '" + g.nodes[i].id + "'");
  }
  std::vector<int> state(g.nodes.size(), 0);  // 0 unseen, 1 visiting, 2 done
  std::vector<int> order;
  order.reserve(g.nodes.size());
  // iterative DFS
  for (int root = 0; root < static_cast<int>(g.nodes.size()); ++root) {
    if (state[root]) continue;
    std::vector<std::pair<int, size_t>> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
      auto& [i, edge] = stack.back();
      if (edge < g.nodes[i].inputs.size()) {
        const std::string& dep = g.nodes[i].inputs[edge++];
        auto it = index.find(dep);
        if (it == index.end())
          throw std::invalid_argument("node '" + g.nodes[i].id + "' references missing input '" + dep + "'");
        if (state[it->second] == 1) throw std::invalid_argument("graph contains a cycle");
        if (state[it->second] == 0) {
          state[it->second] = 1;
          stack.emplace_back(it->second, 0);
        }
      } else {
        state[i] = 2;
        order.push_back(i);
        stack.pop_back();
      }
    }
  }
  return order;
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

GemmConfig gemm_config_from_attrs(const json& attrs) {
  GemmConfig cfg;
  cfg.group_k = attr_int(attrs, "group_k", 4);
  cfg.quantize_tables = attr_bool(attrs, "table_quant", false);
  Dtype d;
  if (!dtype_from_name(attr_str(attrs, "a_dtype", "fp16"), d) || !is_activation_dtype(d))
    throw std::invalid_argument("bad a_dtype attr");
  cfg.a_dtype = d;
  return cfg;
}

QuantMode quant_mode_from_attrs(const json& attrs) {
  std::string m = attr_str(attrs, "mode", "symmetric");
  if (m == "symmetric") return QuantMode::symmetric;
  if (m == "asymmetric") return QuantMode::asymmetric;
  throw std::invalid_argument("bad quantization mode '" + m + "'");
}

ValueShape infer_node_shape(const Node& n, const std::vector<ValueShape>& in);

ValueShape tensor_shape(int r, int c) { return ValueShape{false, r, c, 0, 0}; }

ValueShape infer_part_chain(const json& parts, ValueShape cur) {
  for (const auto& jp : parts) {
    Node part;
    part.op = op_kind_from_name(jp.at("op").get<std::string>());
    if (jp.contains("attrs")) part.attrs = jp.at("attrs");
    cur = infer_node_shape(part, {cur});
  }
  return cur;
}

ValueShape infer_node_shape(const Node& n, const std::vector<ValueShape>& in) {
  auto need = [&](size_t count) {
    if (in.size() != count)
      throw std::invalid_argument("node '" + n.id + "' expects " + std::to_string(count) + " inputs");
  };
  switch (n.op) {
    case OpKind::input: {
      auto dims = n.attrs.at("shape").get<std::vector<int>>();
      if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1)
        throw std::invalid_argument("input node '" + n.id + "' needs a [rows, cols] shape");
      return tensor_shape(dims[0], dims[1]);
    }
    case OpKind::elementwise:
    case OpKind::output:
      need(1);
      if (in[0].is_tables) throw std::invalid_argument("node '" + n.id + "' cannot consume tables");
      return in[0];
    case OpKind::matmul:
    case OpKind::mpgemm: {
      need(2);
      if (in[0].is_tables || in[1].is_tables)
        throw std::invalid_argument("node '" + n.id + "' cannot consume tables");
      if (in[0].cols != in[1].cols)
        throw std::invalid_argument("node '" + n.id + "': reduction dims disagree");
      return tensor_shape(in[0].rows, in[1].rows);
    }
    case OpKind::precompute: {
      need(1);
      if (in[0].is_tables) throw std::invalid_argument("node '" + n.id + "' cannot consume tables");
      int k = attr_int(n.attrs, "group_k", 4);
      ValueShape s;
      s.is_tables = true;
      s.rows = in[0].rows;
      s.group_k = k;
      s.k_dim = in[0].cols;
      s.cols = (in[0].cols + k - 1) / k;
      return s;
    }
    case OpKind::lut_mpgemm: {
      need(2);
      if (!in[0].is_tables)
        throw std::invalid_argument("node '" + n.id + "': first input must be tables");
      if (in[1].is_tables)
        throw std::invalid_argument("node '" + n.id + "': second input must be a weight tensor");
      int k = attr_int(n.attrs, "group_k", 4);
      if (k != in[0].group_k || (in[1].cols + k - 1) / k != in[0].cols)
        throw std::invalid_argument("node '" + n.id + "': table/weight geometry disagrees");
      return tensor_shape(in[0].rows, in[1].rows);
    }
    case OpKind::fused:
      need(1);
      return infer_part_chain(n.attrs.at("parts"), in[0]);
  }
  throw std::invalid_argument("unknown op kind");
}

}  // namespace

std::map<std::string, ValueShape> infer_shapes(const Dfg& g) {
  auto order = topo_order(g);
  std::map<std::string, ValueShape> shapes;
  for (int i : order) {
    const Node& n = g.nodes[i];
    std::vector<ValueShape> in;
    in.reserve(n.inputs.size());
    for (const auto& dep : n.inputs) in.push_back(shapes.at(dep));
    shapes[n.id] = infer_node_shape(n, in);
  }
  return shapes;
}

void validate_graph(const Dfg& g) {
  infer_shapes(g);  // checks ids, acyclicity and shape consistency
  for (const auto& out : g.outputs) {
    if (!g.find(out)) throw std::invalid_argument("unknown output id '" + out + "'");
  }
}

Dfg transform_split_mpgemm(const Dfg& g) {
  Dfg out;
  out.outputs = g.outputs;
  std::set<std::string> ids;
  for (const auto& n : g.nodes) ids.insert(n.id);
  for (const auto& n : g.nodes) {
    if (n.op != OpKind::mpgemm) {
      out.nodes.push_back(n);
      continue;
    }
    std::string pre_id = n.id + "_precompute";
    while (ids.count(pre_id)) pre_id += "_";
    ids.insert(pre_id);

    Node pre;
    pre.id = pre_id;
    pre.op = OpKind::precompute;
    for (const char* key : {"group_k", "a_dtype", "table_quant"}) {
      if (n.attrs.contains(key)) pre.attrs[key] = n.attrs.at(key);
    }
    pre.inputs = {n.inputs.at(0)};

    Node lut;
    lut.id = n.id;  // keeps output ids stable
    lut.op = OpKind::lut_mpgemm;
    lut.attrs = n.attrs;
    lut.inputs = {pre_id, n.inputs.at(1)};

    out.nodes.push_back(std::move(pre));
    out.nodes.push_back(std::move(lut));
  }
  validate_graph(out);
  return out;
}

Dfg fuse_precompute(const Dfg& g) {
  std::map<std::string, int> consumers;
  for (const auto& n : g.nodes) {
    for (const auto& dep : n.inputs) ++consumers[dep];
  }
  for (const auto& id : g.outputs) ++consumers[id];

  std::set<std::string> absorbed;  // elementwise nodes merged into a fused node
  Dfg out;
  out.outputs = g.outputs;
  for (const auto& n : g.nodes) {
    if (n.op != OpKind::precompute || n.inputs.size() != 1) continue;
    const Node* producer = g.find(n.inputs[0]);
    if (producer && producer->op == OpKind::elementwise && consumers[producer->id] == 1) {
      absorbed.insert(producer->id);
    }
  }
  for (const auto& n : g.nodes) {
    if (absorbed.count(n.id)) continue;
    if (n.op == OpKind::precompute && n.inputs.size() == 1 && absorbed.count(n.inputs[0])) {
      const Node* producer = g.find(n.inputs[0]);
      Node fused;
      fused.id = n.id;  // consumers of the precompute output stay wired
      fused.op = OpKind::fused;
      fused.attrs["parts"] = json::array(
          {{{"op", op_kind_name(producer->op)}, {"attrs", producer->attrs}},
           {{"op", op_kind_name(n.op)}, {"attrs", n.attrs}}});
      fused.inputs = producer->inputs;
      out.nodes.push_back(std::move(fused));
    } else {
      out.nodes.push_back(n);
    }
  }
  validate_graph(out);
  return out;
}

namespace {

struct Value {
  bool is_tables = false;
  Matrix mat;
  TableTensor tables;
};

double apply_ew(const std::string& fn, double c, double x) {
  if (fn == "identity") return x;
  if (fn == "add_const") return x + c;
  if (fn == "mul_const") return x * c;
  if (fn == "relu") return x > 0.0 ? x : 0.0;
  if (fn == "silu") return x / (1.0 + std::exp(-x));
  throw std::invalid_argument("unknown elementwise fn '" + fn + "'");
}

Value eval_node(const Node& n, std::vector<Value> in);

Value eval_part_chain(const json& parts, Value cur) {
  for (const auto& jp : parts) {
    Node part;
    part.id = "(fused part)";
    part.op = op_kind_from_name(jp.at("op").get<std::string>());
    if (jp.contains("attrs")) part.attrs = jp.at("attrs");
    cur = eval_node(part, {std::move(cur)});
  }
  return cur;
}

// Quantize-and-reinterpret of a real weight operand, shared by the mpgemm
// reference route and the split lut route so both see identical parameters.
QuantizedWeights graph_weights(const json& attrs, const Matrix& w) {
  int w_bits = attr_int(attrs, "w_bits", 2);
  QuantizedWeights qw = quantize_weights(w, w_bits, quant_mode_from_attrs(attrs));
  return reinterpret_symmetric(qw);
}

Value eval_node(const Node& n, std::vector<Value> in) {
  switch (n.op) {
    case OpKind::input:
      throw std::invalid_argument("missing tensor for input node '" + n.id + "'");
    case OpKind::output:
      return std::move(in.at(0));
    case OpKind::elementwise: {
      Value v = std::move(in.at(0));
      std::string fn = attr_str(n.attrs, "fn", "identity");
      double c = n.attrs.contains("c") ? n.attrs.at("c").get<double>() : 0.0;
      for (auto& x : v.mat.data) x = apply_ew(fn, c, x);
      return v;
    }
    case OpKind::matmul: {
      const Matrix& a = in.at(0).mat;
      const Matrix& w = in.at(1).mat;
      Matrix o(a.rows, w.rows);
      for (int r = 0; r < a.rows; ++r)
        for (int c = 0; c < w.rows; ++c) {
          double acc = 0.0;
          for (int kk = 0; kk < a.cols; ++kk) acc += a.at(r, kk) * w.at(c, kk);
          o.at(r, c) = acc;
        }
      return Value{false, std::move(o), {}};
    }
    case OpKind::mpgemm: {
      GemmConfig cfg = gemm_config_from_attrs(n.attrs);
      ActivationTile act = make_activation_tile(std::move(in.at(0).mat), cfg.a_dtype);
      QuantizedWeights qw = graph_weights(n.attrs, in.at(1).mat);
      return Value{false, reference_mpgemm(act, qw, cfg), {}};
    }
    case OpKind::precompute: {
      GemmConfig cfg = gemm_config_from_attrs(n.attrs);
      ActivationTile act = make_activation_tile(std::move(in.at(0).mat), cfg.a_dtype);
      Value v;
      v.is_tables = true;
      v.tables = precompute_operator(act, cfg);
      return v;
    }
    case OpKind::lut_mpgemm: {
      GemmConfig cfg = gemm_config_from_attrs(n.attrs);
      if (!in.at(0).is_tables)
        throw std::invalid_argument("node '" + n.id + "': expected precomputed tables");
      PackedWeights pw = pack_weights(graph_weights(n.attrs, in.at(1).mat));
      return Value{false, lut_mpgemm(in.at(0).tables, pw, cfg), {}};
    }
    case OpKind::fused:
      return eval_part_chain(n.attrs.at("parts"), std::move(in.at(0)));
  }
  throw std::invalid_argument("unknown op kind");
}

}  // namespace

std::map<std::string, Matrix> execute_graph(const Dfg& g,
                                            const std::map<std::string, Matrix>& inputs) {
  auto shapes = infer_shapes(g);
  auto order = topo_order(g);
  std::map<std::string, Value> values;
  for (int i : order) {
    const Node& n = g.nodes[i];
    if (n.op == OpKind::input) {
      auto it = inputs.find(n.id);
      if (it == inputs.end())
        throw std::invalid_argument("missing tensor for input node '" + n.id + "'");
      const ValueShape& s = shapes.at(n.id);
      if (it->second.rows != s.rows || it->second.cols != s.cols)
        throw std::invalid_argument("tensor shape mismatch for input node '" + n.id + "'");
      values[n.id] = Value{false, it->second, {}};
      continue;
    }
    std::vector<Value> in;
    in.reserve(n.inputs.size());
    for (const auto& dep : n.inputs) in.push_back(values.at(dep));
    values[n.id] = eval_node(n, std::move(in));
  }
  std::map<std::string, Matrix> out;
  for (const auto& id : g.outputs) {
    const Value& v = values.at(id);
    if (v.is_tables) throw std::invalid_argument("output node '" + id + "' produces tables, not a tensor");
    out[id] = v.mat;
  }
  return out;
}

Dfg lower_to_lmma(const Dfg& g, const LmmaInstruction& tile, double on_chip_bytes) {
  validate_lmma(tile);
  auto shapes = infer_shapes(g);
  Dfg out = g;
  bool any = false;
  for (auto& n : out.nodes) {
    if (n.op != OpKind::lut_mpgemm) continue;
    any = true;
    const ValueShape& tbl = shapes.at(n.inputs.at(0));
    const ValueShape& w = shapes.at(n.inputs.at(1));
    int w_bits = attr_int(n.attrs, "w_bits", 2);
    bool tq = attr_bool(n.attrs, "table_quant", false);
    double a_bytes = bit_width(tile.a_dtype) / 8.0;
    double tile_bytes = tile.m * tile.k * a_bytes +
                        std::ceil(tile.n * tile.k * w_bits / 8.0) +
                        tile.m * std::ldexp(1.0, tile.k - 1) * (tq ? 1.0 : a_bytes) +
                        static_cast<double>(tile.m) * tile.n * 4.0;
    if (tile_bytes > on_chip_bytes)
      throw std::invalid_argument("LMMA tile needs " + std::to_string(tile_bytes) +
                                  " bytes on-chip, capacity is " + std::to_string(on_chip_bytes));
    long long issues = static_cast<long long>((tbl.rows + tile.m - 1) / tile.m) *
                       ((w.rows + tile.n - 1) / tile.n) *
                       ((tbl.k_dim + tile.k - 1) / tile.k);
    n.attrs["lmma"] = encode_lmma(tile);
    n.attrs["lmma_issues"] = issues;
  }
  if (!any) throw std::invalid_argument("lower_to_lmma: graph has no lut_mpgemm nodes");
  return out;
}

}  // namespace lutcore
