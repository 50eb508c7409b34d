#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lutcore/isa.hpp"
#include "lutcore/lut_engine.hpp"
#include "lutcore/matrix.hpp"

namespace lutcore {

enum class OpKind { input, elementwise, matmul, mpgemm, precompute, lut_mpgemm, output, fused };

const char* op_kind_name(OpKind op);
OpKind op_kind_from_name(const std::string& name);

// Operator node. attrs carry shapes, dtypes, w_bits and group length as
// documented in the graph JSON schema; fused nodes carry an ordered `parts`
// list of embedded nodes.
struct Node {
  std::string id;
  OpKind op = OpKind::input;
  nlohmann::json attrs = nlohmann::json::object();
  std::vector<std::string> inputs;
};

struct Dfg {
  std::vector<Node> nodes;
  std::vector<std::string> outputs;

  const Node* find(const std::string& id) const;
  Node* find(const std::string& id);
};

// JSON interchange: {nodes:[{id, op, attrs:{...}, inputs:[ids]}], outputs:[ids]}.
Dfg dfg_from_json(const nlohmann::json& j);
nlohmann::json dfg_to_json(const Dfg& g);

// Rejects duplicate ids, dangling inputs, cycles and inconsistent shapes.
void validate_graph(const Dfg& g);

// Node indices in a topological order (validates along the way).
std::vector<int> topo_order(const Dfg& g);

// Either a plain tensor shape or a precomputed table tensor shape.
struct ValueShape {
  bool is_tables = false;
  int rows = 0;
  int cols = 0;     // tensor columns, or group count for tables
  int group_k = 0;  // tables only
  int k_dim = 0;    // tables only: reduction length before grouping
};

std::map<std::string, ValueShape> infer_shapes(const Dfg& g);

// Replaces every mpgemm node with precompute(activation) -> lut_mpgemm;
// output ids are preserved (the lut_mpgemm node keeps the mpgemm's id).
Dfg transform_split_mpgemm(const Dfg& g);

// Merges each precompute node whose sole input is a single-consumer
// elementwise node into a fused {elementwise+precompute} node.
Dfg fuse_precompute(const Dfg& g);

// Functional interpreter. mpgemm nodes quantize their real weight operand,
// reinterpret it and evaluate through the dequantization route; lut_mpgemm
// nodes run the bit-serial table path, so pre-/post-transform graphs agree
// exactly.
std::map<std::string, Matrix> execute_graph(const Dfg& g,
                                            const std::map<std::string, Matrix>& inputs);

// Tags every lut_mpgemm node with the LMMA instruction text and its issue
// count ceil(M/m)*ceil(N/n)*ceil(K_dim/k); rejects tiles whose operand,
// table and accumulator bytes exceed on_chip_bytes.
Dfg lower_to_lmma(const Dfg& g, const LmmaInstruction& tile, double on_chip_bytes);

}  // namespace lutcore
