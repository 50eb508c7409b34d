#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "lutcore/dfg.hpp"
#include "lutcore/rng.hpp"

using namespace lutcore;
using nlohmann::json;

namespace {

Node input_node(const std::string& id, int rows, int cols) {
  Node n;
  n.id = id;
  n.op = OpKind::input;
  n.attrs["shape"] = {rows, cols};
  return n;
}

Node ew_node(const std::string& id, const std::string& fn, double c, const std::string& in) {
  Node n;
  n.id = id;
  n.op = OpKind::elementwise;
  n.attrs["fn"] = fn;
  if (fn == "add_const" || fn == "mul_const") n.attrs["c"] = c;
  n.attrs["a_dtype"] = "int8";
  n.inputs = {in};
  return n;
}

Node mpgemm_node(const std::string& id, const std::string& act, const std::string& w,
                 int w_bits = 2) {
  Node n;
  n.id = id;
  n.op = OpKind::mpgemm;
  n.attrs["w_bits"] = w_bits;
  n.attrs["a_dtype"] = "int8";
  n.attrs["group_k"] = 4;
  n.attrs["mode"] = "symmetric";
  n.inputs = {act, w};
  return n;
}

Dfg simple_graph() {
  Dfg g;
  g.nodes = {input_node("x", 3, 8), input_node("w", 5, 8), ew_node("pre", "add_const", 1.0, "x"),
             mpgemm_node("gemm", "pre", "w")};
  g.outputs = {"gemm"};
  validate_graph(g);
  return g;
}

Matrix random_int8(Pcg32& rng, int r, int c) {
  Matrix m(r, c);
  for (auto& v : m.data) v = std::floor(rng.uniform(-20.0, 21.0));
  return m;
}

Matrix random_real(Pcg32& rng, int r, int c) {
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("json round-trip preserves the graph") {
  Dfg g = simple_graph();
  Dfg back = dfg_from_json(dfg_to_json(g));
  CHECK(dfg_to_json(back) == dfg_to_json(g));
}

TEST_CASE("graph validation catches structural errors") {
  Dfg g = simple_graph();
  g.nodes.push_back(input_node("x", 2, 2));  // duplicate id
  CHECK_THROWS_AS(validate_graph(g), std::invalid_argument);

  Dfg dangling = simple_graph();
  dangling.nodes[2].inputs = {"nope"};
  CHECK_THROWS_AS(validate_graph(dangling), std::invalid_argument);

  Dfg cyclic = simple_graph();
  cyclic.nodes[2].inputs = {"gemm"};
  CHECK_THROWS_AS(validate_graph(cyclic), std::invalid_argument);

  Dfg badshape = simple_graph();
  badshape.nodes[1].attrs["shape"] = {5, 9};  // reduction dim disagrees
  CHECK_THROWS_AS(validate_graph(badshape), std::invalid_argument);
}

TEST_CASE("split pass rewrites every mpgemm and preserves output ids") {
  Dfg g = simple_graph();
  Dfg t = transform_split_mpgemm(g);
  CHECK(t.nodes.size() == g.nodes.size() + 1);
  CHECK(t.outputs == g.outputs);
  const Node* pre = t.find("gemm_precompute");
  const Node* lut = t.find("gemm");
  REQUIRE(pre);
  REQUIRE(lut);
  CHECK(pre->op == OpKind::precompute);
  CHECK(lut->op == OpKind::lut_mpgemm);
  CHECK(lut->inputs == std::vector<std::string>{"gemm_precompute", "w"});

  // two mpgemm nodes -> node count +2
  Dfg g2 = simple_graph();
  g2.nodes.push_back(input_node("w2", 4, 5));
  g2.nodes.push_back(mpgemm_node("gemm2", "gemm", "w2"));
  g2.outputs = {"gemm2"};
  validate_graph(g2);
  CHECK(transform_split_mpgemm(g2).nodes.size() == g2.nodes.size() + 2);

  // elementwise-only graphs pass through untouched
  Dfg ew;
  ew.nodes = {input_node("x", 2, 2), ew_node("e", "relu", 0.0, "x")};
  ew.outputs = {"e"};
  CHECK(dfg_to_json(transform_split_mpgemm(ew)) == dfg_to_json(ew));
}

TEST_CASE("split pass is idempotent") {
  Dfg t = transform_split_mpgemm(simple_graph());
  CHECK(dfg_to_json(transform_split_mpgemm(t)) == dfg_to_json(t));
}

TEST_CASE("fusion merges single-consumer elementwise producers") {
  Dfg t = transform_split_mpgemm(simple_graph());
  Dfg f = fuse_precompute(t);
  const Node* fused = f.find("gemm_precompute");
  REQUIRE(fused);
  CHECK(fused->op == OpKind::fused);
  CHECK(fused->inputs == std::vector<std::string>{"x"});
  CHECK(fused->attrs.at("parts").size() == 2);
  CHECK(f.find("pre") == nullptr);
  CHECK(dfg_to_json(fuse_precompute(f)) == dfg_to_json(f));  // idempotent
}

TEST_CASE("fusion legality: no elementwise producer, no fusion") {
  Dfg g;
  g.nodes = {input_node("x", 3, 8), input_node("w", 5, 8), mpgemm_node("gemm", "x", "w")};
  g.outputs = {"gemm"};
  Dfg f = fuse_precompute(transform_split_mpgemm(g));
  REQUIRE(f.find("gemm_precompute"));
  CHECK(f.find("gemm_precompute")->op == OpKind::precompute);
}

TEST_CASE("fusion legality: multi-consumer elementwise stays unfused") {
  Dfg g;
  g.nodes = {input_node("x", 3, 8),  input_node("w1", 5, 8), input_node("w2", 6, 8),
             ew_node("pre", "relu", 0.0, "x"), mpgemm_node("a", "pre", "w1"),
             mpgemm_node("b", "pre", "w2")};
  g.outputs = {"a", "b"};
  validate_graph(g);
  Dfg f = fuse_precompute(transform_split_mpgemm(g));
  REQUIRE(f.find("pre"));
  CHECK(f.find("pre")->op == OpKind::elementwise);
  CHECK(f.find("a_precompute")->op == OpKind::precompute);
  CHECK(f.find("b_precompute")->op == OpKind::precompute);
}

TEST_CASE("interpreter matches across the pass pipeline") {
  Pcg32 rng(401);
  for (int trial = 0; trial < 30; ++trial) {
    Dfg g = simple_graph();
    std::map<std::string, Matrix> inputs;
    inputs["x"] = random_int8(rng, 3, 8);
    inputs["w"] = random_real(rng, 5, 8);
    auto base = execute_graph(g, inputs);
    auto split = execute_graph(transform_split_mpgemm(g), inputs);
    auto fused = execute_graph(fuse_precompute(transform_split_mpgemm(g)), inputs);
    CHECK(base.at("gemm") == split.at("gemm"));
    CHECK(base.at("gemm") == fused.at("gemm"));
  }
}

TEST_CASE("identity elementwise changes nothing numerically") {
  Dfg g;
  g.nodes = {input_node("x", 2, 4), input_node("w", 3, 4), ew_node("id", "identity", 0.0, "x"),
             mpgemm_node("gemm", "id", "w")};
  g.outputs = {"gemm"};
  Dfg direct;
  direct.nodes = {input_node("x", 2, 4), input_node("w", 3, 4), mpgemm_node("gemm", "x", "w")};
  direct.outputs = {"gemm"};
  Pcg32 rng(403);
  std::map<std::string, Matrix> inputs{{"x", random_int8(rng, 2, 4)},
                                       {"w", random_real(rng, 3, 4)}};
  CHECK(execute_graph(g, inputs).at("gemm") == execute_graph(direct, inputs).at("gemm"));
}

TEST_CASE("empty graph executes to an empty map") {
  Dfg g;
  CHECK(execute_graph(g, {}).empty());
}

TEST_CASE("interpreter rejects missing inputs and bad shapes") {
  Dfg g = simple_graph();
  CHECK_THROWS_AS(execute_graph(g, {}), std::invalid_argument);
  std::map<std::string, Matrix> bad{{"x", Matrix(3, 9)}, {"w", Matrix(5, 8)}};
  CHECK_THROWS_AS(execute_graph(g, bad), std::invalid_argument);
}

TEST_CASE("lowering annotates issue counts") {
  Dfg g;
  g.nodes = {input_node("x", 2048, 5120), input_node("w", 27648, 5120),
             mpgemm_node("gemm", "x", "w", 1)};
  g.outputs = {"gemm"};
  Dfg t = transform_split_mpgemm(g);
  LmmaInstruction tile{2, 64, 4, Dtype::int8, Dtype::int1, Dtype::int32, Dtype::int32};
  Dfg lowered = lower_to_lmma(t, tile, 1 << 20);
  const Node* lut = lowered.find("gemm");
  REQUIRE(lut);
  CHECK(lut->attrs.at("lmma") == "lmma.m2n64k4.int8.int1.int32.int32");
  CHECK(lut->attrs.at("lmma_issues") == 1024LL * 432 * 1280);

  // tile equal to the whole problem -> one issue
  Dfg small;
  small.nodes = {input_node("x", 2, 4), input_node("w", 64, 4), mpgemm_node("g", "x", "w", 1)};
  small.outputs = {"g"};
  Dfg ts = transform_split_mpgemm(small);
  CHECK(lower_to_lmma(ts, tile, 1 << 20).find("g")->attrs.at("lmma_issues") == 1);

  CHECK_THROWS_AS(lower_to_lmma(ts, tile, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lower_to_lmma(small, tile, 1 << 20), std::invalid_argument);  // nothing to lower
}
