#pragma once

#include <string>
#include <vector>

#include "lutcore/lut_engine.hpp"
#include "lutcore/matrix.hpp"
#include "lutcore/numerics.hpp"

namespace lutcore {

// Warp-level tile contract: O[m,n] = A[m,k] x W[n,k] + Accum[m,n].
struct LmmaInstruction {
  int m = 0;
  int n = 0;
  int k = 0;
  Dtype a_dtype = Dtype::fp16;
  Dtype w_dtype = Dtype::int1;
  Dtype accum_dtype = Dtype::fp32;
  Dtype o_dtype = Dtype::fp16;

  bool operator==(const LmmaInstruction&) const = default;
};

// Grammar: lmma.m<M>n<N>k<K>.<a>.<w>.<accum>.<o>, lowercase, dot-separated
// dtype tokens. Throws std::invalid_argument with a diagnostic naming the
// violated rule; never partially parses.
LmmaInstruction parse_lmma(const std::string& text);

// Canonical text; parse_lmma(encode_lmma(x)) == x.
std::string encode_lmma(const LmmaInstruction& instr);

// Validates the dtype combination rules; throws with a diagnostic on
// violation. parse_lmma calls this internally.
void validate_lmma(const LmmaInstruction& instr);

// All valid (a, w, accum, o) dtype combinations for a given tile shape.
std::vector<LmmaInstruction> enumerate_valid_lmma(int m, int n, int k);

// Executes one instruction: LUT-based product with group length instr.k,
// plus accumulator, cast through accum_dtype then o_dtype semantics.
// w must carry reinterpreted, packed weights of shape [n, k].
Matrix execute_lmma(const LmmaInstruction& instr, const ActivationTile& a,
                    const PackedWeights& w, const Matrix& accum);

}  // namespace lutcore
