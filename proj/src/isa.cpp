#include "lutcore/isa.hpp"

#include <cctype>
#include <stdexcept>

namespace lutcore {

namespace {

void fail(const std::string& text, const std::string& why) {
  throw std::invalid_argument("invalid LMMA instruction '" + text + "': " + why);
}

// Parses <letter><positive integer> at pos; advances pos past the digits.
int parse_dim(const std::string& text, size_t& pos, char letter) {
  if (pos >= text.size() || text[pos] != letter)
    fail(text, std::string("expected '") + letter + "' in shape token");
  ++pos;
  size_t start = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos == start) fail(text, std::string("missing digits after '") + letter + "'");
  long v = std::stol(text.substr(start, pos - start));
  if (v < 1 || v > 1 << 20) fail(text, std::string("dimension ") + letter + " out of range");
  return static_cast<int>(v);
}

Dtype parse_dtype_token(const std::string& text, const std::string& token, const char* slot) {
  Dtype d;
  if (!dtype_from_name(token, d))
    fail(text, std::string("unknown ") + slot + " dtype token '" + token + "'");
  return d;
}

}  // namespace

void validate_lmma(const LmmaInstruction& i) {
  std::string t = encode_lmma(i);
  if (i.m < 1 || i.n < 1 || i.k < 1) fail(t, "tile dimensions must be positive");
  if (!is_weight_dtype(i.w_dtype)) fail(t, "weight dtype must be int1-int4");
  if (!is_activation_dtype(i.a_dtype)) fail(t, "activation dtype must be fp16, fp8, int8 or int16");
  if (i.accum_dtype != Dtype::fp32 && i.accum_dtype != Dtype::int32)
    fail(t, "accum dtype must be fp32 or int32");
  if (i.o_dtype != Dtype::fp16 && i.o_dtype != Dtype::fp32 && i.o_dtype != Dtype::int8 &&
      i.o_dtype != Dtype::int32)
    fail(t, "output dtype must be fp16, fp32, int8 or int32");
  bool int_act = is_integer_dtype(i.a_dtype);
  if (int_act && i.accum_dtype != Dtype::int32)
    fail(t, "integer activations require int32 accumulation");
  if (int_act && !is_integer_dtype(i.o_dtype))
    fail(t, "integer activations require an integer output dtype");
  if (!int_act && i.accum_dtype != Dtype::fp32)
    fail(t, "float activations require fp32 accumulation");
  if (!int_act && is_integer_dtype(i.o_dtype))
    fail(t, "float activations require a float output dtype");
}

LmmaInstruction parse_lmma(const std::string& text) {
  const std::string prefix = "lmma.";
  if (text.rfind(prefix, 0) != 0) fail(text, "missing 'lmma.' prefix");
  size_t pos = prefix.size();
  LmmaInstruction instr;
  instr.m = parse_dim(text, pos, 'm');
  instr.n = parse_dim(text, pos, 'n');
  instr.k = parse_dim(text, pos, 'k');

  Dtype* slots[4] = {&instr.a_dtype, &instr.w_dtype, &instr.accum_dtype, &instr.o_dtype};
  const char* names[4] = {"activation", "weight", "accum", "output"};
  for (int s = 0; s < 4; ++s) {
    if (pos >= text.size() || text[pos] != '.') fail(text, "expected '.' before dtype tokens");
    ++pos;
    size_t start = pos;
    while (pos < text.size() && text[pos] != '.') ++pos;
    *slots[s] = parse_dtype_token(text, text.substr(start, pos - start), names[s]);
  }
  if (pos != text.size()) fail(text, "trailing characters after output dtype");
  validate_lmma(instr);
  return instr;
}

std::string encode_lmma(const LmmaInstruction& i) {
  return "lmma.m" + std::to_string(i.m) + "n" + std::to_string(i.n) + "k" + std::to_string(i.k) +
         "." + dtype_name(i.a_dtype) + "." + dtype_name(i.w_dtype) + "." +
         dtype_name(i.accum_dtype) + "." + dtype_name(i.o_dtype);
}

std::vector<LmmaInstruction> enumerate_valid_lmma(int m, int n, int k) {
  const Dtype acts[] = {Dtype::fp16, Dtype::fp8_e4m3, Dtype::int8, Dtype::int16};
  const Dtype weights[] = {Dtype::int1, Dtype::int2, Dtype::int3, Dtype::int4};
  const Dtype accums[] = {Dtype::fp32, Dtype::int32};
  const Dtype outs[] = {Dtype::fp16, Dtype::fp32, Dtype::int8, Dtype::int32};
  std::vector<LmmaInstruction> all;
  for (Dtype a : acts)
    for (Dtype w : weights)
      for (Dtype acc : accums)
        for (Dtype o : outs) {
          LmmaInstruction i{m, n, k, a, w, acc, o};
          try {
            validate_lmma(i);
          } catch (const std::invalid_argument&) {
            continue;
          }
          all.push_back(i);
        }
  return all;
}

namespace {

double cast_value(double v, Dtype d) {
  switch (d) {
    case Dtype::fp32: return round_to_fp32(v);
    case Dtype::fp16: return round_to_fp16(v);
    case Dtype::int32: return static_cast<double>(clamp_round_int(v, 32, true));
    case Dtype::int8: return static_cast<double>(clamp_round_int(v, 8, true));
    default: throw std::invalid_argument("unsupported cast dtype");
  }
}

}  // namespace

Matrix execute_lmma(const LmmaInstruction& instr, const ActivationTile& a, const PackedWeights& w,
                    const Matrix& accum) {
  validate_lmma(instr);
  if (a.dtype != instr.a_dtype) throw std::invalid_argument("execute_lmma: activation dtype mismatch");
  if (w.planes.w_bits != bit_width(instr.w_dtype))
    throw std::invalid_argument("execute_lmma: weight dtype mismatch");
  if (a.values.rows != instr.m || a.values.cols != instr.k)
    throw std::invalid_argument("execute_lmma: activation tile shape mismatch");
  if (w.planes.n_out != instr.n || w.planes.k_dim != instr.k)
    throw std::invalid_argument("execute_lmma: weight tile shape mismatch");
  if (accum.rows != instr.m || accum.cols != instr.n)
    throw std::invalid_argument("execute_lmma: accumulator tile shape mismatch");

  GemmConfig cfg;
  cfg.group_k = instr.k;  // rejected by the engine outside [2, 8]
  cfg.a_dtype = instr.a_dtype;
  Matrix prod = lut_mpgemm(a, w, cfg);
  Matrix out(instr.m, instr.n);
  for (int r = 0; r < instr.m; ++r) {
    for (int c = 0; c < instr.n; ++c) {
      double v = prod.at(r, c) + accum.at(r, c);
      v = cast_value(v, instr.accum_dtype);
      out.at(r, c) = cast_value(v, instr.o_dtype);
    }
  }
  return out;
}

}  // namespace lutcore
