#include "lutcore/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace lutcore {

int bit_width(Dtype d) {
  switch (d) {
    case Dtype::fp16: return 16;
    case Dtype::fp8_e4m3: return 8;
    case Dtype::int16: return 16;
    case Dtype::int8: return 8;
    case Dtype::int4: return 4;
    case Dtype::int3: return 3;
    case Dtype::int2: return 2;
    case Dtype::int1: return 1;
    case Dtype::fp32: return 32;
    case Dtype::int32: return 32;
  }
  throw std::invalid_argument("unknown dtype");
}

const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::fp16: return "fp16";
    case Dtype::fp8_e4m3: return "fp8";
    case Dtype::int16: return "int16";
    case Dtype::int8: return "int8";
    case Dtype::int4: return "int4";
    case Dtype::int3: return "int3";
    case Dtype::int2: return "int2";
    case Dtype::int1: return "int1";
    case Dtype::fp32: return "fp32";
    case Dtype::int32: return "int32";
  }
  throw std::invalid_argument("unknown dtype");
}

bool dtype_from_name(std::string_view s, Dtype& out) {
  if (s == "fp16") out = Dtype::fp16;
  else if (s == "fp8") out = Dtype::fp8_e4m3;
  else if (s == "int16") out = Dtype::int16;
  else if (s == "int8") out = Dtype::int8;
  else if (s == "int4") out = Dtype::int4;
  else if (s == "int3") out = Dtype::int3;
  else if (s == "int2") out = Dtype::int2;
  else if (s == "int1") out = Dtype::int1;
  else if (s == "fp32") out = Dtype::fp32;
  else if (s == "int32") out = Dtype::int32;
  else return false;
  return true;
}

bool is_weight_dtype(Dtype d) {
  return d == Dtype::int1 || d == Dtype::int2 || d == Dtype::int3 || d == Dtype::int4;
}

bool is_activation_dtype(Dtype d) {
  return d == Dtype::fp16 || d == Dtype::fp8_e4m3 || d == Dtype::int8 || d == Dtype::int16;
}

bool is_integer_dtype(Dtype d) {
  switch (d) {
    case Dtype::fp16:
    case Dtype::fp8_e4m3:
    case Dtype::fp32:
      return false;
    default:
      return true;
  }
}

namespace {

// Round |x| onto a binary float grid with `sig_bits` significand bits
// (implicit bit included), minimum normal exponent `min_exp` (value 2^min_exp)
// and saturation at max_finite. nearbyint under the default FE_TONEAREST
// rounding gives round-to-nearest-even; the quotient ax/ulp stays well below
// 2^53 so the scaling is exact.
double round_binary(double x, int sig_bits, int min_exp, double max_finite) {
  if (x == 0.0 || std::isnan(x)) return x;
  double sign = x < 0 ? -1.0 : 1.0;
  double ax = std::fabs(x);
  int e;
  std::frexp(ax, &e);  // ax = m * 2^e, m in [0.5, 1)
  int ulp_exp = e - sig_bits;
  int min_ulp_exp = min_exp - (sig_bits - 1);  // subnormal quantum
  if (ulp_exp < min_ulp_exp) ulp_exp = min_ulp_exp;
  double ulp = std::ldexp(1.0, ulp_exp);
  double r = std::nearbyint(ax / ulp) * ulp;
  if (r > max_finite) r = max_finite;
  return sign * r;
}

}  // namespace

double round_to_fp16(double x) { return round_binary(x, 11, -14, 65504.0); }

double round_to_fp8_e4m3(double x) { return round_binary(x, 4, -6, 448.0); }

double round_to_fp32(double x) { return static_cast<double>(static_cast<float>(x)); }

int64_t clamp_round_int(double x, int bits, bool is_signed) {
  if (bits < 1 || bits > 32) throw std::invalid_argument("clamp_round_int: bits out of range");
  double r = std::nearbyint(x);
  double lo, hi;
  if (is_signed) {
    lo = -std::ldexp(1.0, bits - 1);
    hi = std::ldexp(1.0, bits - 1) - 1.0;
  } else {
    lo = 0.0;
    hi = std::ldexp(1.0, bits) - 1.0;
  }
  if (r < lo) r = lo;
  if (r > hi) r = hi;
  return static_cast<int64_t>(r);
}

double round_activation(double x, Dtype d) {
  switch (d) {
    case Dtype::fp16: return round_to_fp16(x);
    case Dtype::fp8_e4m3: return round_to_fp8_e4m3(x);
    case Dtype::fp32: return round_to_fp32(x);
    case Dtype::int16: return static_cast<double>(clamp_round_int(x, 16, true));
    case Dtype::int8: return static_cast<double>(clamp_round_int(x, 8, true));
    case Dtype::int32: return static_cast<double>(clamp_round_int(x, 32, true));
    default:
      throw std::invalid_argument("round_activation: not an activation dtype");
  }
}

}  // namespace lutcore
