#pragma once

#include <cstdint>
#include <string_view>

namespace lutcore {

// Narrow formats the engine manipulates. int1..int4 are weight-only;
// fp16/fp8/int8/int16 carry activations; fp32/int32 appear only as
// accumulation/output types in LMMA instructions.
enum class Dtype : uint8_t {
  fp16,
  fp8_e4m3,
  int16,
  int8,
  int4,
  int3,
  int2,
  int1,
  fp32,
  int32,
};

int bit_width(Dtype d);
const char* dtype_name(Dtype d);  // canonical lowercase token ("fp8" for fp8_e4m3)
bool dtype_from_name(std::string_view s, Dtype& out);

bool is_weight_dtype(Dtype d);      // int1..int4
bool is_activation_dtype(Dtype d);  // fp16, fp8, int8, int16
bool is_integer_dtype(Dtype d);

// Nearest IEEE-754 binary16 value, round-to-nearest-even, saturating at
// +/-65504. Input must be finite.
double round_to_fp16(double x);

// Nearest FP8 E4M3 value, round-to-nearest-even, saturating at +/-448.
double round_to_fp8_e4m3(double x);

// Single rounding to binary32.
double round_to_fp32(double x);

// Round-half-to-even, then clamp to the representable range of a
// `bits`-wide integer. bits in [1, 16] for the narrow formats; 32 is
// accepted for the LMMA int32 accumulation cast.
int64_t clamp_round_int(double x, int bits, bool is_signed);

// Rounds x to the given activation dtype (identity grid projection).
double round_activation(double x, Dtype d);

}  // namespace lutcore
