#pragma once

#include <cstdint>
#include <string>

#include "lutcore/matrix.hpp"
#include "lutcore/quantizer.hpp"

namespace lutcore {

// Binary tensor container:
//   magic "LUTT" | version u32 LE | dtype code u8 | flags u8 | ndim u8 |
//   dims u64[ndim] LE | payload | optional sidecar
// flags bit 0: a per-channel scale/zero sidecar (binary64 pairs) follows the
// payload. Weight payloads (codes 17..20) store w_bits bit planes of the
// unsigned codes, 8 bits per byte, little-endian within a row; all other
// payloads are raw little-endian values. Payload length must match the
// header exactly; mismatches are rejected.
namespace tensor_dtype {
inline constexpr uint8_t f64 = 1;
inline constexpr uint8_t weight_planes_base = 16;  // 16 + w_bits
}  // namespace tensor_dtype

void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

// Weights must be reinterpreted; the sidecar stores the reinterpreted
// per-channel (scale', zero') pairs.
void save_weights(const std::string& path, const QuantizedWeights& qw);
QuantizedWeights load_weights(const std::string& path);

}  // namespace lutcore
