#pragma once

#include <cstdint>
#include <vector>

#include "lutcore/matrix.hpp"

namespace lutcore {

enum class QuantMode { symmetric, asymmetric };

// Low-bit weight matrix with per-output-channel scale/zero metadata.
// Before reinterpretation codes are unsigned in [0, 2^w_bits - 1]; after,
// codes are the odd symmetric set {-(2^w_bits - 1), ..., -1, 1, ..., 2^w_bits - 1}.
struct QuantizedWeights {
  int n_out = 0;
  int k_dim = 0;
  int w_bits = 0;
  bool reinterpreted = false;
  std::vector<int> codes;    // row-major [n_out, k_dim]
  std::vector<double> scale;  // per output channel
  std::vector<double> zero;   // per output channel

  int code(int n, int k) const { return codes[static_cast<size_t>(n) * k_dim + k]; }
};

// w_bits bit-matrices of shape [n_out, k_dim]; plane b holds bit b of the
// pre-reinterpretation unsigned code. Bits are packed 8-per-byte,
// little-endian within each row.
struct BitPlanes {
  int n_out = 0;
  int k_dim = 0;
  int w_bits = 0;
  size_t row_bytes = 0;
  std::vector<uint8_t> bytes;  // [w_bits][n_out][row_bytes]

  int bit(int plane, int n, int k) const {
    size_t off = (static_cast<size_t>(plane) * n_out + n) * row_bytes + (k >> 3);
    return (bytes[off] >> (k & 7)) & 1;
  }
};

// Per-output-channel min-max affine quantization, w_bits in [1, 4].
// Symmetric mode pins the zero-point to (2^w_bits - 1) / 2; asymmetric maps
// the channel range onto [0, 2^w_bits - 1]. All-constant channels get
// scale 1 so dequantization stays exact.
QuantizedWeights quantize_weights(const Matrix& w, int w_bits, QuantMode mode);

// codes' = 2*codes - (2^w_bits - 1), scale' = scale / 2,
// zero' = 2*zero + 1 - 2^w_bits. Rejects already-reinterpreted inputs.
QuantizedWeights reinterpret_symmetric(const QuantizedWeights& qw);

// scale * (code - zero), channel-wise, using whichever parameter set the
// value carries.
Matrix dequantize(const QuantizedWeights& qw);

// Requires reinterpreted codes; stores bit b of the recovered unsigned code
// (code' + 2^w_bits - 1) / 2.
BitPlanes pack_bitplanes(const QuantizedWeights& qw);

// Inverse of pack_bitplanes; the scale/zero channel metadata travels
// separately (e.g. in the tensor-file sidecar).
QuantizedWeights unpack_bitplanes(const BitPlanes& bp, std::vector<double> scale,
                                  std::vector<double> zero);

}  // namespace lutcore
