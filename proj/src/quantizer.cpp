#include "lutcore/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lutcore/numerics.hpp"

namespace lutcore {

QuantizedWeights quantize_weights(const Matrix& w, int w_bits, QuantMode mode) {
  if (w_bits < 1 || w_bits > 4) throw std::invalid_argument("quantize_weights: w_bits must be in [1,4]");
  if (w.rows < 1 || w.cols < 1) throw std::invalid_argument("quantize_weights: empty matrix");
  for (double v : w.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("quantize_weights: weights must be finite");
  }

  QuantizedWeights qw;
  qw.n_out = w.rows;
  qw.k_dim = w.cols;
  qw.w_bits = w_bits;
  qw.codes.resize(w.data.size());
  qw.scale.resize(w.rows);
  qw.zero.resize(w.rows);

  const double qmax = std::ldexp(1.0, w_bits) - 1.0;
  for (int n = 0; n < w.rows; ++n) {
    const double* r = w.row(n);
    double lo = r[0], hi = r[0];
    for (int k = 1; k < w.cols; ++k) {
      lo = std::min(lo, r[k]);
      hi = std::max(hi, r[k]);
    }
    double s, z;
    if (mode == QuantMode::symmetric) {
      z = qmax / 2.0;
      double amax = std::max(std::fabs(lo), std::fabs(hi));
      s = amax > 0.0 ? amax / (qmax / 2.0) : 1.0;
    } else {
      if (hi > lo) {
        s = (hi - lo) / qmax;
        z = -lo / s;
      } else {
        s = 1.0;
        z = -lo;
      }
    }
    qw.scale[n] = s;
    qw.zero[n] = z;
    for (int k = 0; k < w.cols; ++k) {
      qw.codes[static_cast<size_t>(n) * w.cols + k] =
          static_cast<int>(clamp_round_int(r[k] / s + z, w_bits, false));
    }
  }
  return qw;
}

QuantizedWeights reinterpret_symmetric(const QuantizedWeights& qw) {
  if (qw.reinterpreted) throw std::invalid_argument("reinterpret_symmetric: weights already reinterpreted");
  QuantizedWeights out = qw;
  out.reinterpreted = true;
  const int qmax = (1 << qw.w_bits) - 1;
  for (auto& c : out.codes) c = 2 * c - qmax;
  for (auto& s : out.scale) s /= 2.0;
  for (auto& z : out.zero) z = 2.0 * z + 1.0 - std::ldexp(1.0, qw.w_bits);
  return out;
}

Matrix dequantize(const QuantizedWeights& qw) {
  Matrix r(qw.n_out, qw.k_dim);
  for (int n = 0; n < qw.n_out; ++n) {
    for (int k = 0; k < qw.k_dim; ++k) {
      r.at(n, k) = qw.scale[n] * (static_cast<double>(qw.code(n, k)) - qw.zero[n]);
    }
  }
  return r;
}

BitPlanes pack_bitplanes(const QuantizedWeights& qw) {
  if (!qw.reinterpreted) throw std::invalid_argument("pack_bitplanes: weights must be reinterpreted first");
  BitPlanes bp;
  bp.n_out = qw.n_out;
  bp.k_dim = qw.k_dim;
  bp.w_bits = qw.w_bits;
  bp.row_bytes = (static_cast<size_t>(qw.k_dim) + 7) / 8;
  bp.bytes.assign(static_cast<size_t>(qw.w_bits) * qw.n_out * bp.row_bytes, 0);
  const int qmax = (1 << qw.w_bits) - 1;
  for (int n = 0; n < qw.n_out; ++n) {
    for (int k = 0; k < qw.k_dim; ++k) {
      unsigned u = static_cast<unsigned>((qw.code(n, k) + qmax) / 2);
      for (int b = 0; b < qw.w_bits; ++b) {
        if ((u >> b) & 1u) {
          size_t off = (static_cast<size_t>(b) * bp.n_out + n) * bp.row_bytes + (k >> 3);
          bp.bytes[off] |= static_cast<uint8_t>(1u << (k & 7));
        }
      }
    }
  }
  return bp;
}

QuantizedWeights unpack_bitplanes(const BitPlanes& bp, std::vector<double> scale,
                                  std::vector<double> zero) {
  if (static_cast<int>(scale.size()) != bp.n_out || static_cast<int>(zero.size()) != bp.n_out)
    throw std::invalid_argument("unpack_bitplanes: channel metadata size mismatch");
  QuantizedWeights qw;
  qw.n_out = bp.n_out;
  qw.k_dim = bp.k_dim;
  qw.w_bits = bp.w_bits;
  qw.reinterpreted = true;
  qw.scale = std::move(scale);
  qw.zero = std::move(zero);
  qw.codes.resize(static_cast<size_t>(bp.n_out) * bp.k_dim);
  const int qmax = (1 << bp.w_bits) - 1;
  for (int n = 0; n < bp.n_out; ++n) {
    for (int k = 0; k < bp.k_dim; ++k) {
      int u = 0;
      for (int b = 0; b < bp.w_bits; ++b) u |= bp.bit(b, n, k) << b;
      qw.codes[static_cast<size_t>(n) * bp.k_dim + k] = 2 * u - qmax;
    }
  }
  return qw;
}

}  // namespace lutcore
