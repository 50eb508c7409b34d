#include "lutcore/lut_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "lutcore/parallel.hpp"

namespace lutcore {

namespace {

void check_group_k(int k) {
  if (k < 2 || k > 8) throw std::invalid_argument("group length K must be in [2, 8]");
}

// Signed sum of the group under one sign pattern, ascending element order.
double signed_sum(std::span<const double> group, uint32_t idx) {
  double acc = 0.0;
  for (size_t j = 0; j < group.size(); ++j) {
    acc += ((idx >> j) & 1u) ? group[j] : -group[j];
  }
  return acc;
}

}  // namespace

ActivationTile make_activation_tile(Matrix values, Dtype dtype) {
  if (!is_activation_dtype(dtype)) throw std::invalid_argument("not an activation dtype");
  for (auto& v : values.data) v = round_activation(v, dtype);
  return ActivationTile{std::move(values), dtype};
}

LookupTable precompute_table_full(std::span<const double> act_group) {
  int k = static_cast<int>(act_group.size());
  check_group_k(k);
  LookupTable t;
  t.k = k;
  t.symmetric = false;
  t.entries.resize(size_t{1} << k);
  for (uint32_t idx = 0; idx < t.entries.size(); ++idx) {
    t.entries[idx] = signed_sum(act_group, idx);
  }
  double gs = 0.0;
  for (double a : act_group) gs += a;
  t.group_sum = gs;
  return t;
}

LookupTable precompute_table_symmetric(std::span<const double> act_group) {
  int k = static_cast<int>(act_group.size());
  check_group_k(k);
  LookupTable t;
  t.k = k;
  t.symmetric = true;
  t.entries.resize(size_t{1} << (k - 1));
  for (uint32_t low = 0; low < t.entries.size(); ++low) {
    t.entries[low] = signed_sum(act_group, low);  // select bit k-1 is 0 => -act[k-1]
  }
  double gs = 0.0;
  for (double a : act_group) gs += a;
  t.group_sum = gs;
  return t;
}

double lut_lookup(const LookupTable& table, uint32_t idx) {
  if (idx >= (1u << table.k)) throw std::invalid_argument("lut_lookup: index out of range");
  if (!table.symmetric) return table.entries[idx];
  const uint32_t half = 1u << (table.k - 1);
  const uint32_t mask = half - 1;
  if (idx & half) return -table.entries[~idx & mask];
  return table.entries[idx & mask];
}

double lut_lookup_precomplemented(const LookupTable& table, uint32_t idx) {
  if (idx >= (1u << table.k)) throw std::invalid_argument("lut_lookup: index out of range");
  if (!table.symmetric) return table.entries[idx];
  const uint32_t half = 1u << (table.k - 1);
  const uint32_t mask = half - 1;
  double v = table.entries[idx & mask];
  return (idx & half) ? -v : v;
}

LookupTable quantize_table(const LookupTable& table) {
  if (table.quantized) throw std::invalid_argument("quantize_table: table already quantized");
  LookupTable t = table;
  t.quantized = true;
  double amax = 0.0;
  for (double e : table.entries) amax = std::max(amax, std::fabs(e));
  t.table_scale = amax > 0.0 ? amax / 127.0 : 1.0;
  t.codes.resize(table.entries.size());
  for (size_t i = 0; i < table.entries.size(); ++i) {
    t.codes[i] = static_cast<int>(clamp_round_int(table.entries[i] / t.table_scale, 8, true));
    t.entries[i] = t.table_scale * static_cast<double>(t.codes[i]);
  }
  return t;
}

TableTensor precompute_operator(const ActivationTile& act, const GemmConfig& cfg) {
  check_group_k(cfg.group_k);
  const int k = cfg.group_k;
  TableTensor tt;
  tt.m_rows = act.values.rows;
  tt.group_k = k;
  tt.groups = (act.values.cols + k - 1) / k;
  tt.tables.resize(static_cast<size_t>(tt.m_rows) * tt.groups);
  std::vector<double> padded(static_cast<size_t>(k), 0.0);
  for (int m = 0; m < tt.m_rows; ++m) {
    const double* row = act.values.row(m);
    for (int g = 0; g < tt.groups; ++g) {
      const int base = g * k;
      std::span<const double> group;
      if (base + k <= act.values.cols) {
        group = std::span<const double>(row + base, static_cast<size_t>(k));
      } else {
        // zero-padded tail group: both signs of 0 contribute 0
        std::fill(padded.begin(), padded.end(), 0.0);
        for (int j = 0; base + j < act.values.cols; ++j) padded[j] = row[base + j];
        group = padded;
      }
      LookupTable t = precompute_table_symmetric(group);
      if (cfg.quantize_tables) t = quantize_table(t);
      tt.tables[static_cast<size_t>(m) * tt.groups + g] = std::move(t);
    }
  }
  return tt;
}

PackedWeights pack_weights(const QuantizedWeights& reinterpreted) {
  return PackedWeights{pack_bitplanes(reinterpreted), reinterpreted.scale, reinterpreted.zero};
}

Matrix lut_mpgemm(const ActivationTile& act, const PackedWeights& w, const GemmConfig& cfg,
                  GemmStats* stats) {
  return lut_mpgemm(precompute_operator(act, cfg), w, cfg, stats);
}

Matrix lut_mpgemm(const TableTensor& tables, const PackedWeights& w, const GemmConfig& cfg,
                  GemmStats* stats) {
  check_group_k(cfg.group_k);
  if (cfg.group_k != tables.group_k) throw std::invalid_argument("lut_mpgemm: group length mismatch");
  const BitPlanes& bp = w.planes;
  const int k = cfg.group_k;
  const int groups = tables.groups;
  if ((bp.k_dim + k - 1) / k != groups)
    throw std::invalid_argument("lut_mpgemm: activation/weight reduction dims disagree");
  const int m_rows = tables.m_rows;
  const int n_out = bp.n_out;
  const int w_bits = bp.w_bits;
  const uint32_t half = 1u << (k - 1);
  const uint32_t mask = half - 1;

  // Offline pre-complement: gather each group's select bits per plane and
  // fold the bit-wise NOT of the negated half into the stored index, once
  // per (n, g, b) rather than per lookup.
  std::vector<uint32_t> select(static_cast<size_t>(n_out) * groups * w_bits);
  for (int n = 0; n < n_out; ++n) {
    for (int g = 0; g < groups; ++g) {
      for (int b = 0; b < w_bits; ++b) {
        uint32_t raw = 0;
        for (int j = 0; j < k; ++j) {
          int kk = g * k + j;
          if (kk < bp.k_dim && bp.bit(b, n, kk)) raw |= 1u << j;
        }
        uint32_t pre = (raw & half) ? (half | (~raw & mask)) : raw;
        select[(static_cast<size_t>(n) * groups + g) * w_bits + b] = pre;
      }
    }
  }

  Matrix out(m_rows, n_out);
  std::vector<uint64_t> chunk_lookups(static_cast<size_t>(std::max(1, m_rows)), 0);
  parallel_for(m_rows, [&](int m_lo, int m_hi) {
    for (int m = m_lo; m < m_hi; ++m) {
      uint64_t lookups = 0;
      double sum_gs = 0.0;
      for (int g = 0; g < groups; ++g) sum_gs += tables.table(m, g).group_sum;
      for (int n = 0; n < n_out; ++n) {
        double acc = 0.0;
        const uint32_t* sel = &select[static_cast<size_t>(n) * groups * w_bits];
        for (int g = 0; g < groups; ++g) {
          const LookupTable& t = tables.table(m, g);
          for (int b = 0; b < w_bits; ++b) {
            acc += std::ldexp(lut_lookup_precomplemented(t, sel[g * w_bits + b]), b);
            ++lookups;
          }
        }
        out.at(m, n) = w.scale[n] * (acc - w.zero[n] * sum_gs);
      }
      chunk_lookups[m] = lookups;
    }
  });
  if (stats) {
    for (uint64_t c : chunk_lookups) stats->lookups += c;
  }
  return out;
}

Matrix reference_mpgemm(const ActivationTile& act, const QuantizedWeights& qw,
                        const GemmConfig& cfg) {
  check_group_k(cfg.group_k);
  if (act.values.cols != qw.k_dim)
    throw std::invalid_argument("reference_mpgemm: reduction dims disagree");
  const int m_rows = act.values.rows;
  const int n_out = qw.n_out;
  const int k_dim = qw.k_dim;
  Matrix out(m_rows, n_out);
  parallel_for(m_rows, [&](int m_lo, int m_hi) {
    for (int m = m_lo; m < m_hi; ++m) {
      const double* a = act.values.row(m);
      double asum = 0.0;
      for (int kk = 0; kk < k_dim; ++kk) asum += a[kk];
      for (int n = 0; n < n_out; ++n) {
        double acc = 0.0;
        for (int kk = 0; kk < k_dim; ++kk) {
          acc += a[kk] * static_cast<double>(qw.code(n, kk));
        }
        out.at(m, n) = qw.scale[n] * (acc - qw.zero[n] * asum);
      }
    }
  });
  return out;
}

}  // namespace lutcore
