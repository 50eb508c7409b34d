#include "lutcore/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace lutcore {

namespace {

constexpr char kMagic[4] = {'L', 'U', 'T', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  static_assert(sizeof(double) == 8);
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(buf, bits);  // little-endian on all supported targets
}

struct Reader {
  std::string data;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > data.size()) throw std::runtime_error("tensor file truncated");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data[pos++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void write_file(const std::string& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Reader read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  Reader r;
  r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

void write_header(std::string& buf, uint8_t dtype, uint8_t flags, std::vector<uint64_t> dims) {
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  buf.push_back(static_cast<char>(dtype));
  buf.push_back(static_cast<char>(flags));
  buf.push_back(static_cast<char>(dims.size()));
  for (uint64_t d : dims) put_u64(buf, d);
}

struct Header {
  uint8_t dtype = 0;
  uint8_t flags = 0;
  std::vector<uint64_t> dims;
};

Header read_header(Reader& r, const std::string& path) {
  r.need(4);
  if (std::memcmp(r.data.data(), kMagic, 4) != 0)
    throw std::runtime_error("'" + path + "' is not a LUTT tensor file");
  r.pos = 4;
  uint32_t ver = r.u32();
  if (ver != kVersion) throw std::runtime_error("unsupported tensor file version");
  Header h;
  h.dtype = r.u8();
  h.flags = r.u8();
  uint8_t ndim = r.u8();
  for (int i = 0; i < ndim; ++i) h.dims.push_back(r.u64());
  return h;
}

}  // namespace

void save_matrix(const std::string& path, const Matrix& m) {
  std::string buf;
  write_header(buf, tensor_dtype::f64, 0,
               {static_cast<uint64_t>(m.rows), static_cast<uint64_t>(m.cols)});
  for (double v : m.data) put_f64(buf, v);
  write_file(path, buf);
}

Matrix load_matrix(const std::string& path) {
  Reader r = read_file(path);
  Header h = read_header(r, path);
  if (h.dtype != tensor_dtype::f64) throw std::runtime_error("'" + path + "' is not an f64 tensor");
  if (h.dims.size() != 2) throw std::runtime_error("'" + path + "' is not 2-dimensional");
  Matrix m(static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]));
  size_t expect = r.pos + m.data.size() * 8;
  if (r.data.size() != expect) throw std::runtime_error("'" + path + "' payload length mismatch");
  for (auto& v : m.data) v = r.f64();
  return m;
}

void save_weights(const std::string& path, const QuantizedWeights& qw) {
  if (!qw.reinterpreted) throw std::invalid_argument("save_weights: weights must be reinterpreted");
  BitPlanes bp = pack_bitplanes(qw);
  std::string buf;
  write_header(buf, static_cast<uint8_t>(tensor_dtype::weight_planes_base + qw.w_bits), 1,
               {static_cast<uint64_t>(qw.n_out), static_cast<uint64_t>(qw.k_dim)});
  buf.append(reinterpret_cast<const char*>(bp.bytes.data()), bp.bytes.size());
  for (int n = 0; n < qw.n_out; ++n) {
    put_f64(buf, qw.scale[n]);
    put_f64(buf, qw.zero[n]);
  }
  write_file(path, buf);
}

QuantizedWeights load_weights(const std::string& path) {
  Reader r = read_file(path);
  Header h = read_header(r, path);
  int w_bits = static_cast<int>(h.dtype) - tensor_dtype::weight_planes_base;
  if (w_bits < 1 || w_bits > 4) throw std::runtime_error("'" + path + "' is not a weight tensor");
  if (h.dims.size() != 2) throw std::runtime_error("'" + path + "' is not 2-dimensional");
  if (!(h.flags & 1)) throw std::runtime_error("'" + path + "' lacks the scale/zero sidecar");
  BitPlanes bp;
  bp.n_out = static_cast<int>(h.dims[0]);
  bp.k_dim = static_cast<int>(h.dims[1]);
  bp.w_bits = w_bits;
  bp.row_bytes = (static_cast<size_t>(bp.k_dim) + 7) / 8;
  size_t payload = static_cast<size_t>(w_bits) * bp.n_out * bp.row_bytes;
  size_t expect = r.pos + payload + static_cast<size_t>(bp.n_out) * 16;
  if (r.data.size() != expect) throw std::runtime_error("'" + path + "' payload length mismatch");
  bp.bytes.resize(payload);
  std::memcpy(bp.bytes.data(), r.data.data() + r.pos, payload);
  r.pos += payload;
  std::vector<double> scale(bp.n_out), zero(bp.n_out);
  for (int n = 0; n < bp.n_out; ++n) {
    scale[n] = r.f64();
    zero[n] = r.f64();
  }
  return unpack_bitplanes(bp, std::move(scale), std::move(zero));
}

}  // namespace lutcore
