#include "tsr/diff/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tsr/common.hpp"

namespace tsr {
namespace {

constexpr char kMagic[8] = {'T', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};

void write_u32(std::ostream& os, uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 4);
}

void write_u64(std::ostream& os, uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

void write_f64(std::ostream& os, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

uint32_t read_u32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw DataError("checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw DataError("checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& is) {
  uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& params,
                     uint64_t config_hash) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  write_u32(os, kCheckpointVersion);
  write_u64(os, config_hash);
  write_u64(os, params.seed());
  write_u64(os, params.count());
  for (const auto& [name, t] : params.entries()) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(t.rows()));
    write_u32(os, static_cast<uint32_t>(t.cols()));
    for (size_t i = 0; i < t.size(); ++i) write_f64(os, t[i]);
  }
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not a checkpoint file: " + path);
  Checkpoint ckpt;
  ckpt.version = read_u32(is);
  if (ckpt.version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(ckpt.version));
  ckpt.config_hash = read_u64(is);
  ckpt.seed = read_u64(is);
  uint64_t count = read_u64(is);
  ckpt.params = ParameterStore(ckpt.seed);
  for (uint64_t k = 0; k < count; ++k) {
    uint32_t name_len = read_u32(is);
    if (name_len > 4096) throw DataError("checkpoint corrupt: parameter name too long");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("checkpoint truncated");
    uint32_t rows = read_u32(is);
    uint32_t cols = read_u32(is);
    if (rows == 0 || cols == 0 || static_cast<uint64_t>(rows) * cols > (1ull << 28))
      throw DataError("checkpoint corrupt: bad tensor shape for '" + name + "'");
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (double& d : data) d = read_f64(is);
    ckpt.params.set(name, Tensor(static_cast<int>(rows), static_cast<int>(cols),
                                 std::move(data)));
  }
  return ckpt;
}

}  // namespace tsr
