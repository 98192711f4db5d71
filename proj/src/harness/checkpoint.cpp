// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <string>

#include "casp/harness.hpp"

namespace casp {
namespace {

constexpr char kMagic[8] = {'C', 'A', 'S', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& b, const std::string& s) {
  put_u32(b, static_cast<uint32_t>(s.size()));
  b.append(s);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw IoError("checkpoint truncated");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    uint64_t lo = u32();
    uint64_t hi = u32();
    return lo | (hi << 32);
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

// Entry kinds in the header, in write order per name group.
enum : uint8_t { kParam = 0, kMoment1 = 1, kMoment2 = 2 };

void put_group(std::string& header, std::string& payload, uint8_t kind,
               const std::vector<std::pair<std::string, Tensor>>& group) {
  for (const auto& [name, t] : group) {
    header.push_back(static_cast<char>(kind));
    put_str(header, name);
    put_u32(header, static_cast<uint32_t>(t.rank()));
    for (std::size_t a = 0; a < t.rank(); ++a) put_u64(header, t.dim(a));
    put_u64(header, payload.size());
    const float* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) {
      uint32_t u;
      std::memcpy(&u, d + i, 4);
      put_u32(payload, u);
    }
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string header;
  std::string payload;
  header.append(kMagic, sizeof(kMagic));
  put_u32(header, kVersion);
  put_u32(header, 0);  // flags
  put_str(header, ckpt.config_hash);
  put_u64(header, ckpt.step);
  put_u64(header, ckpt.epoch);
  put_str(header, ckpt.rng_state);
  put_u32(header, static_cast<uint32_t>(ckpt.params.size() + ckpt.moment1.size() +
                                        ckpt.moment2.size()));
  put_group(header, payload, kParam, ckpt.params);
  put_group(header, payload, kMoment1, ckpt.moment1);
  put_group(header, payload, kMoment2, ckpt.moment2);

  std::string out = header;
  put_u64(out, payload.size());
  out += payload;
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size()));
  put_u32(out, static_cast<uint32_t>(crc));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r{buf};
  r.need(sizeof(kMagic));
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError(path + " is not a checkpoint (bad magic)");
  r.pos = sizeof(kMagic);

  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(ckpt.version));
  r.u32();  // flags
  ckpt.config_hash = r.str();
  ckpt.step = r.u64();
  ckpt.epoch = r.u64();
  ckpt.rng_state = r.str();

  const uint32_t n_entries = r.u32();
  struct Entry {
    uint8_t kind;
    std::string name;
    std::vector<std::size_t> shape;
    uint64_t offset;
  };
  std::vector<Entry> entries(n_entries);
  for (auto& e : entries) {
    e.kind = r.u8();
    if (e.kind > kMoment2) throw IoError("corrupt checkpoint entry kind");
    e.name = r.str();
    const uint32_t rank = r.u32();
    if (rank > 8) throw IoError("corrupt checkpoint tensor rank");
    e.shape.resize(rank);
    for (auto& dim : e.shape) dim = r.u64();
    e.offset = r.u64();
  }

  const uint64_t payload_bytes = r.u64();
  r.need(payload_bytes + 4);
  const size_t payload_at = r.pos;
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data() + payload_at),
              static_cast<uInt>(payload_bytes));
  r.pos = payload_at + payload_bytes;
  if (r.u32() != static_cast<uint32_t>(crc)) throw IoError(path + ": payload CRC mismatch");
  if (r.pos != buf.size()) throw IoError(path + ": trailing bytes after checkpoint");

  for (const auto& e : entries) {
    Tensor t(e.shape);
    if (e.offset + t.size() * 4 > payload_bytes)
      throw IoError(path + ": tensor payload out of range");
    float* d = t.mutable_data();
    const char* src = buf.data() + payload_at + e.offset;
    for (std::size_t i = 0; i < t.size(); ++i) {
      uint32_t u = 0;
      for (int k = 0; k < 4; ++k)
        u |= static_cast<uint32_t>(static_cast<uint8_t>(src[i * 4 + k])) << (8 * k);
      std::memcpy(d + i, &u, 4);
    }
    auto& group = e.kind == kParam ? ckpt.params : e.kind == kMoment1 ? ckpt.moment1
                                                                      : ckpt.moment2;
    group.emplace_back(e.name, std::move(t));
  }
  return ckpt;
}

}  // namespace casp
