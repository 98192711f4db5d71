// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "casp/raster_io.hpp"

namespace casp {
namespace {

constexpr char kMagic[4] = {'C', 'A', 'S', 'P'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& b, uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& b, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(b, u);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw IoError("sample file truncated");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint8_t>(buf[pos]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    uint32_t u = u32();
    float v;
    std::memcpy(&v, &u, 4);
    return v;
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
};

uint32_t payload_crc(const std::string& bytes, size_t from, size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + from), static_cast<uInt>(len));
  return static_cast<uint32_t>(crc);
}

void put_tensor(std::string& b, const Tensor& t) {
  const float* d = t.data();
  for (size_t i = 0; i < t.size(); ++i) put_f32(b, d[i]);
}

}  // namespace

void write_sample(const RasterSample& sample, const std::string& path) {
  const GridConfig& g = sample.grid;
  size_t h = g.h, w = g.w;
  if (sample.statics.shape() != std::vector<size_t>{kStaticChannels, h, w})
    throw ShapeError("write_sample: static maps shaped " + shape_str(sample.statics.shape()));
  if (sample.dynamics.shape() !=
      std::vector<size_t>{static_cast<size_t>(g.t_in), kDynamicChannels, h, w})
    throw ShapeError("write_sample: dynamic maps shaped " + shape_str(sample.dynamics.shape()));
  if (sample.drivable.shape() != std::vector<size_t>{h, w})
    throw ShapeError("write_sample: drivable mask shaped " + shape_str(sample.drivable.shape()));
  if (static_cast<int>(sample.gt.size()) != g.t_out)
    throw ShapeError("write_sample: gt must have t_out waypoints");

  std::string head;
  head.append(kMagic, 4);
  put_u16(head, kVersion);
  put_u16(head, 0);
  put_u32(head, static_cast<uint32_t>(g.h));
  put_u32(head, static_cast<uint32_t>(g.w));
  put_u32(head, static_cast<uint32_t>(g.t_in));
  put_u32(head, static_cast<uint32_t>(g.t_out));
  put_u32(head, kStaticChannels);
  put_u32(head, kDynamicChannels);
  put_f32(head, g.resolution);
  put_f32(head, sample.anchor.y);
  put_f32(head, sample.anchor.x);
  head.push_back(static_cast<char>(sample.kind));
  head.append(3, '\0');

  std::string payload;
  put_tensor(payload, sample.statics);
  put_tensor(payload, sample.dynamics);
  put_tensor(payload, sample.drivable);
  for (const Vec2& p : sample.gt) {
    put_f32(payload, p.x);
    put_f32(payload, p.y);
  }
  put_u32(payload, static_cast<uint32_t>(sample.corridors.size()));
  for (const Polygon& poly : sample.corridors) {
    put_u32(payload, static_cast<uint32_t>(poly.size()));
    for (const Vec2& p : poly) {
      put_f32(payload, p.x);
      put_f32(payload, p.y);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  std::string tail;
  put_u32(tail, payload_crc(payload, 0, payload.size()));
  f.write(tail.data(), static_cast<std::streamsize>(tail.size()));
  if (!f) throw IoError("write failed: " + path);
}

RasterSample read_sample(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string bytes = ss.str();

  constexpr size_t kHeaderSize = 4 + 2 + 2 + 6 * 4 + 3 * 4 + 1 + 3;
  if (bytes.size() < kHeaderSize + 4) throw IoError("sample file truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("bad magic in sample file");

  Reader r{bytes, 4};
  uint16_t version = r.u16();
  if (version != kVersion) throw IoError("unsupported sample version");
  r.u16();  // flags

  RasterSample out;
  GridConfig g;
  g.h = static_cast<int>(r.u32());
  g.w = static_cast<int>(r.u32());
  g.t_in = static_cast<int>(r.u32());
  g.t_out = static_cast<int>(r.u32());
  uint32_t fs = r.u32();
  uint32_t fd = r.u32();
  if (fs != kStaticChannels || fd != kDynamicChannels)
    throw IoError("unsupported channel layout in sample file");
  g.resolution = r.f32();
  float anchor_row = r.f32();
  float anchor_col = r.f32();
  uint8_t kind = r.u8();
  r.u8();
  r.u8();
  r.u8();
  if (kind > static_cast<uint8_t>(SceneKind::fork)) throw IoError("bad scene kind in sample file");
  g.ego_row = static_cast<int>(std::lround(anchor_row));
  g.ego_col = static_cast<int>(std::lround(anchor_col));

  size_t payload_len = bytes.size() - kHeaderSize - 4;
  Reader tail{bytes, bytes.size() - 4};
  uint32_t stored_crc = tail.u32();
  if (payload_crc(bytes, kHeaderSize, payload_len) != stored_crc)
    throw IoError("sample checksum mismatch");

  size_t h = g.h, w = g.w;
  out.grid = g;
  out.kind = static_cast<SceneKind>(kind);
  out.anchor = {anchor_col, anchor_row};
  out.statics = Tensor({kStaticChannels, h, w});
  out.dynamics = Tensor({static_cast<size_t>(g.t_in), kDynamicChannels, h, w});
  out.drivable = Tensor({h, w});

  auto read_tensor = [&](Tensor& t) {
    float* d = t.mutable_data();
    for (size_t i = 0; i < t.size(); ++i) d[i] = r.f32();
  };
  read_tensor(out.statics);
  read_tensor(out.dynamics);
  read_tensor(out.drivable);
  out.gt.resize(static_cast<size_t>(g.t_out));
  for (Vec2& p : out.gt) {
    p.x = r.f32();
    p.y = r.f32();
  }
  uint32_t n_corr = r.u32();
  if (n_corr > 64) throw IoError("implausible corridor count in sample file");
  out.corridors.resize(n_corr);
  for (Polygon& poly : out.corridors) {
    uint32_t n = r.u32();
    if (n > 100000) throw IoError("implausible corridor size in sample file");
    poly.resize(n);
    for (Vec2& p : poly) {
      p.x = r.f32();
      p.y = r.f32();
    }
  }
  if (r.pos != kHeaderSize + payload_len) throw IoError("sample payload size mismatch");
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (const ManifestEntry& e : entries)
    f << e.path << '\t' << kind_name(e.kind) << '\t' << e.seed << '\n';
  if (!f) throw IoError("write failed: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    size_t a = line.find('\t');
    size_t b = a == std::string::npos ? std::string::npos : line.find('\t', a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw IoError("malformed manifest line: " + line);
    ManifestEntry e;
    e.path = line.substr(0, a);
    e.kind = kind_from_name(line.substr(a + 1, b - a - 1));
    try {
      e.seed = std::stoull(line.substr(b + 1));
    } catch (const std::exception&) {
      throw IoError("malformed manifest seed: " + line);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string parent_dir(const std::string& path) {
  size_t pos = path.find_last_of('/');
  if (pos == std::string::npos) return ".";
  if (pos == 0) return "/";
  return path.substr(0, pos);
}

}  // namespace casp
