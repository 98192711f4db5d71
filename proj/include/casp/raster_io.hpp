// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary sample container and dataset manifest.
//
// Container layout (all integers little-endian):
//   magic "CASP" | u16 version=1 | u16 flags=0
//   u32 H | u32 W | u32 t_in | u32 t_out | u32 f_static | u32 f_dynamic
//   f32 resolution | f32 anchor_row | f32 anchor_col | u8 kind | 3 zero bytes
//   payload:
//     f32 statics[f_static*H*W]
//     f32 dynamics[t_in*f_dynamic*H*W]
//     f32 drivable[H*W]
//     f32 gt[t_out*2]            (col, row) pairs
//     u32 n_corridors, then per corridor u32 n_points + f32[n_points*2]
//   u32 CRC32 of the payload bytes
//
// Manifest: one record per line, "<path>\t<kind>\t<seed>", sample paths
// relative to the manifest's directory.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casp/scene.hpp"

namespace casp {

struct ManifestEntry {
  std::string path;
  SceneKind kind = SceneKind::straight;
  uint64_t seed = 0;
};

void write_sample(const RasterSample& sample, const std::string& path);
RasterSample read_sample(const std::string& path);

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Directory part of a path ("." when there is none); sample paths in a
// manifest resolve against this.
std::string parent_dir(const std::string& path);

}  // namespace casp
