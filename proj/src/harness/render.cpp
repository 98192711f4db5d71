// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "casp/harness.hpp"

namespace casp {
namespace {

struct Color {
  unsigned char r, g, b;
};

// Scene layers, back to front.
constexpr Color kDrivable{35, 55, 115};
constexpr Color kCenterLine{90, 110, 160};
constexpr Color kLane{140, 160, 200};
constexpr Color kBoundary{75, 75, 75};
constexpr Color kCrossing{160, 130, 70};

// One entry per predicted mode (wrapping past five).
constexpr Color kModePalette[5] = {
    {230, 60, 60}, {240, 160, 40}, {230, 230, 70}, {70, 220, 220}, {225, 80, 225},
};

}  // namespace

void render_ppm(const RasterSample& sample, const TrajectoryPrediction* pred,
                const std::string& out_path, int scale) {
  if (scale < 1) throw UsageError("render scale must be at least 1");
  const int h = sample.grid.h, w = sample.grid.w;
  const int ih = h * scale, iw = w * scale;
  std::vector<unsigned char> img(static_cast<std::size_t>(ih) * iw * 3, 0);

  auto put_px = [&](int px, int py, Color c) {
    if (px < 0 || py < 0 || px >= iw || py >= ih) return;
    const std::size_t at = (static_cast<std::size_t>(py) * iw + px) * 3;
    img[at] = c.r;
    img[at + 1] = c.g;
    img[at + 2] = c.b;
  };
  auto fill_cell = [&](int row, int col, Color c) {
    for (int dy = 0; dy < scale; ++dy)
      for (int dx = 0; dx < scale; ++dx) put_px(col * scale + dx, row * scale + dy, c);
  };
  auto paint_channel = [&](const float* grid, Color c) {
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col)
        if (grid[r * w + col] > 0.5f) fill_cell(r, col, c);
  };

  const float* st = sample.statics.data();
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  paint_channel(st + kChDrivable * hw, kDrivable);
  paint_channel(st + kChCenterLine * hw, kCenterLine);
  paint_channel(st + kChLane * hw, kLane);
  paint_channel(st + kChBoundary * hw, kBoundary);
  paint_channel(st + kChCrossing * hw, kCrossing);

  // Agent occupancy per input step, brighter toward the present.
  const float* dyn = sample.dynamics.data();
  const int t_in = sample.grid.t_in;
  for (int t = 0; t < t_in; ++t) {
    const float* extent = dyn + (static_cast<std::size_t>(t) * kDynamicChannels +
                                 kChExtentFwd) * hw;
    const int level = t_in > 1 ? (120 + 135 * t / (t_in - 1)) : 255;
    const Color c{40, static_cast<unsigned char>(level), 40};
    for (std::size_t i = 0; i < hw; ++i)
      if (extent[i] != 0.0f) fill_cell(static_cast<int>(i / w), static_cast<int>(i % w), c);
  }

  // Predicted trajectories: one polyline per mode from the ego anchor through
  // the waypoints, in continuous grid coordinates (x = col, y = row).
  auto draw_segment = [&](float x0, float y0, float x1, float y1, Color c) {
    const float px0 = x0 * scale, py0 = y0 * scale;
    const float px1 = x1 * scale, py1 = y1 * scale;
    const int steps =
        std::max(1, static_cast<int>(std::ceil(std::max(std::abs(px1 - px0),
                                                        std::abs(py1 - py0)))));
    for (int i = 0; i <= steps; ++i) {
      const float f = static_cast<float>(i) / steps;
      put_px(static_cast<int>(std::floor(px0 + f * (px1 - px0))),
             static_cast<int>(std::floor(py0 + f * (py1 - py0))), c);
    }
  };
  if (pred != nullptr && pred->mu.defined() && pred->mu.size() > 0) {
    const std::size_t modes = pred->mu.dim(1), steps = pred->mu.dim(2);
    const float* mu = pred->mu.data();
    for (std::size_t m = 0; m < modes; ++m) {
      const Color c = kModePalette[m % 5];
      float px = sample.anchor.x, py = sample.anchor.y;
      for (std::size_t t = 0; t < steps; ++t) {
        const float nx = mu[(m * steps + t) * 2];
        const float ny = mu[(m * steps + t) * 2 + 1];
        draw_segment(px, py, nx, ny, c);
        px = nx;
        py = ny;
      }
    }
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + out_path + " for writing");
  char header[32];
  std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", iw, ih);
  out << header;
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw IoError("short write to " + out_path);
}

}  // namespace casp
