#pragma once

// Bilinear sampling, resizing and crop-resizing of single frames.
// Pixel (x, y) has its center at integer coordinates (x, y).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fractalvid/clip.hpp"

namespace fvid {

enum class Border { zero, clamp };

/// Bilinear sample of a row-major w x h image at continuous pixel coordinates.
/// Integer coordinates return the stored value exactly.
inline float sample_bilinear(std::span<const float> img, int w, int h, double x, double y, Border border) {
  if (border == Border::clamp) {
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  } else if (!(x > -1.0 && x < w && y > -1.0 && y < h)) {
    return 0.0f;
  }
  const double fx0 = std::floor(x), fy0 = std::floor(y);
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  const float tx = static_cast<float>(x - fx0), ty = static_cast<float>(y - fy0);
  auto px = [&](int xi, int yi) -> float {
    if (xi < 0 || yi < 0 || xi >= w || yi >= h) {
      if (border == Border::zero) return 0.0f;
      xi = std::clamp(xi, 0, w - 1);
      yi = std::clamp(yi, 0, h - 1);
    }
    return img[static_cast<std::size_t>(yi) * w + xi];
  };
  const float v00 = px(x0, y0);
  if (tx == 0.0f && ty == 0.0f) return v00;
  const float v10 = px(x0 + 1, y0), v01 = px(x0, y0 + 1), v11 = px(x0 + 1, y0 + 1);
  const float top = v00 + (v10 - v00) * tx;
  const float bot = v01 + (v11 - v01) * tx;
  return top + (bot - top) * ty;
}

/// Axis-aligned source rectangle in continuous pixel units; the full frame is
/// {0, 0, w, h}.
struct Rect {
  double x = 0, y = 0, w = 0, h = 0;
};

/// Samples `src_rect` of a sw x sh image onto a dw x dh grid with half-pixel
/// alignment. A full-frame rect at the same size is an exact copy.
inline std::vector<float> crop_resize(std::span<const float> src, int sw, int sh, const Rect& src_rect, int dw, int dh,
                                      Border border = Border::clamp) {
  if (sw < 1 || sh < 1 || dw < 1 || dh < 1) throw std::invalid_argument("crop_resize: empty image");
  if (src.size() != static_cast<std::size_t>(sw) * sh) throw std::invalid_argument("crop_resize: size mismatch");
  std::vector<float> out(static_cast<std::size_t>(dw) * dh);
  const double kx = src_rect.w / dw, ky = src_rect.h / dh;
  for (int y = 0; y < dh; ++y) {
    const double sy = src_rect.y + (y + 0.5) * ky - 0.5;
    for (int x = 0; x < dw; ++x) {
      const double sx = src_rect.x + (x + 0.5) * kx - 0.5;
      out[static_cast<std::size_t>(y) * dw + x] = sample_bilinear(src, sw, sh, sx, sy, border);
    }
  }
  return out;
}

inline std::vector<float> resize(std::span<const float> src, int sw, int sh, int dw, int dh) {
  if (sw == dw && sh == dh) return {src.begin(), src.end()};
  return crop_resize(src, sw, sh, Rect{0, 0, static_cast<double>(sw), static_cast<double>(sh)}, dw, dh);
}

/// Inverse warp: out(x, y) = src(map(x, y)), zero outside the source.
template <class Map>
std::vector<float> warp(std::span<const float> src, int w, int h, Map&& map) {
  std::vector<float> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto [sx, sy] = map(static_cast<double>(x), static_cast<double>(y));
      out[static_cast<std::size_t>(y) * w + x] = sample_bilinear(src, w, h, sx, sy, Border::zero);
    }
  return out;
}

inline void clamp_unit(std::span<float> v) {
  for (float& x : v) x = std::clamp(x, 0.0f, 1.0f);
}

}  // namespace fvid
