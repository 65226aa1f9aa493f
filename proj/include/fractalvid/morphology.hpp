#pragma once

// Binary morphology with disk structuring elements, plus a separable Gaussian blur.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fvid {

/// Row-major binary image.
struct Mask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, std::uint8_t v = 1) { bits[static_cast<std::size_t>(y) * width + x] = v; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  long count() const {
    long n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Offsets (dx, dy) with dx^2 + dy^2 <= r^2.
inline std::vector<std::pair<int, int>> disk_element(int radius) {
  if (radius < 0) throw std::invalid_argument("disk_element: negative radius");
  std::vector<std::pair<int, int>> se;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) se.emplace_back(dx, dy);
  return se;
}

/// Pixels outside the image count as 0.
inline Mask dilate(const Mask& m, int radius) {
  const auto se = disk_element(radius);
  Mask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      for (auto [dx, dy] : se)
        if (out.inside(x + dx, y + dy)) out.set(x + dx, y + dy);
    }
  return out;
}

/// Pixels outside the image count as 1, so closing stays extensive at borders.
inline Mask erode(const Mask& m, int radius) {
  const auto se = disk_element(radius);
  Mask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool all = true;
      for (auto [dx, dy] : se) {
        if (m.inside(x + dx, y + dy) && !m.at(x + dx, y + dy)) {
          all = false;
          break;
        }
      }
      if (all) out.set(x, y);
    }
  return out;
}

inline Mask closing(const Mask& m, int radius) { return erode(dilate(m, radius), radius); }

/// Dilation minus erosion: the outline of every blob.
inline Mask gradient(const Mask& m, int radius) {
  const Mask d = dilate(m, radius), e = erode(m, radius);
  Mask out(m.width, m.height);
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = d.bits[i] && !e.bits[i];
  return out;
}

/// Separable Gaussian with a 3-sigma kernel and zero padding.
inline std::vector<float> gaussian_blur(const std::vector<float>& img, int w, int h, double sigma) {
  if (!(sigma > 0)) return img;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;

  std::vector<float> tmp(img.size(), 0.0f), out(img.size(), 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) acc += k[static_cast<std::size_t>(i + r)] * img[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
    }
  return out;
}

}  // namespace fvid
