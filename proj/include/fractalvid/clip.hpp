#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fvid {

/// Single grayscale image, row-major, values in [0, 1].
struct Frame {
  int width = 0, height = 0;
  std::vector<float> values;

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0f) {}

  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// T x H x W grayscale volume, frame-major then row-major.
class Clip {
 public:
  Clip() = default;
  Clip(int frames, int height, int width, float fill = 0.0f)
      : frames_(frames), height_(height), width_(width),
        data_(static_cast<std::size_t>(frames) * height * width, fill) {
    if (frames < 0 || height < 0 || width < 0) throw std::invalid_argument("Clip: negative dimension");
  }

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t frame_size() const { return static_cast<std::size_t>(height_) * width_; }
  bool same_shape(const Clip& o) const {
    return frames_ == o.frames_ && height_ == o.height_ && width_ == o.width_;
  }

  std::span<float> frame(int t) { return {data_.data() + t * frame_size(), frame_size()}; }
  std::span<const float> frame(int t) const { return {data_.data() + t * frame_size(), frame_size()}; }

  float& at(int t, int y, int x) { return data_[t * frame_size() + static_cast<std::size_t>(y) * width_ + x]; }
  float at(int t, int y, int x) const { return data_[t * frame_size() + static_cast<std::size_t>(y) * width_ + x]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  void set_frame(int t, const Frame& f) {
    if (f.width != width_ || f.height != height_) throw std::invalid_argument("Clip::set_frame: shape mismatch");
    std::copy(f.values.begin(), f.values.end(), frame(t).begin());
  }

  friend bool operator==(const Clip&, const Clip&) = default;

 private:
  int frames_ = 0, height_ = 0, width_ = 0;
  std::vector<float> data_;
};

/// Fraction of pixels with a nonzero value.
inline double occupancy(std::span<const float> pixels) {
  if (pixels.empty()) return 0.0;
  const auto lit = std::count_if(pixels.begin(), pixels.end(), [](float v) { return v > 0.0f; });
  return static_cast<double>(lit) / static_cast<double>(pixels.size());
}

/// Frames whose occupancy falls outside this band are considered degenerate.
struct OccupancyBand {
  double min = 0.005;
  double max = 0.70;
  bool contains(double occ) const { return occ >= min && occ <= max; }
};

/// A clip is degenerate when more than this fraction of frames are flagged.
inline constexpr double kDegenerateFrameFraction = 0.30;

inline double mean_abs_diff(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("mean_abs_diff: size mismatch");
  if (a.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace fvid
