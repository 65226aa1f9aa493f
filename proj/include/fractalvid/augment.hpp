#pragma once

// Domain-adaptation transforms for clips. Every transform is split into a
// sampler (draws parameters) and a pure apply function, so a recorded trace
// replays bit-exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fractalvid/clip.hpp"
#include "fractalvid/random.hpp"
#include "fractalvid/resample.hpp"

namespace fvid {

struct AugmentConfig {
  // Enable probabilities.
  double p_background = 1.0;
  double p_scale = 1.0;
  double p_perspective = 0.8;
  double p_group = 0.15;
  double p_displace = 0.3;
  double p_zoom = 0.3;
  double p_shake = 0.3;

  double blend_min = 0.25, blend_max = 0.55;
  double p_static_background = 0.8;
  int background_donors = 2;
  int walk_range = 4;
  double crop_area_min = 0.2, crop_area_max = 1.0;
  double crop_ratio_min = 0.75, crop_ratio_max = 1.33;

  double scale_min = 0.3, scale_max = 1.0;
  int clones = 2;
  double group_scale_min = 0.2, group_scale_max = 0.7;
  double group_rotation_deg = 30.0;

  double perspective_distortion = 0.5;
  double travel_min = 0.05, travel_max = 0.2;
  double zoom_min = 0.6, zoom_max = 1.4;
  double zoom_gap_min = 0.95, zoom_gap_max = 1.05;
  double shake_amplitude = 0.03;  // fraction of min(H, W)

  int curriculum_epochs = 5;
  double intensity = 1.0;  // 0 = neutral parameters, 1 = full ranges

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("AugmentConfig: ") + name + " not in [0, 1]");
    };
    auto range = [](double lo, double hi, const char* name) {
      if (!(lo <= hi)) throw std::invalid_argument(std::string("AugmentConfig: empty range ") + name);
    };
    prob(p_background, "p_background");
    prob(p_scale, "p_scale");
    prob(p_perspective, "p_perspective");
    prob(p_group, "p_group");
    prob(p_displace, "p_displace");
    prob(p_zoom, "p_zoom");
    prob(p_shake, "p_shake");
    prob(p_static_background, "p_static_background");
    prob(intensity, "intensity");
    range(blend_min, blend_max, "blend");
    range(crop_area_min, crop_area_max, "crop_area");
    range(crop_ratio_min, crop_ratio_max, "crop_ratio");
    range(scale_min, scale_max, "scale");
    range(group_scale_min, group_scale_max, "group_scale");
    range(travel_min, travel_max, "travel");
    range(zoom_min, zoom_max, "zoom");
    range(zoom_gap_min, zoom_gap_max, "zoom_gap");
    if (blend_min < 0 || blend_max > 1) throw std::invalid_argument("AugmentConfig: blend must lie in [0, 1]");
    if (crop_area_min <= 0 || crop_area_max > 1) throw std::invalid_argument("AugmentConfig: crop_area must lie in (0, 1]");
    if (scale_min <= 0 || scale_max > 1 || group_scale_min <= 0 || group_scale_max > 1)
      throw std::invalid_argument("AugmentConfig: scale ranges must lie in (0, 1]");
    if (zoom_min < 0.5 || zoom_max > 1.5) throw std::invalid_argument("AugmentConfig: zoom range must lie in [0.5, 1.5]");
    if (perspective_distortion < 0 || perspective_distortion > 0.5)
      throw std::invalid_argument("AugmentConfig: perspective_distortion must lie in [0, 0.5]");
    if (travel_min < 0) throw std::invalid_argument("AugmentConfig: negative travel");
    if (shake_amplitude < 0) throw std::invalid_argument("AugmentConfig: negative shake amplitude");
    if (background_donors < 1 || clones < 1 || walk_range < 0 || curriculum_epochs < 1)
      throw std::invalid_argument("AugmentConfig: counts out of range");
  }
};

inline void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = nlohmann::json::object();
  j["p_background"] = c.p_background;
  j["p_scale"] = c.p_scale;
  j["p_perspective"] = c.p_perspective;
  j["p_group"] = c.p_group;
  j["p_displace"] = c.p_displace;
  j["p_zoom"] = c.p_zoom;
  j["p_shake"] = c.p_shake;
  j["blend_min"] = c.blend_min;
  j["blend_max"] = c.blend_max;
  j["p_static_background"] = c.p_static_background;
  j["background_donors"] = c.background_donors;
  j["walk_range"] = c.walk_range;
  j["crop_area_min"] = c.crop_area_min;
  j["crop_area_max"] = c.crop_area_max;
  j["crop_ratio_min"] = c.crop_ratio_min;
  j["crop_ratio_max"] = c.crop_ratio_max;
  j["scale_min"] = c.scale_min;
  j["scale_max"] = c.scale_max;
  j["clones"] = c.clones;
  j["group_scale_min"] = c.group_scale_min;
  j["group_scale_max"] = c.group_scale_max;
  j["group_rotation_deg"] = c.group_rotation_deg;
  j["perspective_distortion"] = c.perspective_distortion;
  j["travel_min"] = c.travel_min;
  j["travel_max"] = c.travel_max;
  j["zoom_min"] = c.zoom_min;
  j["zoom_max"] = c.zoom_max;
  j["zoom_gap_min"] = c.zoom_gap_min;
  j["zoom_gap_max"] = c.zoom_gap_max;
  j["shake_amplitude"] = c.shake_amplitude;
  j["curriculum_epochs"] = c.curriculum_epochs;
  j["intensity"] = c.intensity;
}

/// Missing keys keep their defaults; unknown keys are an error.
inline void from_json(const nlohmann::json& j, AugmentConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("AugmentConfig: expected an object");
  const nlohmann::json known = AugmentConfig{};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw std::invalid_argument("AugmentConfig: unknown key '" + key + "'");
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("p_background", c.p_background);
  read("p_scale", c.p_scale);
  read("p_perspective", c.p_perspective);
  read("p_group", c.p_group);
  read("p_displace", c.p_displace);
  read("p_zoom", c.p_zoom);
  read("p_shake", c.p_shake);
  read("blend_min", c.blend_min);
  read("blend_max", c.blend_max);
  read("p_static_background", c.p_static_background);
  read("background_donors", c.background_donors);
  read("walk_range", c.walk_range);
  read("crop_area_min", c.crop_area_min);
  read("crop_area_max", c.crop_area_max);
  read("crop_ratio_min", c.crop_ratio_min);
  read("crop_ratio_max", c.crop_ratio_max);
  read("scale_min", c.scale_min);
  read("scale_max", c.scale_max);
  read("clones", c.clones);
  read("group_scale_min", c.group_scale_min);
  read("group_scale_max", c.group_scale_max);
  read("group_rotation_deg", c.group_rotation_deg);
  read("perspective_distortion", c.perspective_distortion);
  read("travel_min", c.travel_min);
  read("travel_max", c.travel_max);
  read("zoom_min", c.zoom_min);
  read("zoom_max", c.zoom_max);
  read("zoom_gap_min", c.zoom_gap_min);
  read("zoom_gap_max", c.zoom_gap_max);
  read("shake_amplitude", c.shake_amplitude);
  read("curriculum_epochs", c.curriculum_epochs);
  read("intensity", c.intensity);
}

/// Linear ramp of augmentation strength over the first epochs.
inline double curriculum_intensity(int epoch, int ramp_epochs) {
  if (ramp_epochs < 1) return 1.0;
  return std::clamp(static_cast<double>(epoch + 1) / ramp_epochs, 0.0, 1.0);
}

inline AugmentConfig at_epoch(AugmentConfig cfg, int epoch) {
  cfg.intensity = curriculum_intensity(epoch, cfg.curriculum_epochs);
  return cfg;
}

namespace detail {

inline double toward(double neutral, double v, double intensity) { return neutral + (v - neutral) * intensity; }

inline void for_each_frame(const Clip& in, Clip& out, const std::function<std::vector<float>(int)>& f) {
  for (int t = 0; t < in.frames(); ++t) {
    const auto v = f(t);
    std::copy(v.begin(), v.end(), out.frame(t).begin());
  }
}

inline void require_shape(const Clip& a, const Clip& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": clip shapes differ");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Background mixing

/// Source of donor clips, addressed by id.
struct DonorPool {
  std::vector<int> ids;
  std::function<Clip(int)> load;
  std::function<int(int)> frames;  // frame count of a donor without loading it

  /// In-memory pool; `clips` must outlive the pool.
  static DonorPool from_clips(const std::vector<Clip>& clips) {
    DonorPool p;
    for (int i = 0; i < static_cast<int>(clips.size()); ++i) p.ids.push_back(i);
    p.load = [&clips](int id) { return clips.at(static_cast<std::size_t>(id)); };
    p.frames = [&clips](int id) { return clips.at(static_cast<std::size_t>(id)).frames(); };
    return p;
  }
};

struct BackgroundParams {
  double a = 0.0;
  bool dynamic = false;
  std::vector<int> donors;
  std::vector<int> start;  // per donor: the frame (static) or walk origin (dynamic)
  std::vector<int> walk;   // per output frame offset, dynamic only
  Rect crop{0, 0, 1, 1};   // normalized to the donor frame
  bool deferred = false;   // built here, blended by the following displacement
};

inline void to_json(nlohmann::json& j, const Rect& r) { j = {r.x, r.y, r.w, r.h}; }
inline void from_json(const nlohmann::json& j, Rect& r) {
  r = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BackgroundParams, a, dynamic, donors, start, walk, crop, deferred)

/// Frame-index walk with steps in {-1, 0, 1} whose total range stays <= `range`.
inline std::vector<int> sample_walk(int frames, int range, Rng& rng) {
  std::vector<int> w(static_cast<std::size_t>(std::max(frames, 0)), 0);
  int lo = 0, hi = 0;
  for (std::size_t t = 1; t < w.size(); ++t) {
    int allowed[3], n = 0;
    for (int s = -1; s <= 1; ++s) {
      const int v = w[t - 1] + s;
      if (std::max(hi, v) - std::min(lo, v) <= range) allowed[n++] = s;
    }
    w[t] = w[t - 1] + allowed[rng.uniform_int(0, n - 1)];
    lo = std::min(lo, w[t]);
    hi = std::max(hi, w[t]);
  }
  return w;
}

/// Random rectangle with area fraction and aspect ratio from the config.
inline Rect sample_crop(const AugmentConfig& cfg, Rng& rng) {
  const double area = rng.uniform(cfg.crop_area_min, cfg.crop_area_max);
  const double ratio = rng.uniform(cfg.crop_ratio_min, cfg.crop_ratio_max);
  const double w = std::min(1.0, std::sqrt(area * ratio));
  const double h = std::min(1.0, std::sqrt(area / ratio));
  return {rng.uniform(0.0, 1.0 - w), rng.uniform(0.0, 1.0 - h), w, h};
}

inline BackgroundParams sample_background(const AugmentConfig& cfg, int frames, const DonorPool& pool, Rng& rng) {
  const int k = cfg.background_donors;
  if (static_cast<int>(pool.ids.size()) < std::max(k, 2))
    throw std::invalid_argument("background mixing needs at least 2 donor clips");
  BackgroundParams p;
  p.a = detail::toward(0.0, rng.uniform(cfg.blend_min, cfg.blend_max), cfg.intensity);
  p.dynamic = !rng.bernoulli(cfg.p_static_background);
  // Partial Fisher-Yates over the pool ids.
  std::vector<int> ids = pool.ids;
  for (int i = 0; i < k; ++i) {
    const int j = rng.uniform_int(i, static_cast<int>(ids.size()) - 1);
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    p.donors.push_back(ids[static_cast<std::size_t>(i)]);
  }
  int lo = 0, hi = 0;
  if (p.dynamic) {
    p.walk = sample_walk(frames, cfg.walk_range, rng);
    lo = *std::min_element(p.walk.begin(), p.walk.end());
    hi = *std::max_element(p.walk.begin(), p.walk.end());
  }
  for (int d : p.donors) {
    const int td = pool.frames(d);
    const int first = -lo, last = std::max(first, td - 1 - hi);
    p.start.push_back(rng.uniform_int(first, last));
  }
  p.crop = sample_crop(cfg, rng);
  return p;
}

/// Background clip of the requested shape: crop-resized donor frames,
/// aggregated with a pixelwise max.
inline Clip build_background(const BackgroundParams& p, int frames, int height, int width, const DonorPool& pool) {
  if (p.donors.empty() || p.start.size() != p.donors.size()) throw std::invalid_argument("BackgroundParams: no donors");
  if (p.dynamic && static_cast<int>(p.walk.size()) < frames)
    throw std::invalid_argument("BackgroundParams: walk shorter than clip");
  Clip bg(frames, height, width);
  std::vector<Clip> donors;
  for (int id : p.donors) donors.push_back(pool.load(id));
  auto donor_frame = [&](std::size_t d, int index) {
    const Clip& c = donors[d];
    const int i = std::clamp(index, 0, c.frames() - 1);
    const Rect r{p.crop.x * c.width(), p.crop.y * c.height(), p.crop.w * c.width(), p.crop.h * c.height()};
    return crop_resize(c.frame(i), c.width(), c.height(), r, width, height);
  };
  auto aggregate = [&](int t) {
    std::vector<float> acc;
    for (std::size_t d = 0; d < donors.size(); ++d) {
      const int index = p.start[d] + (p.dynamic ? p.walk[static_cast<std::size_t>(t)] : 0);
      auto img = donor_frame(d, index);
      if (acc.empty()) {
        acc = std::move(img);
      } else {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::max(acc[i], img[i]);
      }
    }
    return acc;
  };
  if (p.dynamic) {
    detail::for_each_frame(bg, bg, aggregate);
  } else {
    const auto still = aggregate(0);
    for (int t = 0; t < frames; ++t) std::copy(still.begin(), still.end(), bg.frame(t).begin());
  }
  return bg;
}

/// (1 - a) * fg + a * bg, pixelwise.
inline Clip blend(const Clip& fg, const Clip& bg, double a) {
  detail::require_shape(fg, bg, "blend");
  Clip out = fg;
  const float wa = static_cast<float>(a), wf = static_cast<float>(1.0 - a);
  auto& o = out.data();
  const auto& b = bg.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(wf * o[i] + wa * b[i], 0.0f, 1.0f);
  return out;
}

inline Clip mix_background(const Clip& fg, const BackgroundParams& p, const DonorPool& pool) {
  return blend(fg, build_background(p, fg.frames(), fg.height(), fg.width(), pool), p.a);
}

// ---------------------------------------------------------------------------
// Scale and place

/// Size of the downsampled clip and its top-left corner on the canvas.
struct ScaleParams {
  int height = 0, width = 0;
  int y = 0, x = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScaleParams, height, width, y, x)

inline ScaleParams sample_scale(double s_min, double s_max, int height, int width, double intensity, Rng& rng) {
  const double sh = detail::toward(1.0, rng.uniform(s_min, s_max), intensity);
  const double sw = detail::toward(1.0, rng.uniform(s_min, s_max), intensity);
  ScaleParams p;
  p.height = std::clamp(static_cast<int>(std::floor(sh * height)), 1, height);
  p.width = std::clamp(static_cast<int>(std::floor(sw * width)), 1, width);
  p.y = rng.uniform_int(0, height - p.height);
  p.x = rng.uniform_int(0, width - p.width);
  return p;
}

inline std::vector<float> place_frame(std::span<const float> src, int height, int width, const ScaleParams& p) {
  if (p.height < 1 || p.width < 1 || p.y < 0 || p.x < 0 || p.y + p.height > height || p.x + p.width > width)
    throw std::invalid_argument("ScaleParams: placement outside the canvas");
  const auto small = resize(src, width, height, p.width, p.height);
  std::vector<float> out(static_cast<std::size_t>(width) * height, 0.0f);
  for (int y = 0; y < p.height; ++y)
    std::copy_n(small.begin() + static_cast<std::ptrdiff_t>(y) * p.width, p.width,
                out.begin() + static_cast<std::ptrdiff_t>(p.y + y) * width + p.x);
  return out;
}

inline Clip scale_and_place(const Clip& fg, const ScaleParams& p) {
  Clip out(fg.frames(), fg.height(), fg.width());
  detail::for_each_frame(fg, out, [&](int t) { return place_frame(fg.frame(t), fg.height(), fg.width(), p); });
  return out;
}

// ---------------------------------------------------------------------------
// Group of clones

struct CloneParams {
  int roll = 0;  // clone frame t shows source frame (t + roll) mod T
  bool flip = false;
  double rotation_deg = 0.0;
  ScaleParams place;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CloneParams, roll, flip, rotation_deg, place)

struct GroupParams {
  std::vector<CloneParams> clones;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GroupParams, clones)

inline GroupParams sample_group(const AugmentConfig& cfg, int frames, int height, int width, Rng& rng) {
  GroupParams g;
  for (int i = 0; i < cfg.clones; ++i) {
    CloneParams c;
    const int max_roll = frames / 4;
    c.roll = max_roll >= 1 ? rng.uniform_int(1, max_roll) : 0;
    c.flip = rng.bernoulli(0.5);
    c.rotation_deg = rng.uniform(-cfg.group_rotation_deg, cfg.group_rotation_deg) * cfg.intensity;
    c.place = sample_scale(cfg.group_scale_min, cfg.group_scale_max, height, width, 1.0, rng);
    g.clones.push_back(c);
  }
  return g;
}

/// Rotation about the frame center, zero outside the source.
inline std::vector<float> rotate_frame(std::span<const float> src, int width, int height, double degrees) {
  if (degrees == 0.0) return {src.begin(), src.end()};
  const double r = degrees * std::numbers::pi / 180.0, c = std::cos(r), s = std::sin(r);
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  return warp(src, width, height, [&](double x, double y) {
    const double dx = x - cx, dy = y - cy;
    return std::pair{cx + c * dx + s * dy, cy - s * dx + c * dy};
  });
}

/// Roll, flip and rotate; placement is left to the caller.
inline Clip clone_pose(const Clip& fg, const CloneParams& c) {
  Clip out(fg.frames(), fg.height(), fg.width());
  const int T = fg.frames(), W = fg.width(), H = fg.height();
  detail::for_each_frame(fg, out, [&](int t) {
    const int src_t = T > 0 ? ((t + c.roll) % T + T) % T : 0;
    std::vector<float> img(fg.frame(src_t).begin(), fg.frame(src_t).end());
    if (c.flip)
      for (int y = 0; y < H; ++y) std::reverse(img.begin() + static_cast<std::ptrdiff_t>(y) * W, img.begin() + static_cast<std::ptrdiff_t>(y + 1) * W);
    return rotate_frame(img, W, H, c.rotation_deg);
  });
  return out;
}

inline Clip clone_group(const Clip& fg, const GroupParams& g) {
  if (g.clones.empty()) throw std::invalid_argument("GroupParams: no clones");
  Clip out(fg.frames(), fg.height(), fg.width());
  for (const auto& c : g.clones) {
    const Clip placed = scale_and_place(clone_pose(fg, c), c.place);
    auto& o = out.data();
    const auto& p = placed.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::max(o[i], p[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perspective

/// Displacements (dx, dy) in pixels of the top-left, top-right, bottom-right
/// and bottom-left frame corners.
struct PerspectiveParams {
  std::array<double, 8> corners{};
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PerspectiveParams, corners)

using Homography = Eigen::Matrix3d;

namespace detail {

inline std::array<Eigen::Vector2d, 4> frame_corners(int width, int height) {
  const double w = width - 1, h = height - 1;
  return {Eigen::Vector2d(0, 0), Eigen::Vector2d(w, 0), Eigen::Vector2d(w, h), Eigen::Vector2d(0, h)};
}

inline bool convex_quad(const std::array<Eigen::Vector2d, 4>& q) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d a = q[static_cast<std::size_t>((i + 1) % 4)] - q[static_cast<std::size_t>(i)];
    const Eigen::Vector2d b = q[static_cast<std::size_t>((i + 2) % 4)] - q[static_cast<std::size_t>((i + 1) % 4)];
    const double cross = a.x() * b.y() - a.y() * b.x();
    if (std::abs(cross) < 1e-9) return false;
    const int s = cross > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return true;
}

}  // namespace detail

/// Maps output pixel coordinates to source coordinates: the frame corners go
/// to the displaced corners. Returns nothing for a degenerate corner set.
inline std::optional<Homography> perspective_matrix(const PerspectiveParams& p, int width, int height) {
  if (width < 2 || height < 2) return std::nullopt;
  const auto src = detail::frame_corners(width, height);
  std::array<Eigen::Vector2d, 4> dst;
  for (std::size_t i = 0; i < 4; ++i) dst[i] = src[i] + Eigen::Vector2d(p.corners[2 * i], p.corners[2 * i + 1]);
  if (!detail::convex_quad(dst)) return std::nullopt;

  Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[static_cast<std::size_t>(i)].x(), y = src[static_cast<std::size_t>(i)].y();
    const double X = dst[static_cast<std::size_t>(i)].x(), Y = dst[static_cast<std::size_t>(i)].y();
    A.row(2 * i) << x, y, 1, 0, 0, 0, -X * x, -X * y;
    A.row(2 * i + 1) << 0, 0, 0, x, y, 1, -Y * x, -Y * y;
    b(2 * i) = X;
    b(2 * i + 1) = Y;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(A);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
  Homography H;
  H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return H;
}

/// Inward corner displacements, each component up to distortion * dim / 2.
/// Degenerate draws are resampled.
inline PerspectiveParams sample_perspective(double distortion, int height, int width, Rng& rng) {
  const double mx = distortion * 0.5 * width, my = distortion * 0.5 * height;
  static constexpr int sx[4] = {1, -1, -1, 1}, sy[4] = {1, 1, -1, -1};
  for (int attempt = 0; attempt < 100; ++attempt) {
    PerspectiveParams p;
    for (int i = 0; i < 4; ++i) {
      p.corners[static_cast<std::size_t>(2 * i)] = sx[i] * rng.uniform(0.0, mx);
      p.corners[static_cast<std::size_t>(2 * i + 1)] = sy[i] * rng.uniform(0.0, my);
    }
    if (perspective_matrix(p, width, height)) return p;
  }
  return PerspectiveParams{};
}

inline Clip perspective_warp(const Clip& clip, const PerspectiveParams& p) {
  const auto H = perspective_matrix(p, clip.width(), clip.height());
  if (!H) throw std::invalid_argument("perspective_warp: degenerate corner set");
  const Homography& m = *H;
  Clip out(clip.frames(), clip.height(), clip.width());
  detail::for_each_frame(clip, out, [&](int t) {
    return warp(clip.frame(t), clip.width(), clip.height(), [&m](double x, double y) {
      const double z = m(2, 0) * x + m(2, 1) * y + m(2, 2);
      return std::pair{(m(0, 0) * x + m(0, 1) * y + m(0, 2)) / z, (m(1, 0) * x + m(1, 1) * y + m(1, 2)) / z};
    });
  });
  return out;
}

// ---------------------------------------------------------------------------
// Relative displacement

enum class DisplaceMode { foreground, background, camera };

NLOHMANN_JSON_SERIALIZE_ENUM(DisplaceMode, {{DisplaceMode::foreground, "foreground"},
                                            {DisplaceMode::background, "background"},
                                            {DisplaceMode::camera, "camera"}})

/// Straight-line path of total length (dx * W, dy * H) pixels centered on the
/// frame. The moving layer is enlarged by 1 + margin; travel is clamped to it.
struct DisplaceParams {
  DisplaceMode mode = DisplaceMode::camera;
  double dx = 0.0, dy = 0.0;
  double margin = 0.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DisplaceParams, mode, dx, dy, margin)

inline DisplaceParams sample_displace(const AugmentConfig& cfg, DisplaceMode mode, Rng& rng) {
  DisplaceParams p;
  p.mode = mode;
  const double travel = rng.uniform(cfg.travel_min, cfg.travel_max) * cfg.intensity;
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.dx = travel * std::cos(theta);
  p.dy = travel * std::sin(theta);
  p.margin = travel;
  return p;
}

struct PathPoint {
  double x, y;
};

/// Window centers in the enlarged layer's pixel extent, one per frame:
/// x_t = x_0 + t * dx * W / (T - 1).
inline std::vector<PathPoint> displacement_centers(const DisplaceParams& p, int frames, int height, int width) {
  const double m = std::max(0.0, p.margin);
  const double dx = std::clamp(p.dx, -m, m) * width, dy = std::clamp(p.dy, -m, m) * height;
  const double cx = 0.5 * (1.0 + m) * width, cy = 0.5 * (1.0 + m) * height;
  std::vector<PathPoint> out;
  for (int t = 0; t < frames; ++t) {
    const double u = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.5;
    out.push_back({cx - 0.5 * dx + u * dx, cy - 0.5 * dy + u * dy});
  }
  return out;
}

namespace detail {

/// Window of the frame size centered at `c` in a layer enlarged by 1 + m,
/// sampled from the unenlarged frame.
inline std::vector<float> moving_window(std::span<const float> src, int width, int height, double m, PathPoint c) {
  const double k = 1.0 + m;
  const Rect r{(c.x - 0.5 * width) / k, (c.y - 0.5 * height) / k, width / k, height / k};
  return crop_resize(src, width, height, r, width, height);
}

/// The frame shrunk by 1 + m and centered at `c` on a zero canvas.
inline std::vector<float> moving_paste(std::span<const float> src, int width, int height, double m, PathPoint c) {
  const double k = 1.0 + m;
  const double left = c.x - 0.5 * width / k, top = c.y - 0.5 * height / k;
  return warp(src, width, height, [&](double x, double y) {
    return std::pair{(x + 0.5 - left) * k - 0.5, (y + 0.5 - top) * k - 0.5};
  });
}

}  // namespace detail

/// camera: moves a window over `clip`. background: moves the window over
/// `background` and blends `clip` on top with weight `a`. foreground: pastes a
/// shrunk `clip` along the path over a static `background`.
inline Clip displace(const Clip& clip, const DisplaceParams& p, const Clip* background = nullptr, double a = 0.0) {
  const int T = clip.frames(), H = clip.height(), W = clip.width();
  const double m = std::max(0.0, p.margin);
  const auto centers = displacement_centers(p, T, H, W);
  if (p.mode == DisplaceMode::camera) {
    Clip out(T, H, W);
    detail::for_each_frame(clip, out, [&](int t) {
      return detail::moving_window(clip.frame(t), W, H, m, centers[static_cast<std::size_t>(t)]);
    });
    return out;
  }
  if (!background) throw std::invalid_argument("displace: foreground/background modes need a background clip");
  detail::require_shape(clip, *background, "displace");
  Clip moved(T, H, W);
  if (p.mode == DisplaceMode::background) {
    detail::for_each_frame(*background, moved, [&](int t) {
      return detail::moving_window(background->frame(t), W, H, m, centers[static_cast<std::size_t>(t)]);
    });
    return blend(clip, moved, a);
  }
  const double off_x = 0.5 * m * W, off_y = 0.5 * m * H;
  detail::for_each_frame(clip, moved, [&](int t) {
    const auto c = centers[static_cast<std::size_t>(t)];
    return detail::moving_paste(clip.frame(t), W, H, m, {c.x - off_x, c.y - off_y});
  });
  return blend(moved, *background, a);
}

// ---------------------------------------------------------------------------
// Camera zoom

struct ZoomParams {
  double z = 1.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ZoomParams, z)

/// z from [zoom_min, zoom_max] minus the near-identity gap, pulled toward 1
/// by the curriculum intensity.
inline ZoomParams sample_zoom(const AugmentConfig& cfg, Rng& rng) {
  const double below = std::max(0.0, std::min(cfg.zoom_gap_min, cfg.zoom_max) - cfg.zoom_min);
  const double above = std::max(0.0, cfg.zoom_max - std::max(cfg.zoom_gap_max, cfg.zoom_min));
  double z = 1.0;
  if (below + above > 0) {
    const double u = rng.uniform(0.0, below + above);
    z = u < below ? cfg.zoom_min + u : std::max(cfg.zoom_gap_max, cfg.zoom_min) + (u - below);
  }
  return {detail::toward(1.0, z, cfg.intensity)};
}

/// Frame t shows a central window whose scale sweeps linearly from 1 to z,
/// relative to a layer upsampled by max(1, z).
inline double zoom_window_fraction(const ZoomParams& p, int t, int frames) {
  const double u = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.0;
  return (1.0 + (p.z - 1.0) * u) / std::max(1.0, p.z);
}

inline Clip camera_zoom(const Clip& clip, const ZoomParams& p) {
  if (!(p.z > 0)) throw std::invalid_argument("camera_zoom: z must be positive");
  const int T = clip.frames(), H = clip.height(), W = clip.width();
  Clip out(T, H, W);
  detail::for_each_frame(clip, out, [&](int t) {
    const double f = zoom_window_fraction(p, t, T);
    const Rect r{0.5 * W * (1 - f), 0.5 * H * (1 - f), f * W, f * H};
    return crop_resize(clip.frame(t), W, H, r, W, H);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Camera shake

/// d_t = sum_i (1/i) sin(2 pi f_i t + phi_i) + eta_t for one axis.
struct ShakeSequence {
  std::vector<double> freq, phase, noise;

  std::vector<double> values() const {
    std::vector<double> d(noise.size());
    for (std::size_t t = 0; t < d.size(); ++t) {
      double s = noise[t];
      for (std::size_t i = 0; i < freq.size(); ++i)
        s += std::sin(2.0 * std::numbers::pi * freq[i] * static_cast<double>(t) + phase[i]) / static_cast<double>(i + 1);
      d[t] = s;
    }
    return d;
  }

  /// Largest possible |d_t|: sum of 1/i plus the noise range.
  double bound() const {
    double b = 0.3;
    for (std::size_t i = 1; i <= freq.size(); ++i) b += 1.0 / static_cast<double>(i);
    return b;
  }

  static ShakeSequence sample(int frames, Rng& rng) {
    ShakeSequence s;
    const int n = rng.uniform_int(2, 5);
    for (int i = 0; i < n; ++i) {
      s.freq.push_back(rng.uniform(0.1, 1.2));
      s.phase.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    }
    for (int t = 0; t < frames; ++t) s.noise.push_back(rng.uniform(-0.3, 0.3));
    return s;
  }
};

/// Per-frame integer window offsets inside a layer padded by `margin` pixels.
struct ShakeParams {
  int margin = 0;
  std::vector<int> ox, oy;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ShakeParams, margin, ox, oy)

inline ShakeParams sample_shake(double amplitude_px, int frames, Rng& rng) {
  if (amplitude_px < 0) throw std::invalid_argument("camera_shake: negative amplitude");
  ShakeParams p;
  p.margin = static_cast<int>(std::ceil(amplitude_px));
  for (auto* axis : {&p.ox, &p.oy}) {
    const auto seq = ShakeSequence::sample(frames, rng);
    const double k = amplitude_px / seq.bound();
    for (double d : seq.values()) axis->push_back(static_cast<int>(std::lround(d * k)));
  }
  return p;
}

inline Clip camera_shake(const Clip& clip, const ShakeParams& p) {
  const int T = clip.frames(), H = clip.height(), W = clip.width();
  if (static_cast<int>(p.ox.size()) < T || static_cast<int>(p.oy.size()) < T)
    throw std::invalid_argument("camera_shake: offset sequence shorter than clip");
  const double kx = static_cast<double>(W + 2 * p.margin) / W, ky = static_cast<double>(H + 2 * p.margin) / H;
  Clip out(T, H, W);
  detail::for_each_frame(clip, out, [&](int t) {
    const int ox = std::clamp(p.ox[static_cast<std::size_t>(t)], -p.margin, p.margin);
    const int oy = std::clamp(p.oy[static_cast<std::size_t>(t)], -p.margin, p.margin);
    const Rect r{(p.margin + ox) / kx, (p.margin + oy) / ky, W / kx, H / ky};
    return crop_resize(clip.frame(t), W, H, r, W, H);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Traces

struct AugStep {
  std::string name;
  nlohmann::json params;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AugStep, name, params)

using AugTrace = std::vector<AugStep>;

/// Applies a recorded trace. A deferred background step hands its background
/// to the displacement step that follows it.
inline Clip replay(const Clip& input, const AugTrace& trace, const DonorPool& pool) {
  Clip cur = input;
  std::optional<Clip> pending;
  double pending_a = 0.0;
  for (const auto& step : trace) {
    const auto& j = step.params;
    if (step.name == "scale") {
      cur = scale_and_place(cur, j.get<ScaleParams>());
    } else if (step.name == "group") {
      cur = clone_group(cur, j.get<GroupParams>());
    } else if (step.name == "perspective") {
      cur = perspective_warp(cur, j.get<PerspectiveParams>());
    } else if (step.name == "background") {
      const auto p = j.get<BackgroundParams>();
      Clip bg = build_background(p, cur.frames(), cur.height(), cur.width(), pool);
      if (p.deferred) {
        pending = std::move(bg);
        pending_a = p.a;
      } else {
        cur = blend(cur, bg, p.a);
      }
    } else if (step.name == "displace") {
      const auto p = j.get<DisplaceParams>();
      if (p.mode == DisplaceMode::camera) {
        cur = displace(cur, p);
      } else {
        if (!pending) throw std::invalid_argument("replay: displacement needs a preceding deferred background");
        cur = displace(cur, p, &*pending, pending_a);
        pending.reset();
      }
    } else if (step.name == "zoom") {
      cur = camera_zoom(cur, j.get<ZoomParams>());
    } else if (step.name == "shake") {
      cur = camera_shake(cur, j.get<ShakeParams>());
    } else {
      throw std::invalid_argument("replay: unknown transform '" + step.name + "'");
    }
  }
  if (pending) throw std::invalid_argument("replay: deferred background without displacement");
  return cur;
}

/// Decisions that may be shared across a batch.
struct SharedDraw {
  std::optional<PerspectiveParams> perspective;
  std::optional<DisplaceParams> displace;
  std::optional<ZoomParams> zoom;
  std::optional<ShakeParams> shake;
};

inline SharedDraw sample_shared(const AugmentConfig& cfg, int frames, int height, int width, bool have_background,
                                Rng& rng) {
  SharedDraw d;
  if (rng.bernoulli(cfg.p_perspective))
    d.perspective = sample_perspective(cfg.perspective_distortion * cfg.intensity, height, width, rng);
  if (rng.bernoulli(cfg.p_displace)) {
    auto mode = static_cast<DisplaceMode>(rng.uniform_int(0, 2));
    if (!have_background) mode = DisplaceMode::camera;
    d.displace = sample_displace(cfg, mode, rng);
  }
  if (rng.bernoulli(cfg.p_zoom)) d.zoom = sample_zoom(cfg, rng);
  if (rng.bernoulli(cfg.p_shake))
    d.shake = sample_shake(cfg.shake_amplitude * cfg.intensity * std::min(height, width), frames, rng);
  return d;
}

/// Fixed order: group or scale, perspective, background (blended directly or
/// through a foreground/background displacement), camera displacement, zoom,
/// shake.
inline AugTrace sample_trace(const AugmentConfig& cfg, int frames, int height, int width, const DonorPool& pool,
                             Rng& rng, const SharedDraw* shared = nullptr) {
  AugTrace trace;
  if (rng.bernoulli(cfg.p_group)) {
    trace.push_back({"group", sample_group(cfg, frames, height, width, rng)});
  } else if (rng.bernoulli(cfg.p_scale)) {
    trace.push_back({"scale", sample_scale(cfg.scale_min, cfg.scale_max, height, width, cfg.intensity, rng)});
  }
  const bool use_background = rng.bernoulli(cfg.p_background);
  const SharedDraw own = shared ? SharedDraw{} : sample_shared(cfg, frames, height, width, use_background, rng);
  const SharedDraw& d = shared ? *shared : own;

  if (d.perspective) trace.push_back({"perspective", *d.perspective});
  std::optional<DisplaceParams> disp = d.displace;
  if (disp && !use_background) disp->mode = DisplaceMode::camera;
  if (use_background) {
    auto bg = sample_background(cfg, frames, pool, rng);
    bg.deferred = disp && disp->mode != DisplaceMode::camera;
    trace.push_back({"background", bg});
  }
  if (disp) trace.push_back({"displace", *disp});
  if (d.zoom) trace.push_back({"zoom", *d.zoom});
  if (d.shake) trace.push_back({"shake", *d.shake});
  return trace;
}

struct Augmented {
  Clip clip;
  AugTrace trace;
};

inline Augmented augment_clip(const Clip& fg, const DonorPool& pool, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Augmented out;
  out.trace = sample_trace(cfg, fg.frames(), fg.height(), fg.width(), pool, rng);
  out.clip = replay(fg, out.trace, pool);
  return out;
}

/// With `shared`, perspective, displacement, zoom and shake are drawn once and
/// applied identically to every clip; background, scale and group stay per
/// sample. Shared mode requires equally shaped clips.
inline std::vector<Augmented> augment_batch(const std::vector<Clip>& clips, const DonorPool& pool,
                                            const AugmentConfig& cfg, Rng& rng, bool shared) {
  cfg.validate();
  std::vector<Augmented> out;
  if (clips.empty()) return out;
  std::optional<SharedDraw> draw;
  if (shared) {
    for (const auto& c : clips)
      if (!c.same_shape(clips.front())) throw std::invalid_argument("augment_batch: shared mode needs equal shapes");
    const Clip& c = clips.front();
    draw = sample_shared(cfg, c.frames(), c.height(), c.width(), cfg.p_background > 0, rng);
  }
  for (const auto& c : clips) {
    Augmented a;
    a.trace = sample_trace(cfg, c.frames(), c.height(), c.width(), pool, rng, draw ? &*draw : nullptr);
    a.clip = replay(c, a.trace, pool);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace fvid
