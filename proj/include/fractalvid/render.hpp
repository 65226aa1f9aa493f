#pragma once

// Chaos-game rendering of IFS attractors into normalized 2D histograms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractalvid/clip.hpp"
#include "fractalvid/ifs.hpp"
#include "fractalvid/motion.hpp"
#include "fractalvid/random.hpp"
#include "fractalvid/variation.hpp"

namespace fvid {

struct Viewport {
  double x_min = -1, x_max = 1, y_min = -1, y_max = 1;

  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) throw std::invalid_argument("Viewport: empty extent");
  }
  friend bool operator==(const Viewport&, const Viewport&) = default;
};

/// Too many non-finite points; the render is abandoned.
class RenderAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Normalization { linear, log };

struct RenderOptions {
  int burn_in = 50;
  Normalization normalization = Normalization::linear;
};

inline constexpr int kDefaultIterations = 100000;
inline constexpr int kViewportIterations = 10000;

namespace detail {

/// Runs the chaos game and hands every post-burn-in point to `sink`.
/// Non-finite points are reset to the origin; more than 1% resets aborts.
template <class Sink>
void run_chaos_game(const IfsSystem& system, VariationId variation, int iterations, int burn_in, Rng& rng,
                    Sink&& sink) {
  const auto& maps = system.maps();
  const auto& probs = system.probs();
  const std::size_t n = maps.size();
  std::vector<double> cumulative(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) cumulative[i] = (acc += probs[i]);
  cumulative[n - 1] = std::numeric_limits<double>::infinity();

  const long max_resets = iterations / 100;
  long resets = 0;
  double x = rng.uniform(-1.0, 1.0);
  double y = rng.uniform(-1.0, 1.0);
  const bool linear = variation.is_linear();
  const long total = static_cast<long>(iterations) + burn_in;
  for (long i = 0; i < total; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    while (u >= cumulative[k]) ++k;
    const AffineMap& m = maps[k];
    const double nx = m.a * x + m.b * y + m.c;
    const double ny = m.d * x + m.e * y + m.f;
    if (linear) {
      x = nx;
      y = ny;
    } else {
      const Point p = apply_variation({nx, ny}, variation, m);
      x = p.x;
      y = p.y;
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      x = y = 0.0;
      if (++resets > max_resets)
        throw RenderAborted("chaos game: " + std::to_string(resets) + " non-finite points in " +
                            std::to_string(iterations) + " iterations");
      continue;
    }
    if (i >= burn_in) sink(x, y);
  }
}

}  // namespace detail

/// Renders the attractor of `system` into a width x height histogram over
/// `viewport`, normalized so the brightest pixel is 1. Points outside the
/// viewport are skipped. Row index grows with y.
inline Frame chaos_game(const IfsSystem& system, VariationId variation, int iterations, const Viewport& viewport,
                        int width, int height, Rng& rng, const RenderOptions& opt = {}) {
  if (iterations < 1000) throw std::invalid_argument("chaos_game: need at least 1000 iterations");
  if (width < 1 || height < 1) throw std::invalid_argument("chaos_game: empty frame");
  viewport.validate();

  std::vector<std::uint32_t> hist(static_cast<std::size_t>(width) * height, 0);
  const double sx = width / (viewport.x_max - viewport.x_min);
  const double sy = height / (viewport.y_max - viewport.y_min);
  detail::run_chaos_game(system, variation, iterations, opt.burn_in, rng, [&](double x, double y) {
    const double fx = (x - viewport.x_min) * sx;
    const double fy = (y - viewport.y_min) * sy;
    if (fx >= 0.0 && fx < width && fy >= 0.0 && fy < height)
      ++hist[static_cast<std::size_t>(fy) * width + static_cast<std::size_t>(fx)];
  });

  Frame frame(width, height);
  const std::uint32_t peak = *std::max_element(hist.begin(), hist.end());
  if (peak == 0) return frame;
  if (opt.normalization == Normalization::linear) {
    const float inv = 1.0f / static_cast<float>(peak);
    for (std::size_t i = 0; i < hist.size(); ++i) frame.values[i] = hist[i] == peak ? 1.0f : hist[i] * inv;
  } else {
    const double inv = 1.0 / std::log1p(static_cast<double>(peak));
    for (std::size_t i = 0; i < hist.size(); ++i)
      frame.values[i] = static_cast<float>(std::log1p(static_cast<double>(hist[i])) * inv);
  }
  return frame;
}

/// Percentile bounding box of a short chaos-game pass.
struct PointBounds {
  double x_lo, x_hi, y_lo, y_hi;
  bool valid = false;
};

inline PointBounds percentile_bounds(const IfsSystem& system, VariationId variation, Rng& rng,
                                     int iterations = kViewportIterations, double lower_pct = 0.01,
                                     double upper_pct = 0.99) {
  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(iterations));
  ys.reserve(static_cast<std::size_t>(iterations));
  detail::run_chaos_game(system, variation, iterations, 50, rng, [&](double x, double y) {
    xs.push_back(x);
    ys.push_back(y);
  });
  if (xs.empty()) return {0, 0, 0, 0, false};
  auto pick = [](std::vector<double>& v, double q) {
    const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
  };
  PointBounds b;
  b.x_lo = pick(xs, lower_pct);
  b.x_hi = pick(xs, upper_pct);
  b.y_lo = pick(ys, lower_pct);
  b.y_hi = pick(ys, upper_pct);
  b.valid = true;
  return b;
}

inline std::uint64_t frame_seed(std::uint64_t clip_seed, int t) { return derive_seed(clip_seed, static_cast<std::uint64_t>(t)); }

/// One viewport for the whole clip: union of per-frame 1st-99th percentile
/// boxes, widened by a 5% margin on every side.
inline Viewport clip_viewport(const ClipParams& params, std::uint64_t clip_seed) {
  bool any = false;
  Viewport v{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int t = 0; t < params.frames; ++t) {
    Rng rng(derive_seed(clip_seed ^ kViewportSalt, static_cast<std::uint64_t>(t)));
    PointBounds b;
    try {
      b = percentile_bounds(params.system(t), params.variation, rng);
    } catch (const RenderAborted&) {
      continue;
    }
    if (!b.valid) continue;
    any = true;
    v.x_min = std::min(v.x_min, b.x_lo);
    v.x_max = std::max(v.x_max, b.x_hi);
    v.y_min = std::min(v.y_min, b.y_lo);
    v.y_max = std::max(v.y_max, b.y_hi);
  }
  if (!any) return Viewport{};
  const double cx = 0.5 * (v.x_min + v.x_max), cy = 0.5 * (v.y_min + v.y_max);
  // A collapsed attractor still needs a nonzero window.
  const double hw = std::max(0.5 * (v.x_max - v.x_min) * 1.05, 1e-6);
  const double hh = std::max(0.5 * (v.y_max - v.y_min) * 1.05, 1e-6);
  return {cx - hw, cx + hw, cy - hh, cy + hh};
}

struct RenderedClip {
  Clip clip;
  Viewport viewport;
  int empty_frames = 0;
  bool degenerate = false;
};

inline bool too_many_empty(int empty_frames, int frames) {
  return frames > 0 && static_cast<double>(empty_frames) > kDegenerateFrameFraction * frames;
}

/// Renders every frame into the shared clip viewport. Frame t uses the seed
/// derived from (clip_seed, t), so frames can be rendered in any order.
inline RenderedClip render_clip(const ClipParams& params, int width, int height, int iterations_per_frame,
                                std::uint64_t clip_seed, const RenderOptions& opt = {}) {
  params.validate();
  RenderedClip out;
  out.viewport = clip_viewport(params, clip_seed);
  out.clip = Clip(params.frames, height, width);
  for (int t = 0; t < params.frames; ++t) {
    Rng rng(frame_seed(clip_seed, t));
    const Frame f = chaos_game(params.system(t), params.variation, iterations_per_frame, out.viewport, width, height,
                               rng, opt);
    out.clip.set_frame(t, f);
    if (occupancy(f.values) == 0.0) ++out.empty_frames;
  }
  out.degenerate = too_many_empty(out.empty_frames, params.frames);
  return out;
}

/// Iteration budget that keeps hits-per-pixel at the 100k @ 256x256 density.
inline int scaled_iterations(int width, int height) {
  const double px = static_cast<double>(width) * height;
  return std::max(1000, static_cast<int>(std::lround(kDefaultIterations * px / (256.0 * 256.0))));
}

}  // namespace fvid
