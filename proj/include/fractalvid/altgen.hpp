#pragma once

// Non-fractal synthetic video families: Perlin noise, octopus curves and dead leaves.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractalvid/augment.hpp"
#include "fractalvid/clip.hpp"
#include "fractalvid/interpolant.hpp"
#include "fractalvid/morphology.hpp"
#include "fractalvid/random.hpp"

namespace fvid {

// ---------------------------------------------------------------------------
// Perlin noise

/// Improved gradient noise; the permutation table comes from the seed.
class PerlinNoise {
 public:
  explicit PerlinNoise(Rng& rng) {
    std::array<int, 256> base;
    std::iota(base.begin(), base.end(), 0);
    for (int i = 255; i > 0; --i) std::swap(base[static_cast<std::size_t>(i)], base[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    for (std::size_t i = 0; i < 512; ++i) perm_[i] = base[i & 255];
  }

  /// Roughly in [-1, 1]; exactly 0 at integer lattice points.
  double operator()(double x, double y, double z) const {
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const int X = static_cast<int>(fx) & 255, Y = static_cast<int>(fy) & 255, Z = static_cast<int>(fz) & 255;
    x -= fx;
    y -= fy;
    z -= fz;
    const double u = fade(x), v = fade(y), w = fade(z);
    const int A = p(X) + Y, AA = p(A) + Z, AB = p(A + 1) + Z;
    const int B = p(X + 1) + Y, BA = p(B) + Z, BB = p(B + 1) + Z;
    return lerp(w,
                lerp(v, lerp(u, grad(p(AA), x, y, z), grad(p(BA), x - 1, y, z)),
                     lerp(u, grad(p(AB), x, y - 1, z), grad(p(BB), x - 1, y - 1, z))),
                lerp(v, lerp(u, grad(p(AA + 1), x, y, z - 1), grad(p(BA + 1), x - 1, y, z - 1)),
                     lerp(u, grad(p(AB + 1), x, y - 1, z - 1), grad(p(BB + 1), x - 1, y - 1, z - 1))));
  }

 private:
  int p(int i) const { return perm_[static_cast<std::size_t>(i)]; }
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double t, double a, double b) { return a + t * (b - a); }
  static double grad(int hash, double x, double y, double z) {
    const int h = hash & 15;
    const double u = h < 8 ? x : y;
    const double v = h < 4 ? y : (h == 12 || h == 14 ? x : z);
    return ((h & 1) ? -u : u) + ((h & 2) ? -v : v);
  }

  std::array<int, 512> perm_{};
};

/// Spatial frequencies in cycles per frame width/height, temporal in cycles per clip.
struct PerlinLabel {
  int fx = 2, fy = 2, ft = 2;
  friend bool operator==(const PerlinLabel&, const PerlinLabel&) = default;
};

inline constexpr std::array<int, 4> kPerlinFrequencies = {2, 4, 8, 16};
inline constexpr int kPerlinClasses = 64;

inline PerlinLabel perlin_label(int class_id) {
  if (class_id < 0 || class_id >= kPerlinClasses) throw std::invalid_argument("perlin_label: class out of range");
  return {kPerlinFrequencies[static_cast<std::size_t>(class_id / 16)],
          kPerlinFrequencies[static_cast<std::size_t>(class_id / 4 % 4)],
          kPerlinFrequencies[static_cast<std::size_t>(class_id % 4)]};
}

inline Clip perlin_clip(const PerlinLabel& label, int frames, int height, int width, Rng& rng) {
  if (label.fx < 1 || label.fy < 1 || label.ft < 1) throw std::invalid_argument("perlin_clip: frequencies must be positive");
  const PerlinNoise noise(rng);
  Clip c(frames, height, width);
  for (int t = 0; t < frames; ++t) {
    const double z = static_cast<double>(t) * label.ft / frames;
    for (int y = 0; y < height; ++y) {
      const double yy = static_cast<double>(y) * label.fy / height;
      for (int x = 0; x < width; ++x) {
        const double v = 0.5 * (noise(static_cast<double>(x) * label.fx / width, yy, z) + 1.0);
        c.at(t, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Shapes shared by dead leaves and octopus decorations

enum class LeafShape { circle, polygon };

/// A filled shape moving along a quadratic Bezier trajectory.
struct LeafSpec {
  LeafShape shape = LeafShape::circle;
  int edges = 0;         // polygon only, 3..8
  double size = 4.0;     // radius / circumradius in pixels
  double rotation = 0.0;
  float gray = 1.0f;
  std::array<PathPoint, 3> path{};

  PathPoint center(double u) const {
    const double a = (1 - u) * (1 - u), b = 2 * (1 - u) * u, c = u * u;
    return {a * path[0].x + b * path[1].x + c * path[2].x, a * path[0].y + b * path[1].y + c * path[2].y};
  }

  void validate() const {
    if (shape == LeafShape::polygon && (edges < 3 || edges > 8)) throw std::invalid_argument("LeafSpec: edges must be in 3..8");
    if (!(size > 0)) throw std::invalid_argument("LeafSpec: size must be positive");
  }
};

/// Paints the leaf over `img` at the given center.
inline void draw_leaf(std::span<float> img, int width, int height, const LeafSpec& leaf, PathPoint c) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - leaf.size)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(c.x + leaf.size)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - leaf.size)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(c.y + leaf.size)));
  std::vector<PathPoint> verts;
  if (leaf.shape == LeafShape::polygon)
    for (int i = 0; i < leaf.edges; ++i) {
      const double a = leaf.rotation + 2.0 * std::numbers::pi * i / leaf.edges;
      verts.push_back({c.x + leaf.size * std::cos(a), c.y + leaf.size * std::sin(a)});
    }
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      bool in = true;
      if (leaf.shape == LeafShape::circle) {
        in = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y) <= leaf.size * leaf.size;
      } else {
        for (std::size_t i = 0; i < verts.size() && in; ++i) {
          const auto& a = verts[i];
          const auto& b = verts[(i + 1) % verts.size()];
          in = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) >= 0;
        }
      }
      if (in) img[static_cast<std::size_t>(y) * width + x] = leaf.gray;
    }
}

inline LeafSpec sample_leaf(int height, int width, Rng& rng) {
  LeafSpec l;
  const double dim = std::min(height, width);
  l.shape = rng.bernoulli(0.5) ? LeafShape::circle : LeafShape::polygon;
  l.edges = l.shape == LeafShape::polygon ? rng.uniform_int(3, 8) : 0;
  l.size = rng.uniform(0.04, 0.2) * dim;
  l.rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
  l.gray = static_cast<float>(rng.uniform(0.1, 1.0));
  const PathPoint p0{rng.uniform(0.0, width), rng.uniform(0.0, height)};
  const PathPoint p2{p0.x + rng.uniform(-0.25, 0.25) * width, p0.y + rng.uniform(-0.25, 0.25) * height};
  const PathPoint p1{0.5 * (p0.x + p2.x) + rng.uniform(-0.15, 0.15) * width,
                     0.5 * (p0.y + p2.y) + rng.uniform(-0.15, 0.15) * height};
  l.path = {p0, p1, p2};
  return l;
}

// ---------------------------------------------------------------------------
// Dead leaves

/// Leaves are painted in list order every frame; later leaves occlude earlier ones.
inline Clip deadleaves_clip(const std::vector<LeafSpec>& leaves, int frames, int height, int width) {
  if (leaves.empty()) throw std::invalid_argument("deadleaves_clip: need at least one leaf");
  for (const auto& l : leaves) l.validate();
  Clip c(frames, height, width);
  for (int t = 0; t < frames; ++t) {
    const double u = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.0;
    for (const auto& l : leaves) draw_leaf(c.frame(t), width, height, l, l.center(u));
  }
  return c;
}

inline std::vector<LeafSpec> sample_leaves(int height, int width, Rng& rng, int count = 0) {
  if (count <= 0) count = rng.uniform_int(10, 30);
  std::vector<LeafSpec> out;
  for (int i = 0; i < count; ++i) out.push_back(sample_leaf(height, width, rng));
  return out;
}

/// Intra-class variant: jittered trajectories, sizes and gray levels.
inline std::vector<LeafSpec> mutate_leaves(std::vector<LeafSpec> leaves, int height, int width, Rng& rng) {
  for (auto& l : leaves) {
    for (auto& p : l.path) {
      p.x += rng.uniform(-0.03, 0.03) * width;
      p.y += rng.uniform(-0.03, 0.03) * height;
    }
    l.size *= rng.uniform(0.9, 1.1);
    l.gray = static_cast<float>(std::clamp(l.gray + rng.uniform(-0.1, 0.1), 0.05, 1.0));
  }
  return leaves;
}

// ---------------------------------------------------------------------------
// Octopus

/// One arm: start and end waveforms per coordinate, blended per frame by `motion`.
struct OctopusArm {
  RandomCurve x_start, y_start, x_end, y_end;
  Interpolant motion = LinearInterp{};
};

struct OctopusSpec {
  PathPoint junction{};
  std::vector<OctopusArm> arms;
  double blur_sigma = 1.5;
  int closing_radius = 2;
  bool remove_interior = false;
  std::vector<LeafSpec> shapes;  // static decorations, drawn into the mask

  void validate() const {
    if (arms.size() < 2) throw std::invalid_argument("OctopusSpec: need at least 2 arms");
    if (blur_sigma < 1.0 || closing_radius < 1) throw std::invalid_argument("OctopusSpec: radii must be >= 1 px");
  }
};

inline OctopusSpec sample_octopus(int height, int width, Rng& rng) {
  OctopusSpec s;
  s.junction = {rng.uniform(0.3, 0.7) * width, rng.uniform(0.3, 0.7) * height};
  const int n = rng.uniform_int(2, 6);
  const auto motion = assign_interpolants(n, rng).per_function;
  for (int i = 0; i < n; ++i) {
    OctopusArm a;
    a.x_start = RandomCurve::sample(rng);
    a.y_start = RandomCurve::sample(rng);
    a.x_end = RandomCurve::sample(rng);
    a.y_end = RandomCurve::sample(rng);
    a.motion = motion[static_cast<std::size_t>(i)];
    s.arms.push_back(a);
  }
  s.blur_sigma = rng.uniform(1.0, 2.5);
  s.closing_radius = rng.uniform_int(1, 3);
  s.remove_interior = rng.bernoulli(0.5);
  if (rng.bernoulli(0.5)) {
    const int k = rng.uniform_int(1, 3);
    for (int i = 0; i < k; ++i) {
      auto l = sample_leaf(height, width, rng);
      l.gray = 1.0f;
      l.path[1] = l.path[2] = l.path[0];
      s.shapes.push_back(l);
    }
  }
  return s;
}

/// Intra-class variant: perturbed waveform control values and junction.
inline OctopusSpec mutate_octopus(OctopusSpec s, int height, int width, Rng& rng) {
  auto jitter = [&rng](RandomCurve& c) {
    for (double& v : c.values) v = std::clamp(v + rng.uniform(-0.1, 0.1), 0.0, 1.0);
  };
  for (auto& a : s.arms) {
    jitter(a.x_start);
    jitter(a.y_start);
    jitter(a.x_end);
    jitter(a.y_end);
  }
  s.junction.x += rng.uniform(-0.02, 0.02) * width;
  s.junction.y += rng.uniform(-0.02, 0.02) * height;
  return s;
}

inline constexpr int kArmSamples = 128;

/// Arm polyline at normalized time u; every arm starts at the junction.
inline std::vector<PathPoint> arm_points(const OctopusSpec& s, const OctopusArm& a, double u, int height, int width) {
  const double c = evaluate(a.motion, u);
  auto wave = [c](const RandomCurve& from, const RandomCurve& to, double v) {
    return (1.0 - c) * from.clamped(v) + c * to.clamped(v);
  };
  const double x0 = wave(a.x_start, a.x_end, 0.0), y0 = wave(a.y_start, a.y_end, 0.0);
  std::vector<PathPoint> pts;
  for (int i = 0; i <= kArmSamples; ++i) {
    const double v = static_cast<double>(i) / kArmSamples;
    pts.push_back({s.junction.x + 0.5 * width * (wave(a.x_start, a.x_end, v) - x0),
                   s.junction.y + 0.5 * height * (wave(a.y_start, a.y_end, v) - y0)});
  }
  return pts;
}

inline void draw_polyline(std::vector<float>& img, int width, int height, const std::vector<PathPoint>& pts) {
  auto plot = [&](double x, double y) {
    const long xi = std::lround(x), yi = std::lround(y);
    if (xi >= 0 && yi >= 0 && xi < width && yi < height) img[static_cast<std::size_t>(yi) * width + xi] = 1.0f;
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double dx = pts[i + 1].x - pts[i].x, dy = pts[i + 1].y - pts[i].y;
    const int steps = std::max(1, static_cast<int>(std::ceil(2.0 * std::max(std::abs(dx), std::abs(dy)))));
    for (int k = 0; k <= steps; ++k) plot(pts[i].x + dx * k / steps, pts[i].y + dy * k / steps);
  }
}

/// Raw polylines, blurred, binarized at a quarter of a blurred line's peak,
/// then closed with a disk.
inline Mask octopus_mask(const OctopusSpec& s, double u, int height, int width, Mask* before_closing = nullptr) {
  std::vector<float> raw(static_cast<std::size_t>(width) * height, 0.0f);
  for (const auto& a : s.arms) draw_polyline(raw, width, height, arm_points(s, a, u, height, width));
  const auto blurred = gaussian_blur(raw, width, height, s.blur_sigma);
  const double threshold = 0.25 / (std::sqrt(2.0 * std::numbers::pi) * s.blur_sigma);
  Mask m(width, height);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = blurred[i] >= threshold;
  if (!s.shapes.empty()) {
    std::vector<float> deco(m.bits.size(), 0.0f);
    for (const auto& l : s.shapes) draw_leaf(deco, width, height, l, l.path[0]);
    for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] |= deco[i] > 0.0f;
  }
  if (before_closing) *before_closing = m;
  m = closing(m, s.closing_radius);
  if (s.remove_interior) m = gradient(m, 1);
  return m;
}

inline Clip octopus_clip(const OctopusSpec& s, int frames, int height, int width) {
  s.validate();
  Clip c(frames, height, width);
  for (int t = 0; t < frames; ++t) {
    const double u = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.0;
    const Mask m = octopus_mask(s, u, height, width);
    auto f = c.frame(t);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = m.bits[i] ? 1.0f : 0.0f;
  }
  return c;
}

/// Optional colorization: one clip per RGB channel.
inline std::array<Clip, 3> tint(const Clip& c, const std::array<float, 3>& rgb) {
  std::array<Clip, 3> out{c, c, c};
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (float& v : out[ch].data()) v *= rgb[ch];
  return out;
}

// ---------------------------------------------------------------------------

enum class AltKind { perlin, octopus, leaves };

inline const char* to_string(AltKind k) {
  switch (k) {
    case AltKind::perlin: return "perlin";
    case AltKind::octopus: return "octopus";
    case AltKind::leaves: return "leaves";
  }
  return "?";
}

inline AltKind parse_alt_kind(const std::string& s) {
  if (s == "perlin") return AltKind::perlin;
  if (s == "octopus") return AltKind::octopus;
  if (s == "leaves" || s == "deadleaves") return AltKind::leaves;
  throw std::invalid_argument("unknown generator kind: " + s);
}

/// One clip of the family. With class_id >= 0 the clip belongs to that class:
/// Perlin classes index the frequency grid; octopus and leaves classes are a
/// prototype drawn from class_seed, mutated per clip with `seed`.
inline Clip alt_clip(AltKind kind, int frames, int height, int width, std::uint64_t seed, int class_id = -1,
                     std::uint64_t class_seed = 0) {
  Rng rng(seed);
  const bool labeled = class_id >= 0;
  switch (kind) {
    case AltKind::perlin: {
      const PerlinLabel label = labeled ? perlin_label(class_id % kPerlinClasses)
                                        : perlin_label(rng.uniform_int(0, kPerlinClasses - 1));
      return perlin_clip(label, frames, height, width, rng);
    }
    case AltKind::octopus: {
      if (!labeled) return octopus_clip(sample_octopus(height, width, rng), frames, height, width);
      Rng proto(class_seed);
      return octopus_clip(mutate_octopus(sample_octopus(height, width, proto), height, width, rng), frames, height, width);
    }
    case AltKind::leaves: {
      if (!labeled) return deadleaves_clip(sample_leaves(height, width, rng), frames, height, width);
      Rng proto(class_seed);
      return deadleaves_clip(mutate_leaves(sample_leaves(height, width, proto), height, width, rng), frames, height, width);
    }
  }
  throw std::invalid_argument("alt_clip: unknown kind");
}

}  // namespace fvid
