#pragma once

// Animated IFS parameters: keyframe sampling and per-frame interpolation.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fractalvid/ifs.hpp"
#include "fractalvid/interpolant.hpp"
#include "fractalvid/random.hpp"
#include "fractalvid/variation.hpp"

namespace fvid {

/// Everything needed to render one clip: a T x N x 6 parameter tensor plus the
/// variation applied after every affine map.
struct ClipParams {
  int frames = 0;
  int functions = 0;
  std::vector<double> weights;  // [t][n][6]
  VariationId variation{};

  ClipParams() = default;
  ClipParams(int t, int n) : frames(t), functions(n), weights(static_cast<std::size_t>(t) * n * 6, 0.0) {}

  std::size_t offset(int t, int n) const { return (static_cast<std::size_t>(t) * functions + n) * 6; }

  AffineMap map(int t, int n) const {
    return AffineMap::from_row(std::span<const double>(weights).subspan(offset(t, n), 6));
  }
  void set_map(int t, int n, const AffineMap& m) {
    const auto r = m.row();
    std::copy(r.begin(), r.end(), weights.begin() + static_cast<std::ptrdiff_t>(offset(t, n)));
  }

  std::vector<AffineMap> maps(int t) const {
    std::vector<AffineMap> out;
    out.reserve(static_cast<std::size_t>(functions));
    for (int n = 0; n < functions; ++n) out.push_back(map(t, n));
    return out;
  }

  IfsSystem system(int t) const { return IfsSystem::from_maps(maps(t)); }

  double max_contraction() const {
    double worst = 0;
    for (int t = 0; t < frames; ++t)
      for (int n = 0; n < functions; ++n) worst = std::max(worst, contraction_factor(map(t, n)));
    return worst;
  }

  void validate() const {
    if (frames < 1 || functions < 2) throw std::invalid_argument("ClipParams: need T >= 1 and N >= 2");
    if (weights.size() != static_cast<std::size_t>(frames) * functions * 6)
      throw std::invalid_argument("ClipParams: weight tensor has wrong size");
    for (int t = 0; t < frames; ++t)
      for (int n = 0; n < functions; ++n)
        if (!is_contractive(map(t, n)))
          throw ConstraintViolation("ClipParams: map " + std::to_string(n) + " of frame " + std::to_string(t) +
                                    " is not contractive");
  }
};

/// Start and end decomposed parameters for one IFS function. The reflection
/// signs of `end` always equal those of `start`.
struct FunctionKeyframes {
  DecomposedMap start;
  DecomposedMap end;
};

struct AnimationKeyframes {
  int frames = 0;
  std::vector<FunctionKeyframes> functions;
  std::vector<Interpolant> interpolants;  // one per function; empty means linear
};

enum class SigmaSampling { constrained, unconstrained };

struct MotionOptions {
  bool nonlinear_motion = false;
  SigmaSampling sigma_sampling = SigmaSampling::constrained;
  int functions = 0;  // 0 -> N ~ U{3..8}
  int frames = 0;     // 0 -> T ~ U{18..20}
};

namespace detail {

inline std::vector<SigmaPair> sample_sigma_set(int n, SigmaSampling mode, Rng& rng) {
  auto s = mode == SigmaSampling::constrained ? sample_constrained_sigmas(n, rng) : sample_raw_sigmas(n, rng);
  // Pair functions across keyframes by selection probability (|det| = sigma1*sigma2).
  std::stable_sort(s.begin(), s.end(),
                   [](const SigmaPair& l, const SigmaPair& r) { return l.sigma1 * l.sigma2 > r.sigma1 * r.sigma2; });
  return s;
}

inline double blend(double from, double to, double w) { return (1.0 - w) * from + w * to; }

}  // namespace detail

/// Samples keyframes following the decomposed-animation procedure: N, T, then
/// per function shared reflections and independent endpoint singular values,
/// angles and translations.
inline AnimationKeyframes sample_keyframes(Rng& rng, const MotionOptions& opt = {}) {
  const int n = opt.functions > 0 ? opt.functions : rng.uniform_int(3, 8);
  const int t = opt.frames > 0 ? opt.frames : rng.uniform_int(18, 20);
  if (n < 2) throw std::invalid_argument("sample_keyframes: need N >= 2");

  const auto s_start = detail::sample_sigma_set(n, opt.sigma_sampling, rng);
  const auto s_end = detail::sample_sigma_set(n, opt.sigma_sampling, rng);

  AnimationKeyframes kf;
  kf.frames = t;
  kf.functions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& f = kf.functions[static_cast<std::size_t>(i)];
    f.start.d1 = f.end.d1 = rng.sign();
    f.start.d2 = f.end.d2 = rng.sign();
    f.start.sigma1 = s_start[static_cast<std::size_t>(i)].sigma1;
    f.start.sigma2 = s_start[static_cast<std::size_t>(i)].sigma2;
    f.end.sigma1 = s_end[static_cast<std::size_t>(i)].sigma1;
    f.end.sigma2 = s_end[static_cast<std::size_t>(i)].sigma2;
    f.start.theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    f.end.theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    f.start.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    f.end.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    f.start.tx = rng.uniform(-1.0, 1.0);
    f.start.ty = rng.uniform(-1.0, 1.0);
    f.end.tx = rng.uniform(-1.0, 1.0);
    f.end.ty = rng.uniform(-1.0, 1.0);
  }
  if (opt.nonlinear_motion) kf.interpolants = assign_interpolants(n, rng).per_function;
  return kf;
}

inline double frame_position(int t, int frames) {
  return frames > 1 ? static_cast<double>(t) / static_cast<double>(frames - 1) : 0.0;
}

/// Interpolates every decomposed scalar separately, then composes per frame.
/// Angles are blended as raw values, without shortest-arc unwrapping.
inline ClipParams animate_decomposed(const AnimationKeyframes& kf) {
  const int n = static_cast<int>(kf.functions.size());
  if (!kf.interpolants.empty() && kf.interpolants.size() != kf.functions.size())
    throw std::invalid_argument("animate_decomposed: one interpolant per function required");
  ClipParams out(kf.frames, n);
  for (int t = 0; t < kf.frames; ++t) {
    const double u = frame_position(t, kf.frames);
    for (int i = 0; i < n; ++i) {
      const auto& f = kf.functions[static_cast<std::size_t>(i)];
      const double w = kf.interpolants.empty() ? u : evaluate(kf.interpolants[static_cast<std::size_t>(i)], u);
      DecomposedMap m;
      m.d1 = f.start.d1;
      m.d2 = f.start.d2;
      m.sigma1 = detail::blend(f.start.sigma1, f.end.sigma1, w);
      m.sigma2 = std::min(detail::blend(f.start.sigma2, f.end.sigma2, w), m.sigma1);
      m.theta = detail::blend(f.start.theta, f.end.theta, w);
      m.phi = detail::blend(f.start.phi, f.end.phi, w);
      m.tx = detail::blend(f.start.tx, f.end.tx, w);
      m.ty = detail::blend(f.start.ty, f.end.ty, w);
      out.set_map(t, i, compose(m));
    }
  }
  return out;
}

/// Baseline: composes the two keyframes and blends the six matrix entries directly.
inline ClipParams animate_flat(const AnimationKeyframes& kf) {
  const int n = static_cast<int>(kf.functions.size());
  ClipParams out(kf.frames, n);
  for (int i = 0; i < n; ++i) {
    const auto& f = kf.functions[static_cast<std::size_t>(i)];
    const auto a = compose(f.start).row();
    const auto b = compose(f.end).row();
    for (int t = 0; t < kf.frames; ++t) {
      const double u = frame_position(t, kf.frames);
      const double w = kf.interpolants.empty() ? u : evaluate(kf.interpolants[static_cast<std::size_t>(i)], u);
      std::array<double, 6> r{};
      for (std::size_t k = 0; k < 6; ++k) r[k] = detail::blend(a[k], b[k], w);
      out.set_map(t, i, AffineMap::from_row(r));
    }
  }
  return out;
}

inline ClipParams sample_video_decomposed(Rng& rng, const MotionOptions& opt = {}) {
  return animate_decomposed(sample_keyframes(rng, opt));
}

/// Uniform draw from the nonlinear variation set.
inline VariationId sample_variation(Rng& rng) {
  return VariationId(VariationId::kNonlinear[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(VariationId::kNonlinear.size()) - 1))]);
}

inline void to_json(nlohmann::json& j, const ClipParams& p) {
  j = nlohmann::json{{"frames", p.frames}, {"functions", p.functions}, {"variation", p.variation.value()},
                     {"weights", p.weights}};
}

inline void from_json(const nlohmann::json& j, ClipParams& p) {
  p.frames = j.at("frames").get<int>();
  p.functions = j.at("functions").get<int>();
  p.variation = VariationId(j.at("variation").get<int>());
  p.weights = j.at("weights").get<std::vector<double>>();
  if (p.weights.size() != static_cast<std::size_t>(p.frames) * p.functions * 6)
    throw std::invalid_argument("ClipParams JSON: weight count does not match frames x functions x 6");
}

}  // namespace fvid
