#pragma once

// Labeled categories: frozen prototype parameters plus per-instance mutation.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fractalvid/ifs.hpp"
#include "fractalvid/interpolant.hpp"
#include "fractalvid/motion.hpp"
#include "fractalvid/random.hpp"

namespace fvid {

struct ClassPrototype {
  int class_id = 0;
  std::uint64_t seed = 0;
  ClipParams params;
};

/// Class c is sampled from derive_seed(master_seed, c) with nonlinear motion.
/// Odd class ids get a nonlinear variation, so half the classes are nonlinear.
inline ClassPrototype sample_prototype(int class_id, std::uint64_t master_seed, MotionOptions opt = {}) {
  ClassPrototype p;
  p.class_id = class_id;
  p.seed = derive_seed(master_seed, static_cast<std::uint64_t>(class_id));
  Rng rng(p.seed);
  opt.nonlinear_motion = true;
  p.params = sample_video_decomposed(rng, opt);
  if (class_id % 2 == 1) p.params.variation = sample_variation(rng);
  return p;
}

inline std::vector<ClassPrototype> sample_prototypes(int classes, std::uint64_t master_seed,
                                                    const MotionOptions& opt = {}) {
  if (classes < 1) throw std::invalid_argument("sample_prototypes: need at least one class");
  std::vector<ClassPrototype> out;
  out.reserve(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) out.push_back(sample_prototype(c, master_seed, opt));
  return out;
}

inline constexpr double kMutationScale = 0.35;
inline constexpr double kMutationBias = 0.2;
inline constexpr int kMutationAttempts = 100;
inline constexpr double kRepairSigma = 0.99;

/// scale: one curve value per (frame, parameter), broadcast over functions.
/// bias: one offset per (function, parameter), broadcast over frames.
struct MutationNoise {
  int frames = 0, functions = 0;
  std::vector<double> scale;  // [t][k]
  std::vector<double> bias;   // [n][k]

  MutationNoise() = default;
  MutationNoise(int t, int n)
      : frames(t), functions(n), scale(static_cast<std::size_t>(t) * 6, 0.0), bias(static_cast<std::size_t>(n) * 6, 0.0) {}

  std::array<int, 3> scale_shape() const { return {frames, 1, 6}; }
  std::array<int, 3> bias_shape() const { return {1, functions, 6}; }

  double& scale_at(int t, int k) { return scale[static_cast<std::size_t>(t) * 6 + k]; }
  double scale_at(int t, int k) const { return scale[static_cast<std::size_t>(t) * 6 + k]; }
  double& bias_at(int n, int k) { return bias[static_cast<std::size_t>(n) * 6 + k]; }
  double bias_at(int n, int k) const { return bias[static_cast<std::size_t>(n) * 6 + k]; }
};

/// Each of the six scale channels is a random-interpolant curve mapped to
/// [-0.35, 0.35]; biases are U(-0.2, 0.2).
inline MutationNoise sample_mutation_noise(int frames, int functions, Rng& rng) {
  MutationNoise m(frames, functions);
  for (int k = 0; k < 6; ++k) {
    const auto curve = RandomCurve::sample(rng);
    for (int t = 0; t < frames; ++t)
      m.scale_at(t, k) = kMutationScale * (2.0 * curve.clamped(frame_position(t, frames)) - 1.0);
  }
  for (int n = 0; n < functions; ++n)
    for (int k = 0; k < 6; ++k) m.bias_at(n, k) = rng.uniform(-kMutationBias, kMutationBias);
  return m;
}

/// W' = (1 + scale) * W + bias, broadcasting over the singleton axes.
inline ClipParams apply_mutation(const ClipParams& w, const MutationNoise& m) {
  if (m.frames != w.frames || m.functions != w.functions)
    throw std::invalid_argument("apply_mutation: noise shape does not match parameters");
  ClipParams out = w;
  for (int t = 0; t < w.frames; ++t)
    for (int n = 0; n < w.functions; ++n) {
      const std::size_t o = w.offset(t, n);
      for (int k = 0; k < 6; ++k)
        out.weights[o + k] = (1.0 + m.scale_at(t, k)) * w.weights[o + k] + m.bias_at(n, k);
    }
  return out;
}

/// Scales the linear part of every non-contractive map down to sigma1 = 0.99.
inline int shrink_noncontractive(ClipParams& p) {
  int fixed = 0;
  for (int t = 0; t < p.frames; ++t)
    for (int n = 0; n < p.functions; ++n) {
      AffineMap m = p.map(t, n);
      const double s = contraction_factor(m);
      if (s < 1.0) continue;
      const double k = kRepairSigma / s;
      m.a *= k;
      m.b *= k;
      m.d *= k;
      m.e *= k;
      p.set_map(t, n, m);
      ++fixed;
    }
  return fixed;
}

struct MutationResult {
  ClipParams params;
  MutationNoise noise;
  int attempts = 0;
  int repaired_maps = 0;
};

/// Draws noise until every mutated map is contractive; after the last attempt
/// the offending maps are shrunk instead.
inline MutationResult mutate_detailed(const ClassPrototype& proto, Rng& rng) {
  MutationResult r;
  for (r.attempts = 1; r.attempts <= kMutationAttempts; ++r.attempts) {
    r.noise = sample_mutation_noise(proto.params.frames, proto.params.functions, rng);
    r.params = apply_mutation(proto.params, r.noise);
    if (r.params.max_contraction() < 1.0) return r;
  }
  r.attempts = kMutationAttempts;
  r.repaired_maps = shrink_noncontractive(r.params);
  return r;
}

inline ClipParams mutate(const ClassPrototype& proto, Rng& rng) { return mutate_detailed(proto, rng).params; }

inline std::uint64_t instance_seed(const ClassPrototype& proto, int instance) {
  return derive_seed(proto.seed ^ kMutationSalt, static_cast<std::uint64_t>(instance));
}

/// Instance `instance` of the class, reproducible from the prototype alone.
inline ClipParams mutate_instance(const ClassPrototype& proto, int instance) {
  Rng rng(instance_seed(proto, instance));
  return mutate(proto, rng);
}

inline void to_json(nlohmann::json& j, const ClassPrototype& p) {
  j = nlohmann::json{{"class_id", p.class_id}, {"seed", p.seed}, {"params", p.params}};
}

inline void from_json(const nlohmann::json& j, ClassPrototype& p) {
  p.class_id = j.at("class_id").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.params = j.at("params").get<ClipParams>();
}

inline nlohmann::json prototype_bank_json(const std::vector<ClassPrototype>& protos) {
  return nlohmann::json{{"version", 1}, {"prototypes", protos}};
}

inline std::vector<ClassPrototype> prototype_bank_from_json(const nlohmann::json& j) {
  auto protos = j.at("prototypes").get<std::vector<ClassPrototype>>();
  for (std::size_t i = 0; i < protos.size(); ++i) protos[i].params.validate();
  return protos;
}

}  // namespace fvid
