#pragma once

// Keyframe blend curves: u in [0,1] -> weight in [0,1].

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fractalvid/random.hpp"

namespace fvid {

/// Control values at uniform abscissae joined by piecewise quadratics, each
/// through three consecutive control points.
struct RandomCurve {
  std::vector<double> values;

  double operator()(double u) const {
    const auto m = values.size();
    if (m == 0) return 0.0;
    if (m == 1) return values[0];
    u = std::clamp(u, 0.0, 1.0);
    const double step = 1.0 / static_cast<double>(m - 1);
    if (m == 2) return values[0] + (values[1] - values[0]) * u;
    auto seg = static_cast<std::size_t>(u / step);
    seg = std::min(seg, m - 2);
    const std::size_t j = std::min(seg, m - 3);
    const double x0 = j * step, x1 = (j + 1) * step, x2 = (j + 2) * step;
    const double l0 = (u - x1) * (u - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (u - x0) * (u - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (u - x0) * (u - x1) / ((x2 - x0) * (x2 - x1));
    return l0 * values[j] + l1 * values[j + 1] + l2 * values[j + 2];
  }

  /// Evaluates and clamps into [0, 1].
  double clamped(double u) const { return std::clamp((*this)(u), 0.0, 1.0); }

  /// m ~ U{4..8} control values, each U(0, 1). A negative `first` leaves the
  /// first value random; otherwise it is pinned.
  static RandomCurve sample(Rng& rng, double first = -1.0) {
    RandomCurve c;
    c.values.resize(static_cast<std::size_t>(rng.uniform_int(4, 8)));
    for (double& v : c.values) v = rng.uniform();
    if (first >= 0.0) c.values.front() = first;
    return c;
  }
};

struct LinearInterp {};

/// Noisy periodic motion: (1 - cos(2 pi k u)) / 2 plus a small random wobble.
/// Sampled interpolants all start at weight 0, so frame 0 is the start keyframe.
struct SinusoidalInterp {
  int cycles = 1;
  double noise_amplitude = 0.1;
  RandomCurve noise;
};

/// Zero until `start`, linear ramp over `width`, one afterwards.
struct SharpInterp {
  double start = 0.0;
  double width = 0.1;
};

struct RandomInterp {
  RandomCurve curve;
};

using Interpolant = std::variant<LinearInterp, SinusoidalInterp, SharpInterp, RandomInterp>;

enum class InterpolantKind { linear, sinusoidal, sharp, random };

inline InterpolantKind kind_of(const Interpolant& i) { return static_cast<InterpolantKind>(i.index()); }

inline const char* to_string(InterpolantKind k) {
  switch (k) {
    case InterpolantKind::linear: return "linear";
    case InterpolantKind::sinusoidal: return "sinusoidal";
    case InterpolantKind::sharp: return "sharp";
    case InterpolantKind::random: return "random";
  }
  return "?";
}

inline double evaluate(const Interpolant& interp, double u) {
  u = std::clamp(u, 0.0, 1.0);
  return std::visit(
      [u](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearInterp>) {
          return u;
        } else if constexpr (std::is_same_v<T, SinusoidalInterp>) {
          const double base = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * s.cycles * u));
          const double wobble = s.noise.values.empty() ? 0.0 : s.noise_amplitude * (2.0 * s.noise.clamped(u) - 1.0);
          return std::clamp(base + wobble, 0.0, 1.0);
        } else if constexpr (std::is_same_v<T, SharpInterp>) {
          if (u < s.start) return 0.0;
          if (u >= s.start + s.width) return 1.0;
          return (u - s.start) / s.width;
        } else {
          return s.curve.clamped(u);
        }
      },
      interp);
}

inline Interpolant sample_interpolant(InterpolantKind kind, Rng& rng) {
  switch (kind) {
    case InterpolantKind::linear:
      return LinearInterp{};
    case InterpolantKind::sinusoidal: {
      SinusoidalInterp s;
      s.cycles = rng.uniform_int(1, 3);
      s.noise_amplitude = 0.1;
      s.noise = RandomCurve::sample(rng, 0.5);  // zero wobble at u = 0
      return s;
    }
    case InterpolantKind::sharp: {
      SharpInterp s;
      s.width = rng.uniform(0.1, 0.25);
      s.start = rng.uniform(0.0, 1.0 - s.width);
      return s;
    }
    case InterpolantKind::random:
      return RandomInterp{RandomCurve::sample(rng, 0.0)};
  }
  throw std::invalid_argument("sample_interpolant: unknown kind");
}

struct InterpolantAssignment {
  std::vector<Interpolant> pool;          // linear plus one or two nonlinear kinds
  std::vector<Interpolant> per_function;  // one entry per IFS function
  bool shared = false;                    // a single pool entry drives every function
};

/// Constrained assignment: the pool starts as {linear}, gains one or two
/// distinct nonlinear kinds, then either each function draws from the pool or
/// one draw is shared by all functions (fair coin).
inline InterpolantAssignment assign_interpolants(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("assign_interpolants: need N >= 2");
  InterpolantAssignment out;
  out.pool.push_back(LinearInterp{});
  std::array<InterpolantKind, 3> kinds = {InterpolantKind::sinusoidal, InterpolantKind::sharp, InterpolantKind::random};
  for (int i = 2; i > 0; --i) std::swap(kinds[static_cast<std::size_t>(i)], kinds[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  const int extra = rng.uniform_int(1, 2);
  for (int i = 0; i < extra; ++i) out.pool.push_back(sample_interpolant(kinds[static_cast<std::size_t>(i)], rng));

  const int last = static_cast<int>(out.pool.size()) - 1;
  out.shared = rng.bernoulli(0.5);
  if (out.shared) {
    out.per_function.assign(static_cast<std::size_t>(n), out.pool[static_cast<std::size_t>(rng.uniform_int(0, last))]);
  } else {
    for (int i = 0; i < n; ++i) out.per_function.push_back(out.pool[static_cast<std::size_t>(rng.uniform_int(0, last))]);
  }
  return out;
}

// JSON, used by manifests and prototype banks.

inline void to_json(nlohmann::json& j, const RandomCurve& c) { j = c.values; }
inline void from_json(const nlohmann::json& j, RandomCurve& c) { c.values = j.get<std::vector<double>>(); }

inline void to_json(nlohmann::json& j, const Interpolant& interp) {
  j = nlohmann::json{{"kind", to_string(kind_of(interp))}};
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SinusoidalInterp>) {
          j["cycles"] = s.cycles;
          j["noise_amplitude"] = s.noise_amplitude;
          j["noise"] = s.noise;
        } else if constexpr (std::is_same_v<T, SharpInterp>) {
          j["start"] = s.start;
          j["width"] = s.width;
        } else if constexpr (std::is_same_v<T, RandomInterp>) {
          j["curve"] = s.curve;
        }
      },
      interp);
}

inline void from_json(const nlohmann::json& j, Interpolant& interp) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    interp = LinearInterp{};
  } else if (kind == "sinusoidal") {
    interp = SinusoidalInterp{j.at("cycles").get<int>(), j.at("noise_amplitude").get<double>(),
                              j.at("noise").get<RandomCurve>()};
  } else if (kind == "sharp") {
    interp = SharpInterp{j.at("start").get<double>(), j.at("width").get<double>()};
  } else if (kind == "random") {
    interp = RandomInterp{j.at("curve").get<RandomCurve>()};
  } else {
    throw std::invalid_argument("unknown interpolant kind: " + kind);
  }
}

}  // namespace fvid
