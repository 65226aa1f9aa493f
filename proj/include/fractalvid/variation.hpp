#pragma once

// Nonlinear point transforms applied after the affine map (fractal flame catalog).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fractalvid/ifs.hpp"

namespace fvid {

struct Point {
  double x = 0, y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

class InvalidVariation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flame variation index; 0 means linear (no variation).
class VariationId {
 public:
  static constexpr std::array<int, 7> kNonlinear = {4, 14, 16, 17, 20, 27, 29};

  constexpr VariationId() = default;
  explicit VariationId(int id) : id_(id) {
    if (!is_allowed(id)) throw InvalidVariation("variation id " + std::to_string(id) + " not supported");
  }

  static constexpr bool is_allowed(int id) {
    return id == 0 || std::find(kNonlinear.begin(), kNonlinear.end(), id) != kNonlinear.end();
  }

  constexpr int value() const { return id_; }
  constexpr bool is_linear() const { return id_ == 0; }

  friend constexpr bool operator==(VariationId, VariationId) = default;

 private:
  int id_ = 0;
};

/// G_id(x, y). Popcorn (17) depends on the translation (c, f) of the map that
/// produced the point; pass it as `affine`.
inline Point apply_variation(Point p, VariationId id, const AffineMap& affine = {}) {
  const double x = p.x, y = p.y;
  switch (id.value()) {
    case 0:
      return p;
    case 4: {  // horseshoe
      const double r = std::hypot(x, y);
      if (r == 0.0) return {0.0, 0.0};
      return {(x - y) * (x + y) / r, 2.0 * x * y / r};
    }
    case 14:  // bent
      return {x >= 0.0 ? x : 2.0 * x, y >= 0.0 ? y : 0.5 * y};
    case 16: {  // fisheye
      const double k = 2.0 / (std::hypot(x, y) + 1.0);
      return {k * y, k * x};
    }
    case 17:  // popcorn
      return {x + affine.c * std::sin(std::tan(3.0 * y)), y + affine.f * std::sin(std::tan(3.0 * x))};
    case 20:  // cosine
      return {std::cos(std::numbers::pi * x) * std::cosh(y), -std::sin(std::numbers::pi * x) * std::sinh(y)};
    case 27: {  // eyefish
      const double k = 2.0 / (std::hypot(x, y) + 1.0);
      return {k * x, k * y};
    }
    case 29:  // cylinder
      return {std::sin(x), y};
    default:
      throw InvalidVariation("variation id " + std::to_string(id.value()) + " not supported");
  }
}

inline Point apply_variation(Point p, int id, const AffineMap& affine = {}) {
  return apply_variation(p, VariationId(id), affine);
}

}  // namespace fvid
