#pragma once

// Iterated function systems in matrix and decomposed (R_theta Sigma R_phi D) form.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fractalvid/random.hpp"

namespace fvid {

class ConstraintViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// x' = a*x + b*y + c,  y' = d*x + e*y + f.
/// Field order matches one row of the N x 6 parameter matrix.
struct AffineMap {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;

  std::array<double, 6> row() const { return {a, b, c, d, e, f}; }
  static AffineMap from_row(std::span<const double> w) {
    if (w.size() < 6) throw std::invalid_argument("AffineMap::from_row: need 6 values");
    return {w[0], w[1], w[2], w[3], w[4], w[5]};
  }
  double determinant() const { return a * e - b * d; }

  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

/// Largest singular value of the linear part, i.e. the Lipschitz constant.
inline double contraction_factor(const AffineMap& m) {
  const double s = m.a * m.a + m.b * m.b + m.d * m.d + m.e * m.e;
  const double det = m.determinant();
  const double disc = std::max(0.0, s * s - 4.0 * det * det);
  return std::sqrt(0.5 * (s + std::sqrt(disc)));
}

inline bool is_contractive(const AffineMap& m) { return contraction_factor(m) < 1.0; }

/// One map as rotation(theta) * diag(sigma1, sigma2) * rotation(phi) * diag(d1, d2) + t.
struct DecomposedMap {
  double theta = 0, phi = 0;
  double sigma1 = 0, sigma2 = 0;
  int d1 = 1, d2 = 1;
  double tx = 0, ty = 0;

  void validate() const {
    if (!(sigma1 < 1.0)) throw ConstraintViolation("DecomposedMap: sigma1 must be < 1, got " + std::to_string(sigma1));
    if (!(sigma2 >= 0.0) || !(sigma1 >= sigma2))
      throw ConstraintViolation("DecomposedMap: require sigma1 >= sigma2 >= 0");
    if ((d1 != 1 && d1 != -1) || (d2 != 1 && d2 != -1))
      throw ConstraintViolation("DecomposedMap: reflection signs must be +-1");
  }
};

inline AffineMap compose(const DecomposedMap& m) {
  m.validate();
  const double ct = std::cos(m.theta), st = std::sin(m.theta);
  const double cp = std::cos(m.phi), sp = std::sin(m.phi);
  // Sigma * R_phi * D
  const double m00 = m.sigma1 * cp * m.d1, m01 = -m.sigma1 * sp * m.d2;
  const double m10 = m.sigma2 * sp * m.d1, m11 = m.sigma2 * cp * m.d2;
  AffineMap out;
  out.a = ct * m00 - st * m10;
  out.b = ct * m01 - st * m11;
  out.d = st * m00 + ct * m10;
  out.e = st * m01 + ct * m11;
  out.c = m.tx;
  out.f = m.ty;
  return out;
}

/// Chaos-game selection probabilities, proportional to |det A_i|.
/// Falls back to uniform when every determinant is negligible.
inline std::vector<double> map_probabilities(std::span<const AffineMap> maps) {
  if (maps.size() < 2) throw std::invalid_argument("map_probabilities: need N > 1 maps");
  std::vector<double> p(maps.size());
  bool all_degenerate = true;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    p[i] = std::abs(maps[i].determinant());
    if (p[i] >= 1e-12) all_degenerate = false;
  }
  if (all_degenerate) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(maps.size()));
    return p;
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

class IfsSystem {
 public:
  /// Computes probabilities from determinants and sorts maps by them.
  static IfsSystem from_maps(std::vector<AffineMap> maps) {
    auto probs = map_probabilities(maps);
    return IfsSystem(std::move(maps), std::move(probs));
  }

  IfsSystem(std::vector<AffineMap> maps, std::vector<double> probs) {
    if (maps.size() < 2) throw std::invalid_argument("IfsSystem: need N > 1 maps");
    if (maps.size() != probs.size()) throw std::invalid_argument("IfsSystem: maps/probs size mismatch");
    double total = 0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw std::invalid_argument("IfsSystem: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("IfsSystem: probabilities must sum to 1");
    for (const auto& m : maps)
      if (!is_contractive(m)) throw ConstraintViolation("IfsSystem: non-contractive map");

    // Descending probability, ties by original index.
    std::vector<std::size_t> order(maps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return probs[l] > probs[r]; });
    maps_.reserve(maps.size());
    probs_.reserve(maps.size());
    for (auto i : order) {
      maps_.push_back(maps[i]);
      probs_.push_back(probs[i]);
    }
  }

  std::size_t size() const { return maps_.size(); }
  const std::vector<AffineMap>& maps() const { return maps_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<AffineMap> maps_;
  std::vector<double> probs_;
};

struct SigmaPair {
  double sigma1 = 0, sigma2 = 0;
};

/// Bounds on a = sum_i (sigma_i1 + 2 sigma_i2) that avoid overly sparse or dense attractors.
struct SigmaSumBounds {
  double lower, upper;
};

constexpr SigmaSumBounds sigma_sum_bounds(int n) {
  return {0.5 * (5.0 + n), 0.5 * (6.0 + n)};
}

inline double sigma_sum(std::span<const SigmaPair> s) {
  double a = 0;
  for (const auto& p : s) a += p.sigma1 + 2.0 * p.sigma2;
  return a;
}

inline constexpr double kMaxSigma = 0.999;

/// sigma1 ~ U(0,1), sigma2 ~ U(0, sigma1), no sum constraint.
inline std::vector<SigmaPair> sample_raw_sigmas(int n, Rng& rng) {
  std::vector<SigmaPair> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    p.sigma1 = std::min(rng.uniform(), kMaxSigma);
    p.sigma2 = rng.uniform(0.0, p.sigma1);
  }
  return out;
}

/// Samples N singular-value pairs whose weighted sum lies in sigma_sum_bounds(N).
/// Rescales all pairs toward the violated bound (clamping sigma1 below 1) until
/// the sum is inside; restarts from a fresh draw if that stalls.
inline std::vector<SigmaPair> sample_constrained_sigmas(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_constrained_sigmas: need N >= 2");
  const auto bounds = sigma_sum_bounds(n);
  // Aim slightly inside the interval so rounding cannot leave us on the wrong side.
  const double margin = 1e-6 * (bounds.upper - bounds.lower);
  for (;;) {
    auto s = sample_raw_sigmas(n, rng);
    for (int round = 0; round < 1000; ++round) {
      const double a = sigma_sum(s);
      if (a >= bounds.lower && a <= bounds.upper) return s;
      const double target = a < bounds.lower ? bounds.lower + margin : bounds.upper - margin;
      const double ratio = target / a;
      if (!std::isfinite(ratio)) break;
      for (auto& p : s) {
        p.sigma1 = std::min(p.sigma1 * ratio, kMaxSigma);
        p.sigma2 = std::min(p.sigma2 * ratio, p.sigma1);
      }
    }
  }
}

/// Random decomposed map with the given singular values; angles U(0, 2pi),
/// reflections uniform on {-1, +1}, translation U(-1, 1)^2.
inline DecomposedMap sample_decomposed_map(const SigmaPair& s, Rng& rng) {
  DecomposedMap m;
  m.d1 = rng.sign();
  m.d2 = rng.sign();
  m.sigma1 = s.sigma1;
  m.sigma2 = s.sigma2;
  m.theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  m.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  m.tx = rng.uniform(-1.0, 1.0);
  m.ty = rng.uniform(-1.0, 1.0);
  return m;
}

/// Constraint-sampled system with N ~ U{3..8} unless n > 0 is given.
inline IfsSystem sample_system(Rng& rng, int n = 0) {
  if (n <= 0) n = rng.uniform_int(3, 8);
  const auto sigmas = sample_constrained_sigmas(n, rng);
  std::vector<AffineMap> maps;
  maps.reserve(sigmas.size());
  for (const auto& s : sigmas) maps.push_back(compose(sample_decomposed_map(s, rng)));
  return IfsSystem::from_maps(std::move(maps));
}

/// Baseline sampler: all six entries U(-1, 1), rejecting non-contractive maps.
inline IfsSystem sample_uniform_system(Rng& rng, int n = 0) {
  if (n <= 0) n = rng.uniform_int(3, 8);
  std::vector<AffineMap> maps;
  while (static_cast<int>(maps.size()) < n) {
    AffineMap m{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (is_contractive(m)) maps.push_back(m);
  }
  return IfsSystem::from_maps(std::move(maps));
}

}  // namespace fvid
