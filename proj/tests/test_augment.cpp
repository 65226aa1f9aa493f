#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fractalvid/augment.hpp"
#include "fractalvid/render.hpp"

using namespace fvid;

namespace {

Clip noise_clip(int t, int h, int w, std::uint64_t seed, double density = 0.3) {
  Rng rng(seed);
  Clip c(t, h, w);
  for (float& v : c.data()) v = rng.bernoulli(density) ? static_cast<float>(rng.uniform()) : 0.0f;
  return c;
}

Clip fractal_clip(std::uint64_t seed, int size = 48) {
  Rng rng(seed);
  MotionOptions opt;
  opt.frames = 8;
  return render_clip(sample_video_decomposed(rng, opt), size, size, 20000, seed).clip;
}

Clip blob_clip(int t, int h, int w, double cx, double cy, double r) {
  Clip c(t, h, w);
  for (int f = 0; f < t; ++f)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (std::hypot(x - cx, y - cy) <= r) c.at(f, y, x) = 1.0f;
  return c;
}

double max_abs_diff(const Clip& a, const Clip& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(double(a.data()[i]) - b.data()[i]));
  return m;
}

// Centroid of pixels above `threshold` in frame t.
std::pair<double, double> centroid(const Clip& c, int t, float threshold) {
  double sx = 0, sy = 0, n = 0;
  for (int y = 0; y < c.height(); ++y)
    for (int x = 0; x < c.width(); ++x)
      if (c.at(t, y, x) > threshold) {
        sx += x;
        sy += y;
        n += 1;
      }
  return {sx / n, sy / n};
}

void expect_unit_range(const Clip& c) {
  for (float v : c.data()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

}  // namespace

TEST(Resample, SameSizeIsExactCopy) {
  const auto c = noise_clip(1, 17, 23, 1);
  const auto r = resize(c.frame(0), 23, 17, 23, 17);
  EXPECT_TRUE(std::equal(r.begin(), r.end(), c.frame(0).begin()));
  const auto cr = crop_resize(c.frame(0), 23, 17, Rect{0, 0, 23, 17}, 23, 17);
  EXPECT_TRUE(std::equal(cr.begin(), cr.end(), c.frame(0).begin()));
}

TEST(Resample, BilinearMidpointsAndBorders) {
  const std::vector<float> img{0, 1, 2, 3};  // 2 x 2
  EXPECT_FLOAT_EQ(sample_bilinear(img, 2, 2, 0.5, 0.0, Border::clamp), 0.5f);
  EXPECT_FLOAT_EQ(sample_bilinear(img, 2, 2, 0.5, 0.5, Border::clamp), 1.5f);
  EXPECT_FLOAT_EQ(sample_bilinear(img, 2, 2, 1.5, 1.0, Border::clamp), 3.0f);
  EXPECT_FLOAT_EQ(sample_bilinear(img, 2, 2, 1.5, 1.0, Border::zero), 1.5f);
  EXPECT_EQ(sample_bilinear(img, 2, 2, -1.0, 0.0, Border::zero), 0.0f);
  // 2x downsample averages 2x2 blocks.
  const std::vector<float> four{0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 0, 1, 1};
  const auto half = resize(four, 4, 4, 2, 2);
  EXPECT_FLOAT_EQ(half[0], 0.5f);
  EXPECT_FLOAT_EQ(half[3], 1.0f);
}

TEST(Background, ZeroWeightIsIdentity) {
  const auto fg = noise_clip(6, 20, 20, 2);
  const std::vector<Clip> donors{noise_clip(8, 30, 30, 3), noise_clip(5, 16, 16, 4)};
  const auto pool = DonorPool::from_clips(donors);
  AugmentConfig cfg;
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    auto p = sample_background(cfg, fg.frames(), pool, rng);
    p.a = 0.0;
    EXPECT_EQ(mix_background(fg, p, pool), fg);
  }
}

TEST(Background, HalfBlendOfOnesOverZeros) {
  const Clip fg(4, 8, 8, 1.0f);
  const std::vector<Clip> donors{Clip(4, 8, 8), Clip(4, 8, 8)};
  const auto pool = DonorPool::from_clips(donors);
  Rng rng(1);
  auto p = sample_background(AugmentConfig{}, 4, pool, rng);
  p.a = 0.5;
  const auto out = mix_background(fg, p, pool);
  for (float v : out.data()) EXPECT_EQ(v, 0.5f);
}

TEST(Background, DynamicBranchFrequency) {
  const std::vector<Clip> donors{Clip(20, 4, 4), Clip(20, 4, 4), Clip(19, 4, 4)};
  const auto pool = DonorPool::from_clips(donors);
  AugmentConfig cfg;
  Rng rng(6);
  int dynamic = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto p = sample_background(cfg, 20, pool, rng);
    dynamic += p.dynamic;
    ASSERT_EQ(p.donors.size(), 2u);
    ASSERT_NE(p.donors[0], p.donors[1]);
    ASSERT_GE(p.a, 0.25);
    ASSERT_LT(p.a, 0.55);
    ASSERT_GT(p.crop.w, 0.0);
    ASSERT_LE(p.crop.x + p.crop.w, 1.0 + 1e-12);
    ASSERT_LE(p.crop.y + p.crop.h, 1.0 + 1e-12);
  }
  EXPECT_NEAR(dynamic / 10000.0, 0.2, 0.02);
}

TEST(Background, WalkStepsAndRange) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto w = sample_walk(20, 4, rng);
    ASSERT_EQ(w.size(), 20u);
    EXPECT_EQ(w[0], 0);
    for (std::size_t t = 1; t < w.size(); ++t) ASSERT_LE(std::abs(w[t] - w[t - 1]), 1);
    ASSERT_LE(*std::max_element(w.begin(), w.end()) - *std::min_element(w.begin(), w.end()), 4);
  }
}

TEST(Background, StaticIsConstantAndDynamicFollowsDonors) {
  const std::vector<Clip> donors{noise_clip(12, 16, 16, 8), noise_clip(12, 16, 16, 9)};
  const auto pool = DonorPool::from_clips(donors);
  BackgroundParams p;
  p.donors = {0, 1};
  p.start = {3, 5};
  const auto still = build_background(p, 6, 16, 16, pool);
  for (int t = 1; t < 6; ++t) EXPECT_TRUE(std::equal(still.frame(t).begin(), still.frame(t).end(), still.frame(0).begin()));
  // Full crop at the donor size: the background is the max of the chosen donor frames.
  for (std::size_t i = 0; i < still.frame_size(); ++i)
    ASSERT_EQ(still.frame(0)[i], std::max(donors[0].frame(3)[i], donors[1].frame(5)[i]));

  p.dynamic = true;
  p.walk = {0, 1, 1, 0, -1, -2};
  const auto moving = build_background(p, 6, 16, 16, pool);
  for (int t = 0; t < 6; ++t)
    for (std::size_t i = 0; i < moving.frame_size(); ++i)
      ASSERT_EQ(moving.frame(t)[i],
                std::max(donors[0].frame(3 + p.walk[t])[i], donors[1].frame(5 + p.walk[t])[i]));
}

TEST(Background, NeedsTwoDonors) {
  const std::vector<Clip> donors{Clip(4, 4, 4)};
  Rng rng(1);
  EXPECT_THROW(sample_background(AugmentConfig{}, 4, DonorPool::from_clips(donors), rng), std::invalid_argument);
}

TEST(Scale, UnitScaleAtOriginIsIdentity) {
  const auto c = noise_clip(3, 20, 24, 10);
  EXPECT_EQ(scale_and_place(c, ScaleParams{20, 24, 0, 0}), c);
}

TEST(Scale, HalfScaleGeometry) {
  const Clip c(2, 21, 30, 1.0f);
  const ScaleParams p{21 / 2, 30 / 2, 4, 7};
  const auto out = scale_and_place(c, p);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 30; ++x) {
      const bool inside = y >= 4 && y < 4 + 10 && x >= 7 && x < 7 + 15;
      ASSERT_EQ(out.at(1, y, x), inside ? 1.0f : 0.0f);
    }
}

TEST(Scale, SampledSizesAndMassBound) {
  Rng rng(11);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto c = noise_clip(2, 32, 32, 100 + s);
    const auto p = sample_scale(0.3, 1.0, 32, 32, 1.0, rng);
    ASSERT_GE(p.height, static_cast<int>(std::floor(0.3 * 32)));
    ASSERT_LE(p.y + p.height, 32);
    const auto out = scale_and_place(c, p);
    const double in_sum = std::accumulate(c.data().begin(), c.data().end(), 0.0);
    const double out_sum = std::accumulate(out.data().begin(), out.data().end(), 0.0);
    EXPECT_LE(out_sum, in_sum + 1e-3 * 32 * 32);
    expect_unit_range(out);
  }
}

TEST(Group, NeutralClonesAtSamePlaceEqualScaledInput) {
  const auto c = noise_clip(8, 24, 24, 12);
  const ScaleParams place{12, 16, 5, 3};
  GroupParams g;
  g.clones = {CloneParams{0, false, 0.0, place}, CloneParams{0, false, 0.0, place}};
  EXPECT_EQ(clone_group(c, g), scale_and_place(c, place));
}

TEST(Group, TemporalRollAndFlip) {
  const auto c = noise_clip(8, 10, 12, 13);
  const auto rolled = clone_pose(c, CloneParams{3, false, 0.0, {}});
  for (int t = 0; t < 8; ++t)
    EXPECT_TRUE(std::equal(rolled.frame(t).begin(), rolled.frame(t).end(), c.frame((t + 3) % 8).begin()));
  const auto flipped = clone_pose(c, CloneParams{0, true, 0.0, {}});
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) ASSERT_EQ(flipped.at(2, y, x), c.at(2, y, 11 - x));
}

TEST(Group, QuarterTurnRotation) {
  Clip c(1, 9, 9);
  c.at(0, 4, 8) = 1.0f;  // right of center
  const auto r = clone_pose(c, CloneParams{0, false, 90.0, {}});
  // Row index grows downward, so a +90 degree turn carries (8, 4) to (4, 8).
  EXPECT_NEAR(r.at(0, 8, 4), 1.0f, 1e-6);
  EXPECT_NEAR(std::accumulate(r.data().begin(), r.data().end(), 0.0), 1.0, 1e-6);
}

TEST(Group, SampledParamsAndOccupancyMonotone) {
  AugmentConfig cfg;
  Rng rng(14);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto c = noise_clip(20, 32, 32, 200 + s, 0.2);
    const auto g = sample_group(cfg, 20, 32, 32, rng);
    ASSERT_EQ(g.clones.size(), 2u);
    double best_single = 0;
    for (const auto& k : g.clones) {
      ASSERT_GE(k.roll, 1);
      ASSERT_LE(k.roll, 5);
      ASSERT_LE(std::abs(k.rotation_deg), 30.0);
      ASSERT_GE(k.place.width, static_cast<int>(std::floor(0.2 * 32)));
      ASSERT_LE(k.place.width, static_cast<int>(std::floor(0.7 * 32)));
      const auto single = scale_and_place(clone_pose(c, k), k.place);
      best_single = std::max(best_single, occupancy(single.data()));
    }
    const auto out = clone_group(c, g);
    EXPECT_GE(occupancy(out.data()), best_single);
    expect_unit_range(out);
  }
}

TEST(Perspective, ZeroDisplacementIsIdentity) {
  const auto c = noise_clip(3, 20, 28, 15);
  const auto H = perspective_matrix({}, 28, 20);
  ASSERT_TRUE(H);
  EXPECT_TRUE(H->isApprox(Homography::Identity(), 1e-12));
  EXPECT_LE(max_abs_diff(perspective_warp(c, {}), c), 1e-6);
}

TEST(Perspective, TranslatedCornersShiftTheImage) {
  const auto c = noise_clip(2, 20, 20, 16);
  PerspectiveParams p;
  for (int i = 0; i < 4; ++i) {
    p.corners[2 * i] = 3.0;
    p.corners[2 * i + 1] = -2.0;
  }
  const auto out = perspective_warp(c, p);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const int sx = x + 3, sy = y - 2;
      const float expect = sx >= 0 && sx < 20 && sy >= 0 && sy < 20 ? c.at(1, sy, sx) : 0.0f;
      ASSERT_NEAR(out.at(1, y, x), expect, 1e-5);
    }
}

TEST(Perspective, CornersMapToDisplacedCorners) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto p = sample_perspective(0.5, 40, 60, rng);
    const auto H = perspective_matrix(p, 60, 40);
    ASSERT_TRUE(H);
    const double cx[4] = {0, 59, 59, 0}, cy[4] = {0, 0, 39, 39};
    for (int k = 0; k < 4; ++k) {
      const Eigen::Vector3d q = *H * Eigen::Vector3d(cx[k], cy[k], 1.0);
      EXPECT_NEAR(q.x() / q.z(), cx[k] + p.corners[2 * k], 1e-8);
      EXPECT_NEAR(q.y() / q.z(), cy[k] + p.corners[2 * k + 1], 1e-8);
      EXPECT_LE(std::abs(p.corners[2 * k]), 0.25 * 60);
      EXPECT_LE(std::abs(p.corners[2 * k + 1]), 0.25 * 40);
    }
  }
}

TEST(Perspective, DegenerateCornersRejected) {
  PerspectiveParams p;
  p.corners = {40, 30, -40, 30, 0, 0, 0, 0};  // top corners collapse onto each other's side
  EXPECT_FALSE(perspective_matrix(p, 41, 31));
  EXPECT_THROW(perspective_warp(Clip(1, 31, 41), p), std::invalid_argument);
}

TEST(Perspective, SameWarpForEveryFrame) {
  const auto one = noise_clip(1, 24, 24, 18);
  Clip c(5, 24, 24);
  for (int t = 0; t < 5; ++t) std::copy(one.frame(0).begin(), one.frame(0).end(), c.frame(t).begin());
  Rng rng(19);
  const auto out = perspective_warp(c, sample_perspective(0.5, 24, 24, rng));
  for (int t = 1; t < 5; ++t) EXPECT_TRUE(std::equal(out.frame(t).begin(), out.frame(t).end(), out.frame(0).begin()));
}

TEST(Displace, ZeroTravelIsIdentityInEveryMode) {
  const auto fg = noise_clip(6, 20, 20, 20);
  const auto bg = noise_clip(6, 20, 20, 21);
  DisplaceParams p;
  EXPECT_EQ(displace(fg, p), fg);
  p.mode = DisplaceMode::background;
  EXPECT_EQ(displace(fg, p, &bg, 0.4), blend(fg, bg, 0.4));
  p.mode = DisplaceMode::foreground;
  EXPECT_EQ(displace(fg, p, &bg, 0.4), blend(fg, bg, 0.4));
  EXPECT_THROW(displace(fg, p), std::invalid_argument);
}

TEST(Displace, CameraPathIsLinear) {
  DisplaceParams p;
  p.dx = 0.1;
  p.margin = 0.15;
  const int T = 19, W = 64, H = 48;
  const auto c = displacement_centers(p, T, H, W);
  const double x0 = c[0].x, dx = 0.1 * W;
  for (int t = 0; t < T; ++t) {
    EXPECT_NEAR(c[t].x, x0 + t * dx / (T - 1), 1e-12);
    EXPECT_NEAR(c[t].y, c[0].y, 1e-12);
  }
  EXPECT_NEAR(0.5 * (c.front().x + c.back().x), 0.5 * 1.15 * W, 1e-12);
}

TEST(Displace, TravelClampedToMargin) {
  DisplaceParams p;
  p.dx = 0.5;
  p.margin = 0.1;
  const auto c = displacement_centers(p, 5, 10, 100);
  EXPECT_NEAR(c.back().x - c.front().x, 10.0, 1e-12);
}

TEST(Displace, CameraModeMovesContentAgainstPath) {
  const auto fg = blob_clip(11, 64, 64, 32, 32, 5);
  DisplaceParams p;
  p.dx = 0.2;
  p.margin = 0.2;
  const auto out = displace(fg, p);
  const auto a = centroid(out, 0, 0.5f), b = centroid(out, 10, 0.5f);
  // Window moves right by 0.2 W in enlarged pixels, so content moves left.
  EXPECT_NEAR(b.first - a.first, -0.2 * 64, 1.0);
  EXPECT_NEAR(b.second, a.second, 0.5);
}

TEST(Displace, BackgroundModeKeepsForegroundFixed) {
  const auto fg = blob_clip(10, 48, 48, 20, 26, 6);
  const auto bg = noise_clip(10, 48, 48, 22, 0.5);
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    auto p = sample_displace(AugmentConfig{}, DisplaceMode::background, rng);
    const auto out = displace(fg, p, &bg, 0.3);
    // Background contributes at most 0.3, the blob at least 0.7.
    const auto c0 = centroid(out, 0, 0.5f);
    for (int t = 1; t < 10; ++t) {
      const auto ct = centroid(out, t, 0.5f);
      EXPECT_NEAR(ct.first, c0.first, 1.0);
      EXPECT_NEAR(ct.second, c0.second, 1.0);
    }
  }
}

TEST(Displace, ForegroundModeFollowsPath) {
  const auto fg = blob_clip(10, 64, 64, 32, 32, 6);
  const Clip bg(10, 64, 64);
  DisplaceParams p;
  p.mode = DisplaceMode::foreground;
  p.dx = -0.1;
  p.dy = 0.15;
  p.margin = 0.2;
  const auto out = displace(fg, p, &bg, 0.3);
  const auto c = displacement_centers(p, 10, 64, 64);
  for (int t = 0; t < 10; ++t) {
    const auto got = centroid(out, t, 0.3f);
    EXPECT_NEAR(got.first + 0.5, c[t].x - 0.1 * 64, 1.0);
    EXPECT_NEAR(got.second + 0.5, c[t].y - 0.1 * 64, 1.0);
  }
}

TEST(Zoom, UnitZoomIsIdentity) {
  const auto c = noise_clip(5, 20, 20, 24);
  EXPECT_LE(mean_abs_diff(camera_zoom(c, {1.0}).data(), c.data()), 1e-3);
}

TEST(Zoom, ZoomInDropsBorder) {
  Clip ring(6, 40, 40);
  for (int t = 0; t < 6; ++t)
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x)
        if (x < 3 || y < 3 || x >= 37 || y >= 37) ring.at(t, y, x) = 1.0f;
  const auto out = camera_zoom(ring, {0.6});
  EXPECT_EQ(out.frames(), 6);
  EXPECT_EQ(out.height(), 40);
  EXPECT_EQ(out.width(), 40);
  EXPECT_TRUE(std::equal(out.frame(0).begin(), out.frame(0).end(), ring.frame(0).begin()));
  EXPECT_EQ(occupancy(out.frame(5)), 0.0);
}

TEST(Zoom, ZoomOutEndsAtFullView) {
  const auto c = noise_clip(4, 20, 20, 25);
  const auto out = camera_zoom(c, {1.4});
  EXPECT_TRUE(std::equal(out.frame(3).begin(), out.frame(3).end(), c.frame(3).begin()));
  EXPECT_NEAR(zoom_window_fraction({1.4}, 0, 4), 1.0 / 1.4, 1e-12);
}

TEST(Zoom, SampledOutsideGap) {
  AugmentConfig cfg;
  Rng rng(26);
  for (int i = 0; i < 5000; ++i) {
    const double z = sample_zoom(cfg, rng).z;
    ASSERT_GE(z, 0.6);
    ASSERT_LE(z, 1.4);
    ASSERT_FALSE(z > 0.95 && z < 1.05);
  }
}

TEST(Shake, TriangleBound) {
  ShakeSequence s{{0.3, 1.1}, {0.2, 2.0}, std::vector<double>(200, 0.0)};
  EXPECT_DOUBLE_EQ(s.bound(), 1.8);
  for (double d : s.values()) EXPECT_LE(std::abs(d), 1.5);
}

TEST(Shake, EmpiricalMaxWithinBound) {
  Rng rng(27);
  for (int i = 0; i < 10000; ++i) {
    const auto s = ShakeSequence::sample(20, rng);
    ASSERT_GE(s.freq.size(), 2u);
    ASSERT_LE(s.freq.size(), 5u);
    for (double d : s.values()) ASSERT_LE(std::abs(d), s.bound());
  }
}

TEST(Shake, ZeroAmplitudeIsIdentityAndOffsetsStayInMargin) {
  const auto c = noise_clip(8, 30, 30, 28);
  Rng rng(29);
  EXPECT_EQ(camera_shake(c, sample_shake(0.0, 8, rng)), c);
  for (int i = 0; i < 500; ++i) {
    const auto p = sample_shake(7.68, 20, rng);
    EXPECT_EQ(p.margin, 8);
    for (int o : p.ox) ASSERT_LE(std::abs(o), 8);
    for (int o : p.oy) ASSERT_LE(std::abs(o), 8);
  }
}

TEST(Shake, IntegerOffsetShiftsContent) {
  const auto c = blob_clip(2, 60, 60, 30, 30, 4);
  ShakeParams p{6, {0, 6}, {0, -6}};
  const auto out = camera_shake(c, p);
  const auto a = centroid(out, 0, 0.5f), b = centroid(out, 1, 0.5f);
  const double k = 60.0 / 72.0;  // layer enlarged by 2 * margin
  EXPECT_NEAR(b.first - a.first, -6 * k, 1.0);
  EXPECT_NEAR(b.second - a.second, 6 * k, 1.0);
}

TEST(Augment, TraceReplaysBitExactly) {
  std::vector<Clip> donors;
  for (std::uint64_t s = 0; s < 4; ++s) donors.push_back(fractal_clip(300 + s));
  const auto pool = DonorPool::from_clips(donors);
  AugmentConfig cfg;
  cfg.p_group = 0.3;
  cfg.p_displace = cfg.p_zoom = cfg.p_shake = 0.6;
  Rng rng(30);
  std::set<std::string> seen;
  for (int i = 0; i < 60; ++i) {
    const auto fg = fractal_clip(400 + i % 5);
    const auto out = augment_clip(fg, pool, cfg, rng);
    ASSERT_TRUE(out.clip.same_shape(fg));
    expect_unit_range(out.clip);
    const nlohmann::json j = out.trace;
    const auto back = nlohmann::json::parse(j.dump()).get<AugTrace>();
    EXPECT_EQ(replay(fg, back, pool), out.clip);
    for (const auto& s : out.trace) seen.insert(s.name);
  }
  EXPECT_EQ(seen, (std::set<std::string>{"background", "displace", "group", "perspective", "scale", "shake", "zoom"}));
}

TEST(Augment, ZeroIntensityWithoutGroupIsIdentity) {
  std::vector<Clip> donors{noise_clip(6, 24, 24, 31), noise_clip(6, 24, 24, 32)};
  const auto pool = DonorPool::from_clips(donors);
  AugmentConfig cfg;
  cfg.p_group = 0.0;
  cfg.p_displace = cfg.p_zoom = cfg.p_shake = 1.0;
  cfg.intensity = 0.0;
  const auto fg = noise_clip(6, 24, 24, 33);
  Rng rng(34);
  for (int i = 0; i < 20; ++i) EXPECT_LE(max_abs_diff(augment_clip(fg, pool, cfg, rng).clip, fg), 1e-6);
}

TEST(Augment, CurriculumRamp) {
  EXPECT_DOUBLE_EQ(curriculum_intensity(0, 5), 0.2);
  EXPECT_DOUBLE_EQ(curriculum_intensity(3, 5), 0.8);
  EXPECT_DOUBLE_EQ(curriculum_intensity(4, 5), 1.0);
  EXPECT_DOUBLE_EQ(curriculum_intensity(40, 5), 1.0);
  EXPECT_DOUBLE_EQ(at_epoch(AugmentConfig{}, 1).intensity, 0.4);
}

TEST(Augment, SharedBatchDrawsOncePerBatch) {
  std::vector<Clip> donors{noise_clip(8, 16, 16, 35), noise_clip(8, 16, 16, 36), noise_clip(8, 16, 16, 37)};
  const auto pool = DonorPool::from_clips(donors);
  AugmentConfig cfg;
  cfg.p_perspective = cfg.p_zoom = cfg.p_shake = cfg.p_displace = 1.0;
  std::vector<Clip> batch{noise_clip(8, 16, 16, 38), noise_clip(8, 16, 16, 39), noise_clip(8, 16, 16, 40)};
  Rng rng(41);
  const auto out = augment_batch(batch, pool, cfg, rng, true);
  ASSERT_EQ(out.size(), 3u);
  auto step = [](const AugTrace& t, const std::string& name) {
    for (const auto& s : t)
      if (s.name == name) return s.params;
    return nlohmann::json();
  };
  for (const char* name : {"perspective", "displace", "zoom", "shake"}) {
    EXPECT_FALSE(step(out[0].trace, name).is_null()) << name;
    EXPECT_EQ(step(out[0].trace, name), step(out[1].trace, name)) << name;
    EXPECT_EQ(step(out[0].trace, name), step(out[2].trace, name)) << name;
  }
  EXPECT_NE(step(out[0].trace, "background"), step(out[1].trace, "background"));

  const auto per_sample = augment_batch(batch, pool, cfg, rng, false);
  EXPECT_NE(step(per_sample[0].trace, "zoom"), step(per_sample[1].trace, "zoom"));
  batch.push_back(noise_clip(7, 16, 16, 42));
  EXPECT_THROW(augment_batch(batch, pool, cfg, rng, true), std::invalid_argument);
}

TEST(AugmentConfig, ValidationAndPartialJson) {
  EXPECT_NO_THROW(AugmentConfig{}.validate());
  const auto cfg = nlohmann::json::parse(R"({"p_zoom": 0.9, "zoom_min": 0.8})").get<AugmentConfig>();
  EXPECT_EQ(cfg.p_zoom, 0.9);
  EXPECT_EQ(cfg.zoom_min, 0.8);
  EXPECT_EQ(cfg.p_perspective, 0.8);
  AugmentConfig bad;
  bad.p_shake = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.zoom_max = 1.8;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.scale_min = 0.9;
  bad.scale_max = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
