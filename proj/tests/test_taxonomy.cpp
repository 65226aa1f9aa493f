#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fractalvid/taxonomy.hpp"

using namespace fvid;

TEST(Prototypes, CountSeedsAndVariations) {
  const auto protos = sample_prototypes(500, 3);
  ASSERT_EQ(protos.size(), 500u);
  std::set<std::uint64_t> seeds;
  int nonlinear = 0;
  const std::set<int> allowed{0, 4, 14, 16, 17, 20, 27, 29};
  for (std::size_t c = 0; c < protos.size(); ++c) {
    const auto& p = protos[c];
    EXPECT_EQ(p.class_id, static_cast<int>(c));
    seeds.insert(p.seed);
    EXPECT_TRUE(allowed.count(p.params.variation.value()));
    nonlinear += !p.params.variation.is_linear();
    EXPECT_LT(p.params.max_contraction(), 1.0);
  }
  EXPECT_EQ(seeds.size(), 500u);
  EXPECT_EQ(nonlinear, 250);
}

TEST(Prototypes, MasterSeedDetermines) {
  const auto a = sample_prototypes(6, 11), b = sample_prototypes(6, 11), c = sample_prototypes(6, 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].params.weights, b[i].params.weights);
    EXPECT_NE(a[i].params.weights, c[i].params.weights);
  }
  EXPECT_THROW(sample_prototypes(0, 1), std::invalid_argument);
}

TEST(Mutation, ZeroNoiseIsIdentity) {
  const auto proto = sample_prototype(1, 5);
  const MutationNoise zero(proto.params.frames, proto.params.functions);
  EXPECT_EQ(apply_mutation(proto.params, zero).weights, proto.params.weights);
}

TEST(Mutation, ZeroParamsTakeTheBias) {
  ClipParams w(3, 2);
  MutationNoise m(3, 2);
  for (double& b : m.bias) b = 0.2;
  for (double& s : m.scale) s = -0.3;
  for (double v : apply_mutation(w, m).weights) EXPECT_EQ(v, 0.2);
}

TEST(Mutation, NoiseShapesAndBroadcast) {
  Rng rng(4);
  const auto m = sample_mutation_noise(19, 5, rng);
  EXPECT_EQ(m.scale_shape(), (std::array<int, 3>{19, 1, 6}));
  EXPECT_EQ(m.bias_shape(), (std::array<int, 3>{1, 5, 6}));
  EXPECT_EQ(m.scale.size(), 19u * 6);
  EXPECT_EQ(m.bias.size(), 5u * 6);
  for (double s : m.scale) {
    EXPECT_GE(s, -kMutationScale);
    EXPECT_LE(s, kMutationScale);
  }
  for (double b : m.bias) {
    EXPECT_GE(b, -kMutationBias);
    EXPECT_LT(b, kMutationBias);
  }

  // Scale is shared by all functions of a frame, bias by all frames of a function.
  ClipParams ones(19, 5);
  for (double& v : ones.weights) v = 1.0;
  const auto out = apply_mutation(ones, m);
  for (int t = 0; t < 19; ++t)
    for (int n = 0; n < 5; ++n)
      for (int k = 0; k < 6; ++k)
        EXPECT_DOUBLE_EQ(out.weights[out.offset(t, n) + k], 1.0 + m.scale_at(t, k) + m.bias_at(n, k));
}

TEST(Mutation, InstancesDistinctContractiveAndInsideEnvelope) {
  const auto proto = sample_prototype(2, 99);
  std::set<std::vector<double>> seen;
  int repaired = 0;
  for (int i = 0; i < 1000; ++i) {
    Rng rng(instance_seed(proto, i));
    const auto r = mutate_detailed(proto, rng);
    ASSERT_LT(r.params.max_contraction(), 1.0);
    EXPECT_EQ(r.params.frames, proto.params.frames);
    EXPECT_EQ(r.params.functions, proto.params.functions);
    EXPECT_EQ(r.params.variation, proto.params.variation);
    seen.insert(r.params.weights);
    if (r.repaired_maps > 0) {
      ++repaired;
      continue;
    }
    for (std::size_t k = 0; k < r.params.weights.size(); ++k) {
      const double w = proto.params.weights[k];
      ASSERT_LE(std::abs(r.params.weights[k] - w), kMutationScale * std::abs(w) + kMutationBias + 1e-12);
    }
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(repaired, 0);
}

TEST(Mutation, ShrinkRepairsNonContractiveMaps) {
  ClipParams p(1, 2);
  p.set_map(0, 0, {1.5, 0.2, 0.3, -0.1, 0.8, 0.4});
  p.set_map(0, 1, {0.5, 0, 0, 0, 0.5, 0});
  EXPECT_EQ(shrink_noncontractive(p), 1);
  EXPECT_NEAR(contraction_factor(p.map(0, 0)), kRepairSigma, 1e-12);
  EXPECT_EQ(p.map(0, 0).c, 0.3);
  EXPECT_EQ(p.map(0, 1), (AffineMap{0.5, 0, 0, 0, 0.5, 0}));
}

TEST(Mutation, InstanceSeedReproduces) {
  const auto proto = sample_prototype(3, 8);
  EXPECT_EQ(mutate_instance(proto, 7).weights, mutate_instance(proto, 7).weights);
  EXPECT_NE(mutate_instance(proto, 7).weights, mutate_instance(proto, 8).weights);
}

TEST(PrototypeBank, JsonRoundTrip) {
  const auto protos = sample_prototypes(4, 21);
  const auto back = prototype_bank_from_json(nlohmann::json::parse(prototype_bank_json(protos).dump()));
  ASSERT_EQ(back.size(), protos.size());
  for (std::size_t i = 0; i < protos.size(); ++i) {
    EXPECT_EQ(back[i].class_id, protos[i].class_id);
    EXPECT_EQ(back[i].seed, protos[i].seed);
    EXPECT_EQ(back[i].params.weights, protos[i].params.weights);
    EXPECT_EQ(back[i].params.variation, protos[i].params.variation);
    EXPECT_EQ(mutate_instance(back[i], 2).weights, mutate_instance(protos[i], 2).weights);
  }
}
