#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fairlens/mitigation.hpp"
#include "fairlens/probe.hpp"
#include "fairlens/synth.hpp"
#include "fixtures.hpp"

using namespace fairlens;
using namespace fairlens::synth;

TEST(CounterRng, DeterministicAndStreamed) {
  CounterRng a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 8; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
  EXPECT_EQ(a.counter(), 8u);
}

TEST(Synth, SameSeedBitIdentical) {
  const auto spec = fixtures::BiasedSpec(500, 12, 3, 2.0, 99);
  const auto a = Generate(spec);
  const auto b = Generate(spec);
  EXPECT_EQ(a.embeddings(), b.embeddings());
  EXPECT_EQ(a.protected_groups().labels(), b.protected_groups().labels());
  EXPECT_EQ(a.ground_truth()->values(), b.ground_truth()->values());
  EXPECT_EQ(a.split(), b.split());
  auto other = spec;
  other.seed = 100;
  EXPECT_FALSE(Generate(other).embeddings() == a.embeddings());
}

TEST(Synth, BalancedGroupsAndSplits) {
  const auto data = Generate(fixtures::BiasedSpec(1001, 8, 4, 1.0, 5));
  const auto sizes = data.protected_groups().GroupSizes();
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) -
                *std::min_element(sizes.begin(), sizes.end()),
            1);
  const double train = static_cast<double>(data.Indices(Split::kTrain).size());
  EXPECT_NEAR(train / 1001.0, 0.7, 0.01);
  EXPECT_NO_THROW(data.Restrict(Split::kTrain));
  EXPECT_NO_THROW(data.Restrict(Split::kTest));
  const auto& concept_labels = data.ground_truth()->values();
  EXPECT_EQ(std::count(concept_labels.begin(), concept_labels.end(), 1), 500);
}

TEST(Synth, SpecValidation) {
  auto spec = fixtures::BiasedSpec(100, 8, 2, 1.0, 1);
  spec.n = 3;
  try {
    Generate(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooSmall);
  }
  spec = fixtures::BiasedSpec(100, 8, 2, 1.0, 1);
  spec.concept_dims = {1, 5};
  EXPECT_THROW(ValidateSpec(spec), Error);
  spec.concept_dims = {8};
  EXPECT_THROW(ValidateSpec(spec), Error);
  spec.concept_dims = {3};
  spec.bias_strength = -1.0;
  EXPECT_THROW(ValidateSpec(spec), Error);
  spec.bias_strength = 1.0;
  spec.p = 1;
  EXPECT_THROW(ValidateSpec(spec), Error);
}

TEST(Synth, NoPlantedSignalMeansChanceProbe) {
  const auto data = Generate(fixtures::BiasedSpec(5000, 16, 2, 0.0, 8));
  const auto train = data.Restrict(Split::kTrain);
  const auto test = data.Restrict(Split::kTest);
  const auto model = probe::FitProbe(train.embeddings(), train.protected_groups());
  EXPECT_NEAR(probe::EvaluateProbe(model, test.embeddings(), test.protected_groups()),
              0.5, 0.05);
}

TEST(Synth, PlantedBiasTopsMiRanking) {
  const auto data = Generate(fixtures::BiasedSpec(2000, 32, 2, 6.0, 13));
  const auto train = data.Restrict(Split::kTrain);
  const auto mi = mitigation::EstimateMiPerDimension(train.embeddings(),
                                                     train.protected_groups());
  std::vector<std::size_t> order(mi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return mi[a] > mi[b]; });
  std::vector<std::size_t> top(order.begin(), order.begin() + 2);
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, (std::vector<std::size_t>{0, 1}));
}
