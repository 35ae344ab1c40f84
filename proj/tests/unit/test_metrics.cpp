#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_set>
#include <limits>
#include <random>

#include "fairlens/metrics.hpp"
#include "oracles.hpp"

using namespace fairlens;
using namespace fairlens::metrics;

namespace {

GroupPartition Partition(std::vector<std::int64_t> k, std::vector<std::int64_t> z) {
  GroupPartition part;
  part.selected_per_group = std::move(k);
  part.population_per_group = std::move(z);
  for (auto v : part.selected_per_group) part.total_selected += v;
  for (auto v : part.population_per_group) part.total_population += v;
  return part;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoError;
}

}  // namespace

TEST(DdpClassification, Examples) {
  EXPECT_DOUBLE_EQ(
      DdpClassification(BinaryLabels({1, -1, 1, -1}), GroupLabels({0, 0, 1, 1}, 2))
          .value,
      0.0);
  const BinaryLabels pred({1, 1, 1, -1, -1, 1, 1, -1, -1, -1});
  const GroupLabels groups({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 2);
  EXPECT_NEAR(DdpClassification(pred, groups).value, 0.2, 1e-15);

  const auto r = DdpClassification(BinaryLabels({1, 1, 1, -1, -1, -1}),
                                   GroupLabels({0, 0, 1, 1, 2, 2}, 3));
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.arg_pair, std::make_pair(0, 2));
  EXPECT_EQ(r.per_group_rates, (std::vector<double>{1.0, 0.5, 0.0}));
}

TEST(DdpRetrieval, Examples) {
  EXPECT_DOUBLE_EQ(DdpRetrieval(Partition({5, 5}, {50, 50})).value, 0.0);
  EXPECT_NEAR(DdpRetrieval(Partition({8, 2}, {50, 50})).value, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(DdpRetrieval(Partition({3, 6, 9}, {10, 20, 30})).value, 0.0);
}

TEST(DdpRetrieval, CanExceedOne) {
  // 10/10 - 40/90 vs 0 - 50/90.
  EXPECT_NEAR(DdpRetrieval(Partition({10, 0}, {50, 50})).value, 10.0 / 9.0,
              1e-15);
}

TEST(DdpRetrieval, Errors) {
  EXPECT_EQ(CodeOf([] { DdpRetrieval(Partition({0, 0}, {5, 5})); }),
            ErrorCode::kEmptySelection);
  EXPECT_EQ(CodeOf([] { DdpRetrieval(Partition({5, 5}, {5, 5})); }),
            ErrorCode::kDegenerateDenominator);
}

TEST(Dtpr, Examples) {
  const GroupLabels g({0, 0, 0, 0, 1, 1, 1, 1}, 2);
  const BinaryLabels truth({1, 1, 1, 1, 1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(Dtpr(truth, truth, g).value, 0.0);
  EXPECT_DOUBLE_EQ(
      Dtpr(BinaryLabels({1, 1, 1, 1, 1, 1, -1, -1}), truth, g).value, 0.5);
  EXPECT_DOUBLE_EQ(Dtpr(BinaryLabels(std::vector<int>(8, -1)), truth, g).value,
                   0.0);
  EXPECT_EQ(CodeOf([&] {
              Dtpr(truth, BinaryLabels({1, 1, 1, 1, -1, -1, -1, -1}), g);
            }),
            ErrorCode::kEmptyPositiveSet);
}

TEST(SkewAtK, Examples) {
  EXPECT_DOUBLE_EQ(SkewAtK(Partition({5, 5}, {50, 50})).value, 0.0);
  EXPECT_NEAR(SkewAtK(Partition({8, 2}, {50, 50})).value, std::log(2.5), 1e-15);
  const auto absent = SkewAtK(Partition({10, 0}, {50, 50}));
  EXPECT_TRUE(std::isinf(absent.value));
  EXPECT_EQ(absent.arg_pair, std::make_pair(1, 1));
  const std::vector<double> desired = {0.8, 0.2};
  EXPECT_NEAR(SkewAtK(Partition({8, 2}, {50, 50}), desired).value, 0.0, 1e-15);
  const std::vector<double> bad = {0.5, 0.6};
  EXPECT_EQ(CodeOf([&] { SkewAtK(Partition({8, 2}, {50, 50}), bad); }),
            ErrorCode::kInvalidArgument);
}

TEST(DdpRep, Examples) {
  const std::vector<std::int64_t> even = {5, 5}, tilted = {7, 3},
                                  one = {10, 0, 0};
  EXPECT_DOUBLE_EQ(DdpRep(even, 10).value, 0.0);
  EXPECT_NEAR(DdpRep(tilted, 10).value, 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(DdpRep(one, 10).value, 1.0);
}

TEST(Performance, Examples) {
  const BinaryLabels a({1, -1, 1, 1});
  EXPECT_DOUBLE_EQ(Accuracy(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Accuracy(a, BinaryLabels({-1, 1, -1, -1})), 0.0);
  EXPECT_DOUBLE_EQ(Accuracy(a, BinaryLabels({1, -1, 1, -1})), 0.75);

  std::vector<std::size_t> ranked(10);
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::unordered_set<std::size_t> all(ranked.begin(), ranked.end());
  EXPECT_DOUBLE_EQ(PrecisionAtK(ranked, all, 10), 1.0);
  EXPECT_DOUBLE_EQ(PrecisionAtK(ranked, {}, 10), 0.0);
  std::unordered_set<std::size_t> nine(ranked.begin(), ranked.begin() + 9);
  EXPECT_DOUBLE_EQ(PrecisionAtK(ranked, nine, 10), 0.9);
  EXPECT_EQ(CodeOf([&] { PrecisionAtK(ranked, nine, 0); }), ErrorCode::kInvalidK);

  std::vector<std::vector<std::size_t>> lists(5, ranked);
  std::vector<std::size_t> first(5, 0), sixth(5, 5);
  EXPECT_DOUBLE_EQ(RecallAtK(lists, first, 1), 1.0);
  EXPECT_DOUBLE_EQ(RecallAtK(lists, sixth, 5), 0.0);
  EXPECT_DOUBLE_EQ(RecallAtK(lists, sixth, 10), 1.0);
  std::vector<std::size_t> mixed = {0, 1, 2, 7, 8};
  EXPECT_DOUBLE_EQ(RecallAtK(lists, mixed, 5), 0.6);
  EXPECT_EQ(CodeOf([] { RecallAtK({}, {}, 1); }), ErrorCode::kEmptyInput);
}

TEST(Metrics, MatchOracleOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int p = 2 + static_cast<int>(rng() % 6);
    const std::size_t n = 4 * p + rng() % 100;
    std::vector<int> labels(n), pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % p);
      pred[i] = rng() % 2 ? 1 : -1;
      truth[i] = i < static_cast<std::size_t>(2 * p) ? 1 : (rng() % 2 ? 1 : -1);
    }
    const GroupLabels g(labels, p);
    EXPECT_NEAR(DdpClassification(BinaryLabels(pred), g).value,
                oracle::DdpClassification(pred, labels, p), 1e-12);
    EXPECT_NEAR(Dtpr(BinaryLabels(pred), BinaryLabels(truth), g).value,
                oracle::Dtpr(pred, truth, labels, p), 1e-12);

    std::vector<std::size_t> sel;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 3 == 0) sel.push_back(i);
    }
    if (sel.empty() || sel.size() == n) continue;
    const auto part = PartitionByGroup(sel, g);
    EXPECT_NEAR(DdpRetrieval(part).value,
                oracle::DdpRetrieval(part.selected_per_group,
                                     part.population_per_group),
                1e-12);
    const double skew = SkewAtK(part).value;
    const double expect =
        oracle::Skew(part.selected_per_group, std::vector<double>(p, 1.0 / p));
    if (std::isinf(expect)) {
      EXPECT_TRUE(std::isinf(skew));
    } else {
      EXPECT_NEAR(skew, expect, 1e-12);
    }
  }
}

TEST(Metrics, RelabelingInvariance) {
  const BinaryLabels pred({1, 1, -1, 1, -1, -1, 1, -1, 1});
  const GroupLabels g({0, 0, 0, 1, 1, 1, 2, 2, 2}, 3);
  const GroupLabels permuted({2, 2, 2, 0, 0, 0, 1, 1, 1}, 3);
  EXPECT_DOUBLE_EQ(DdpClassification(pred, g).value,
                   DdpClassification(pred, permuted).value);
  EXPECT_DOUBLE_EQ(DdpRetrieval(Partition({4, 1, 2}, {10, 12, 9})).value,
                   DdpRetrieval(Partition({1, 2, 4}, {12, 9, 10})).value);
}

TEST(Metrics, TwoGroupsReduceToAbsoluteDifference) {
  const auto r = DdpClassification(BinaryLabels({1, 1, -1, 1, -1, -1}),
                                   GroupLabels({0, 0, 0, 1, 1, 1}, 2));
  EXPECT_DOUBLE_EQ(r.value,
                   std::fabs(r.per_group_rates[0] - r.per_group_rates[1]));
}
