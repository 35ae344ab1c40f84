#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <random>

#include "fairlens/core.hpp"
#include "fairlens/error.hpp"

using namespace fairlens;

namespace {

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

TEST(EmbeddingMatrix, RejectsEmptyAndNonFinite) {
  EXPECT_EQ(CodeOf([] { EmbeddingMatrix(Matrix(0, 3)); }), ErrorCode::kShapeError);
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(CodeOf([&] { EmbeddingMatrix{m}; }), ErrorCode::kDataError);
  m(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_EQ(CodeOf([&] { EmbeddingMatrix{m}; }), ErrorCode::kDataError);
}

TEST(EmbeddingMatrix, FromRowsAndSelect) {
  const auto e = EmbeddingMatrix::FromRows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(e.rows(), 3u);
  EXPECT_EQ(e.dims(), 2u);
  const std::vector<std::size_t> pick = {2, 0};
  const auto s = e.SelectRows(pick);
  EXPECT_EQ(s.row(0)[0], 5.0);
  EXPECT_EQ(s.row(1)[1], 2.0);
  EXPECT_EQ(CodeOf([] { EmbeddingMatrix::FromRows({{1, 2}, {3}}); }),
            ErrorCode::kShapeError);
}

TEST(GroupLabels, Invariants) {
  EXPECT_EQ(CodeOf([] { GroupLabels({0, 0}, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { GroupLabels({0, 2}, 2); }), ErrorCode::kDataError);
  EXPECT_EQ(CodeOf([] { GroupLabels({0, 0, 2}, 3); }), ErrorCode::kEmptyGroup);
  const GroupLabels g({0, 1, 1, 2}, 3, {"a", "b", "c"});
  EXPECT_EQ(g.GroupSizes(), (std::vector<std::int64_t>{1, 2, 1}));
  EXPECT_EQ(g.GroupName(2), "c");
  const std::vector<std::size_t> keep = {0, 1, 3};
  EXPECT_EQ(g.Subset(keep).labels(), (std::vector<int>{0, 1, 2}));
  const std::vector<std::size_t> drop = {1, 2};
  EXPECT_EQ(CodeOf([&] { g.Subset(drop); }), ErrorCode::kEmptyGroup);
}

TEST(BinaryLabels, Conventions) {
  const std::vector<int> zero_one = {0, 1, 1};
  EXPECT_EQ(BinaryLabels::FromZeroOne(zero_one).values(),
            (std::vector<int>{-1, 1, 1}));
  EXPECT_EQ(CodeOf([] { BinaryLabels({0, 1}); }), ErrorCode::kDataError);
}

TEST(LabeledDataset, SplitChecks) {
  const auto e = EmbeddingMatrix::FromRows({{0}, {1}, {2}, {3}});
  const GroupLabels g({0, 1, 0, 1}, 2);
  EXPECT_EQ(CodeOf([&] {
              LabeledDataset(e, g, std::nullopt, {Split::kTrain, Split::kTrain});
            }),
            ErrorCode::kShapeError);
  // Group 1 absent from a non-empty test split.
  EXPECT_EQ(CodeOf([&] {
              LabeledDataset(e, g, std::nullopt,
                             {Split::kTest, Split::kTrain, Split::kTest,
                              Split::kTrain});
            }),
            ErrorCode::kEmptyGroup);
  const LabeledDataset all_train(e, g, std::nullopt,
                                 std::vector<Split>(4, Split::kTrain));
  EXPECT_EQ(CodeOf([&] { all_train.RequireBothSplits(); }),
            ErrorCode::kEmptyInput);
  const LabeledDataset ok(e, g, std::nullopt,
                          {Split::kTrain, Split::kTrain, Split::kTest,
                           Split::kTest});
  EXPECT_EQ(ok.Indices(Split::kTest), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(ok.Restrict(Split::kTrain).size(), 2u);
}

TEST(PartitionByGroup, Examples) {
  {
    const GroupLabels g({0, 1, 0, 1}, 2);
    const std::vector<std::size_t> sel = {0, 1};
    const auto part = PartitionByGroup(sel, g);
    EXPECT_EQ(part.selected_per_group, (std::vector<std::int64_t>{1, 1}));
    EXPECT_EQ(part.population_per_group, (std::vector<std::int64_t>{2, 2}));
  }
  {
    const GroupLabels g({0, 1}, 2);
    const auto part = PartitionByGroup({}, g);
    EXPECT_EQ(part.total_selected, 0);
    EXPECT_EQ(part.selected_per_group, (std::vector<std::int64_t>{0, 0}));
  }
  {
    const GroupLabels g({0, 0, 1, 1, 2}, 3);
    const std::vector<std::size_t> sel = {0, 1, 2};
    const auto part = PartitionByGroup(sel, g);
    EXPECT_EQ(part.selected_per_group, (std::vector<std::int64_t>{2, 1, 0}));
    EXPECT_EQ(part.population_per_group, (std::vector<std::int64_t>{2, 2, 1}));
  }
}

TEST(PartitionByGroup, RejectsBadSelections) {
  const GroupLabels g({0, 1, 0}, 2);
  const std::vector<std::size_t> dup = {0, 0};
  const std::vector<std::size_t> out = {3};
  EXPECT_EQ(CodeOf([&] { PartitionByGroup(dup, g); }),
            ErrorCode::kInvalidSelection);
  EXPECT_EQ(CodeOf([&] { PartitionByGroup(out, g); }),
            ErrorCode::kInvalidSelection);
}

TEST(PartitionByGroup, ComplementAndPermutationProperties) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + static_cast<int>(rng() % 5);
    const std::size_t n = p + rng() % 60;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < static_cast<std::size_t>(p) ? static_cast<int>(i)
                                                   : static_cast<int>(rng() % p);
    }
    const GroupLabels g(labels, p);
    std::vector<std::size_t> sel, rest;
    for (std::size_t i = 0; i < n; ++i) (rng() % 2 ? sel : rest).push_back(i);
    const auto a = PartitionByGroup(sel, g);
    const auto b = PartitionByGroup(rest, g);
    for (int i = 0; i < p; ++i) {
      EXPECT_EQ(a.selected_per_group[i] + b.selected_per_group[i],
                a.population_per_group[i]);
    }
    std::shuffle(sel.begin(), sel.end(), rng);
    EXPECT_EQ(PartitionByGroup(sel, g).selected_per_group, a.selected_per_group);
  }
}

TEST(ErrorClasses, ExitMapping) {
  EXPECT_EQ(ErrorClassOf(ErrorCode::kConfigError), ErrorClass::kConfig);
  EXPECT_EQ(ErrorClassOf(ErrorCode::kInvalidK), ErrorClass::kConfig);
  EXPECT_EQ(ErrorClassOf(ErrorCode::kSchemaError), ErrorClass::kData);
  EXPECT_EQ(ErrorClassOf(ErrorCode::kRankError), ErrorClass::kNumeric);
  EXPECT_EQ(ErrorClassOf(ErrorCode::kDegenerateVariance), ErrorClass::kNumeric);
  const Error e(ErrorCode::kEmptyGroup, "group 3");
  EXPECT_STREQ(e.what(), "EmptyGroup: group 3");
  EXPECT_EQ(e.detail(), "group 3");
}
