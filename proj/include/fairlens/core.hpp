#ifndef FAIRLENS_CORE_HPP_
#define FAIRLENS_CORE_HPP_

// Shared data model: embeddings, protected-group labels, binary task labels,
// train/test split tags and the group partition of a selection.
//
// All types validate their invariants on construction and are immutable
// afterwards.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairlens/error.hpp"

namespace fairlens {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Dense n x d matrix of finite embedding vectors, one row per item.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(Matrix values);

  static EmbeddingMatrix FromRows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const { return values_; }
  RowVector row(std::size_t i) const { return values_.row(i); }

  EmbeddingMatrix SelectRows(std::span<const std::size_t> indices) const;

  bool operator==(const EmbeddingMatrix& other) const {
    return values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_;
  }

 private:
  Matrix values_;
};

// Dense protected-group index per item, in [0, group_count). Every group
// occurs at least once.
class GroupLabels {
 public:
  GroupLabels(std::vector<int> labels, int group_count,
              std::vector<std::string> names = {});

  // group_count inferred as max label + 1.
  static GroupLabels FromLabels(std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  int group_count() const { return group_count_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& names() const { return names_; }
  std::string GroupName(int group) const;

  std::vector<std::int64_t> GroupSizes() const;

  // Subset keeps group_count and names; throws EmptyGroup if a group vanishes.
  GroupLabels Subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<int> labels_;
  int group_count_;
  std::vector<std::string> names_;
};

// Binary labels in {-1, +1}.
class BinaryLabels {
 public:
  explicit BinaryLabels(std::vector<int> values);

  // Maps 0 -> -1 and 1 -> +1; -1/+1 pass through.
  static BinaryLabels FromZeroOne(std::span<const int> values);

  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  bool IsPositive(std::size_t i) const { return values_[i] > 0; }
  const std::vector<int>& values() const { return values_; }

  BinaryLabels Subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<int> values_;
};

enum class Split : std::uint8_t { kTrain, kTest };

// Embeddings joined with protected labels, optional ground truth and split
// tags. A group absent from a non-empty test split is rejected.
class LabeledDataset {
 public:
  LabeledDataset(EmbeddingMatrix embeddings, GroupLabels protected_groups,
                 std::optional<BinaryLabels> ground_truth,
                 std::vector<Split> split);

  const EmbeddingMatrix& embeddings() const { return embeddings_; }
  const GroupLabels& protected_groups() const { return protected_; }
  const std::optional<BinaryLabels>& ground_truth() const {
    return ground_truth_;
  }
  const std::vector<Split>& split() const { return split_; }
  std::size_t size() const { return embeddings_.rows(); }

  std::vector<std::size_t> Indices(Split which) const;

  // Restricts to one split. Throws EmptyInput when that split is empty and
  // EmptyGroup when a group has no member in it.
  LabeledDataset Restrict(Split which) const;

  // Throws EmptyInput unless both splits are non-empty.
  void RequireBothSplits() const;

 private:
  EmbeddingMatrix embeddings_;
  GroupLabels protected_;
  std::optional<BinaryLabels> ground_truth_;
  std::vector<Split> split_;
};

// Per-group tallies of a selection K against the full population Z.
struct GroupPartition {
  std::vector<std::int64_t> selected_per_group;    // |K_i|
  std::vector<std::int64_t> population_per_group;  // |Z_i|
  std::int64_t total_selected = 0;                 // |K|
  std::int64_t total_population = 0;               // |Z|

  int group_count() const {
    return static_cast<int>(population_per_group.size());
  }
};

// Throws InvalidSelection on duplicate or out-of-range indices.
GroupPartition PartitionByGroup(std::span<const std::size_t> selected,
                                const GroupLabels& groups);

}  // namespace fairlens

#endif  // FAIRLENS_CORE_HPP_
