#include "fairlens/core.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace fairlens {

EmbeddingMatrix::EmbeddingMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorCode::kShapeError, "embedding matrix must be at least 1x1");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::kDataError, "embedding matrix has non-finite values");
  }
}

EmbeddingMatrix EmbeddingMatrix::FromRows(
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorCode::kShapeError, "embedding matrix must be at least 1x1");
  }
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw Error(ErrorCode::kShapeError,
                  "ragged embedding rows at row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return EmbeddingMatrix(std::move(m));
}

EmbeddingMatrix EmbeddingMatrix::SelectRows(
    std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), values_.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows()) {
      throw Error(ErrorCode::kInvalidSelection, "row index out of range");
    }
    out.row(i) = values_.row(indices[i]);
  }
  return EmbeddingMatrix(std::move(out));
}

GroupLabels::GroupLabels(std::vector<int> labels, int group_count,
                         std::vector<std::string> names)
    : labels_(std::move(labels)),
      group_count_(group_count),
      names_(std::move(names)) {
  if (group_count_ < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 groups");
  }
  if (!names_.empty() && names_.size() != static_cast<std::size_t>(group_count_)) {
    throw Error(ErrorCode::kShapeError, "group name count != group count");
  }
  std::vector<bool> seen(group_count_, false);
  for (int label : labels_) {
    if (label < 0 || label >= group_count_) {
      throw Error(ErrorCode::kDataError,
                  "group label " + std::to_string(label) + " outside [0, " +
                      std::to_string(group_count_) + ")");
    }
    seen[label] = true;
  }
  for (int g = 0; g < group_count_; ++g) {
    if (!seen[g]) {
      throw Error(ErrorCode::kEmptyGroup,
                  "group " + std::to_string(g) + " has no members");
    }
  }
}

GroupLabels GroupLabels::FromLabels(std::vector<int> labels) {
  int max_label = -1;
  for (int label : labels) max_label = std::max(max_label, label);
  return GroupLabels(std::move(labels), max_label + 1);
}

std::string GroupLabels::GroupName(int group) const {
  if (!names_.empty()) return names_[group];
  return std::to_string(group);
}

std::vector<std::int64_t> GroupLabels::GroupSizes() const {
  std::vector<std::int64_t> sizes(group_count_, 0);
  for (int label : labels_) ++sizes[label];
  return sizes;
}

GroupLabels GroupLabels::Subset(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= labels_.size()) {
      throw Error(ErrorCode::kInvalidSelection, "label index out of range");
    }
    out.push_back(labels_[i]);
  }
  return GroupLabels(std::move(out), group_count_, names_);
}

BinaryLabels::BinaryLabels(std::vector<int> values) : values_(std::move(values)) {
  for (int v : values_) {
    if (v != -1 && v != 1) {
      throw Error(ErrorCode::kDataError,
                  "binary label must be -1 or +1, got " + std::to_string(v));
    }
  }
}

BinaryLabels BinaryLabels::FromZeroOne(std::span<const int> values) {
  std::vector<int> out;
  out.reserve(values.size());
  for (int v : values) {
    if (v == 0) {
      out.push_back(-1);
    } else if (v == 1 || v == -1) {
      out.push_back(v);
    } else {
      throw Error(ErrorCode::kDataError,
                  "binary label must be in {0,1} or {-1,+1}, got " +
                      std::to_string(v));
    }
  }
  return BinaryLabels(std::move(out));
}

BinaryLabels BinaryLabels::Subset(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= values_.size()) {
      throw Error(ErrorCode::kInvalidSelection, "label index out of range");
    }
    out.push_back(values_[i]);
  }
  return BinaryLabels(std::move(out));
}

LabeledDataset::LabeledDataset(EmbeddingMatrix embeddings,
                               GroupLabels protected_groups,
                               std::optional<BinaryLabels> ground_truth,
                               std::vector<Split> split)
    : embeddings_(std::move(embeddings)),
      protected_(std::move(protected_groups)),
      ground_truth_(std::move(ground_truth)),
      split_(std::move(split)) {
  const std::size_t n = embeddings_.rows();
  if (protected_.size() != n || split_.size() != n ||
      (ground_truth_ && ground_truth_->size() != n)) {
    throw Error(ErrorCode::kShapeError,
                "per-item fields of the dataset differ in length");
  }
  const auto test = Indices(Split::kTest);
  if (!test.empty()) {
    std::vector<bool> seen(protected_.group_count(), false);
    for (std::size_t i : test) seen[protected_[i]] = true;
    for (int g = 0; g < protected_.group_count(); ++g) {
      if (!seen[g]) {
        throw Error(ErrorCode::kEmptyGroup,
                    "group '" + protected_.GroupName(g) +
                        "' is absent from the test split");
      }
    }
  }
}

std::vector<std::size_t> LabeledDataset::Indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split_.size(); ++i) {
    if (split_[i] == which) out.push_back(i);
  }
  return out;
}

LabeledDataset LabeledDataset::Restrict(Split which) const {
  const auto idx = Indices(which);
  if (idx.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                which == Split::kTrain ? "train split is empty"
                                       : "test split is empty");
  }
  std::optional<BinaryLabels> truth;
  if (ground_truth_) truth = ground_truth_->Subset(idx);
  return LabeledDataset(embeddings_.SelectRows(idx), protected_.Subset(idx),
                        std::move(truth), std::vector<Split>(idx.size(), which));
}

void LabeledDataset::RequireBothSplits() const {
  if (Indices(Split::kTrain).empty() || Indices(Split::kTest).empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "fitting requires non-empty train and test splits");
  }
}

GroupPartition PartitionByGroup(std::span<const std::size_t> selected,
                                const GroupLabels& groups) {
  GroupPartition part;
  part.population_per_group = groups.GroupSizes();
  part.selected_per_group.assign(groups.group_count(), 0);
  part.total_population = static_cast<std::int64_t>(groups.size());

  std::vector<bool> taken(groups.size(), false);
  for (std::size_t idx : selected) {
    if (idx >= groups.size()) {
      throw Error(ErrorCode::kInvalidSelection,
                  "selected index " + std::to_string(idx) + " out of range");
    }
    if (taken[idx]) {
      throw Error(ErrorCode::kInvalidSelection,
                  "selected index " + std::to_string(idx) + " is duplicated");
    }
    taken[idx] = true;
    ++part.selected_per_group[groups[idx]];
  }
  part.total_selected = static_cast<std::int64_t>(selected.size());
  return part;
}

}  // namespace fairlens
