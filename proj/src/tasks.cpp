#include "fairlens/tasks.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fairlens {
namespace tasks {
namespace {

Vector RowNorms(const Matrix& m, const char* what) {
  Vector norms = m.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms[i] > 0.0)) {
      throw Error(ErrorCode::kDegenerateVector,
                  std::string(what) + " row " + std::to_string(i) +
                      " has zero norm");
    }
  }
  return norms;
}

// Indices of row `row` ordered by decreasing value, ties by ascending index.
std::vector<std::size_t> RankRow(const Matrix& sims, Eigen::Index row) {
  std::vector<std::size_t> order(sims.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return sims(row, a) > sims(row, b);
                   });
  return order;
}

}  // namespace

Matrix CosineSimilarityMatrix(const EmbeddingMatrix& items,
                              const EmbeddingMatrix& queries) {
  if (items.dims() != queries.dims()) {
    throw Error(ErrorCode::kShapeError,
                "item dims " + std::to_string(items.dims()) +
                    " != query dims " + std::to_string(queries.dims()));
  }
  const Vector item_norms = RowNorms(items.values(), "item");
  const Vector query_norms = RowNorms(queries.values(), "query");
  Matrix sims = queries.values() * items.values().transpose();
  for (Eigen::Index j = 0; j < sims.rows(); ++j) {
    for (Eigen::Index i = 0; i < sims.cols(); ++i) {
      const double c = sims(j, i) / (query_norms[j] * item_norms[i]);
      sims(j, i) = std::clamp(c, -1.0, 1.0);
    }
  }
  return sims;
}

BinaryLabels ZeroShotClassify(const EmbeddingMatrix& items,
                              const RowVector& class_a,
                              const RowVector& class_b) {
  Matrix prompts(2, class_a.size());
  if (class_a.size() != class_b.size()) {
    throw Error(ErrorCode::kShapeError, "class embeddings differ in size");
  }
  prompts.row(0) = class_a;
  prompts.row(1) = class_b;
  const Matrix sims = CosineSimilarityMatrix(items, EmbeddingMatrix(prompts));
  std::vector<int> labels(items.rows());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = sims(0, i) >= sims(1, i) ? 1 : -1;
  }
  return BinaryLabels(std::move(labels));
}

std::vector<RetrievalResult> TopK(const Matrix& similarities, std::size_t k) {
  const auto n = static_cast<std::size_t>(similarities.cols());
  if (k < 1 || k > n) {
    throw Error(ErrorCode::kInvalidK, "k=" + std::to_string(k) +
                                          " outside [1, " + std::to_string(n) +
                                          "]");
  }
  std::vector<RetrievalResult> results(similarities.rows());
  for (Eigen::Index q = 0; q < similarities.rows(); ++q) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = similarities(q, a);
                        const double sb = similarities(q, b);
                        return sa > sb || (sa == sb && a < b);
                      });
    order.resize(k);
    RetrievalResult& r = results[q];
    r.query_index = static_cast<std::size_t>(q);
    r.similarities.reserve(k);
    for (std::size_t idx : order) r.similarities.push_back(similarities(q, idx));
    r.ranked_indices = std::move(order);
  }
  return results;
}

RetrievalResult BalancedRetrieval(const EmbeddingMatrix& items,
                                  const EmbeddingMatrix& group_queries,
                                  std::size_t k) {
  const std::size_t p = group_queries.rows();
  if (p < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 group queries");
  }
  if (k < p) {
    throw Error(ErrorCode::kInvalidK,
                "k=" + std::to_string(k) + " is smaller than the group count");
  }
  if (k > items.rows()) {
    throw Error(ErrorCode::kInsufficientItems,
                "k=" + std::to_string(k) + " exceeds the " +
                    std::to_string(items.rows()) + " available items");
  }
  const Matrix sims = CosineSimilarityMatrix(items, group_queries);

  std::vector<std::size_t> quota(p, k / p);
  for (std::size_t g = 0; g < k % p; ++g) ++quota[g];

  std::vector<std::vector<std::size_t>> rankings(p);
  for (std::size_t g = 0; g < p; ++g) rankings[g] = RankRow(sims, g);

  std::vector<bool> claimed(items.rows(), false);
  std::vector<std::size_t> cursor(p, 0), taken(p, 0);
  RetrievalResult result;
  result.query_index = 0;
  while (result.ranked_indices.size() < k) {
    for (std::size_t g = 0; g < p; ++g) {
      if (taken[g] == quota[g]) continue;
      auto& pos = cursor[g];
      while (pos < rankings[g].size() && claimed[rankings[g][pos]]) ++pos;
      if (pos == rankings[g].size()) {
        throw Error(ErrorCode::kInsufficientItems,
                    "group query " + std::to_string(g) +
                        " ran out of distinct items");
      }
      const std::size_t item = rankings[g][pos++];
      claimed[item] = true;
      ++taken[g];
      result.ranked_indices.push_back(item);
      result.similarities.push_back(sims(g, item));
    }
  }
  return result;
}

std::vector<int> AssignNearestPrompt(const EmbeddingMatrix& items,
                                     const EmbeddingMatrix& attribute_prompts) {
  const std::size_t p = attribute_prompts.rows();
  if (p < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least 2 attribute prompts");
  }
  const Matrix sims = CosineSimilarityMatrix(items, attribute_prompts);
  std::vector<int> labels(items.rows());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int best = 0;
    for (std::size_t g = 1; g < p; ++g) {
      if (sims(g, i) > sims(best, i)) best = static_cast<int>(g);
    }
    labels[i] = best;
  }
  return labels;
}

GroupLabels InferProtectedAttribute(const EmbeddingMatrix& items,
                                    const EmbeddingMatrix& attribute_prompts) {
  return GroupLabels(AssignNearestPrompt(items, attribute_prompts),
                     static_cast<int>(attribute_prompts.rows()));
}

}  // namespace tasks
}  // namespace fairlens
