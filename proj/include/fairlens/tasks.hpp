#ifndef FAIRLENS_TASKS_HPP_
#define FAIRLENS_TASKS_HPP_

// Downstream task pipelines on precomputed embeddings: zero-shot binary
// classification, top-k retrieval, balanced per-group retrieval and
// protected-attribute inference. All ties resolve to the lowest index.

#include <cstddef>
#include <string>
#include <vector>

#include "fairlens/core.hpp"

namespace fairlens {
namespace tasks {

enum class FairnessMode { kIndependence, kDiversity };

struct TaxonomyTags {
  bool human_centric = true;
  bool subjective = true;
  FairnessMode mode = FairnessMode::kIndependence;
};

struct QuerySet {
  EmbeddingMatrix embeddings;
  std::vector<std::string> names;
  std::vector<TaxonomyTags> tags;
};

struct RetrievalResult {
  std::size_t query_index = 0;
  std::vector<std::size_t> ranked_indices;
  std::vector<double> similarities;
};

// q x n matrix with entry (j, i) = cos(item i, query j).
Matrix CosineSimilarityMatrix(const EmbeddingMatrix& items,
                              const EmbeddingMatrix& queries);

// +1 where cos(x, class_a) >= cos(x, class_b), else -1.
BinaryLabels ZeroShotClassify(const EmbeddingMatrix& items,
                              const RowVector& class_a,
                              const RowVector& class_b);

// Top k items per query row, by decreasing similarity.
std::vector<RetrievalResult> TopK(const Matrix& similarities, std::size_t k);

// Retrieves k items using one query per group: floor(k/p) per group plus one
// extra for each of the first k mod p groups. Items already claimed by an
// earlier pick are skipped. The output interleaves groups round-robin by
// rank, and `similarities` holds each item's score under the query that
// picked it.
RetrievalResult BalancedRetrieval(const EmbeddingMatrix& items,
                                  const EmbeddingMatrix& group_queries,
                                  std::size_t k);

// Index of the most cosine-similar attribute prompt for every item. Groups
// may end up empty here.
std::vector<int> AssignNearestPrompt(const EmbeddingMatrix& items,
                                     const EmbeddingMatrix& attribute_prompts);

// AssignNearestPrompt wrapped as GroupLabels; throws EmptyGroup when some
// prompt attracts no item.
GroupLabels InferProtectedAttribute(const EmbeddingMatrix& items,
                                    const EmbeddingMatrix& attribute_prompts);

}  // namespace tasks
}  // namespace fairlens

#endif  // FAIRLENS_TASKS_HPP_
