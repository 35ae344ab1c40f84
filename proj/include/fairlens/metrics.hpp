#ifndef FAIRLENS_METRICS_HPP_
#define FAIRLENS_METRICS_HPP_

// Group fairness metrics over classification outputs and retrieval
// selections, plus the standard performance metrics reported next to them.
//
// Every disparity metric returns the maximum over group pairs together with
// the first pair (in lexicographic (i, j), i < j order) that attains it and
// the per-group quantity the pairs were compared on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fairlens/core.hpp"

namespace fairlens {
namespace metrics {

struct MetricResult {
  double value = 0.0;
  // For Skew@k both entries name the single group attaining the max.
  std::pair<int, int> arg_pair{0, 0};
  std::vector<double> per_group_rates;
};

// Demographic disparity of a binary classifier: max pairwise gap in the
// fraction of each group predicted +1.
MetricResult DdpClassification(const BinaryLabels& predictions,
                               const GroupLabels& groups);

// Demographic disparity of a top-k selection. Per group the quantity is
// |K_i|/|K| - (|Z_i| - |K_i|)/(|Z| - |K|).
MetricResult DdpRetrieval(const GroupPartition& partition);

// Disparity in true positive rates, over ground-truth positives only.
MetricResult Dtpr(const BinaryLabels& predictions, const BinaryLabels& truth,
                  const GroupLabels& groups);

// max_i |ln(rf_i / df_i)| with rf_i = |K_i|/|K|. An empty `desired` means
// df_i = 1/p. Returns +infinity when some retrieved fraction is zero.
MetricResult SkewAtK(const GroupPartition& partition,
                     std::span<const double> desired = {});

// max_{i,j} ||K_i+| - |K_j+|| / |K+| over retrieved ground-truth positives.
MetricResult DdpRep(std::span<const std::int64_t> positives_per_group,
                    std::int64_t total_positives);

double Accuracy(std::span<const int> predictions, std::span<const int> truth);
double Accuracy(const BinaryLabels& predictions, const BinaryLabels& truth);

double PrecisionAtK(std::span<const std::size_t> ranked,
                    const std::unordered_set<std::size_t>& relevant,
                    std::size_t k);

// Fraction of queries whose target index appears in the first k entries of
// that query's ranking.
double RecallAtK(const std::vector<std::vector<std::size_t>>& per_query_ranked,
                 std::span<const std::size_t> targets, std::size_t k);

}  // namespace metrics
}  // namespace fairlens

#endif  // FAIRLENS_METRICS_HPP_
