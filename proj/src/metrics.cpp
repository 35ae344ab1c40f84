#include "fairlens/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

namespace fairlens {
namespace metrics {
namespace {

// First lexicographic pair (i < j) attaining the largest |v_i - v_j|.
template <typename T>
std::pair<int, int> ArgMaxPair(const std::vector<T>& values) {
  std::pair<int, int> best{0, 1};
  T best_gap = 0;
  bool first = true;
  const int p = static_cast<int>(values.size());
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const T gap = values[i] > values[j] ? values[i] - values[j]
                                          : values[j] - values[i];
      if (first || gap > best_gap) {
        best_gap = gap;
        best = {i, j};
        first = false;
      }
    }
  }
  return best;
}

void CheckSameLength(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kShapeError,
                std::string(what) + ": length mismatch (" + std::to_string(a) +
                    " vs " + std::to_string(b) + ")");
  }
}

MetricResult FromRates(std::vector<double> rates) {
  MetricResult result;
  result.arg_pair = ArgMaxPair(rates);
  result.value =
      std::abs(rates[result.arg_pair.first] - rates[result.arg_pair.second]);
  result.per_group_rates = std::move(rates);
  return result;
}

}  // namespace

MetricResult DdpClassification(const BinaryLabels& predictions,
                               const GroupLabels& groups) {
  CheckSameLength(predictions.size(), groups.size(), "DDP");
  const int p = groups.group_count();
  std::vector<std::int64_t> positive(p, 0), total(p, 0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ++total[groups[i]];
    if (predictions.IsPositive(i)) ++positive[groups[i]];
  }
  std::vector<double> rates(p);
  for (int g = 0; g < p; ++g) {
    if (total[g] == 0) {
      throw Error(ErrorCode::kEmptyGroup,
                  "group " + std::to_string(g) + " has no items");
    }
    rates[g] = static_cast<double>(positive[g]) / static_cast<double>(total[g]);
  }
  return FromRates(std::move(rates));
}

MetricResult DdpRetrieval(const GroupPartition& partition) {
  const std::int64_t k = partition.total_selected;
  const std::int64_t z = partition.total_population;
  if (k == 0) throw Error(ErrorCode::kEmptySelection, "no items selected");
  if (z <= k) {
    throw Error(ErrorCode::kDegenerateDenominator,
                "population size must exceed selection size");
  }
  const int p = partition.group_count();
  // Numerators over the common denominator |K| (|Z| - |K|), kept integral so
  // equal rates compare exactly.
  std::vector<std::int64_t> numer(p);
  for (int g = 0; g < p; ++g) {
    const std::int64_t kg = partition.selected_per_group[g];
    const std::int64_t zg = partition.population_per_group[g];
    if (zg <= 0) {
      throw Error(ErrorCode::kEmptyGroup,
                  "group " + std::to_string(g) + " has no population");
    }
    numer[g] = kg * (z - k) - (zg - kg) * k;
  }
  const double denom = static_cast<double>(k) * static_cast<double>(z - k);

  MetricResult result;
  result.arg_pair = ArgMaxPair(numer);
  result.value = static_cast<double>(std::llabs(numer[result.arg_pair.first] -
                                                numer[result.arg_pair.second])) /
                 denom;
  result.per_group_rates.resize(p);
  for (int g = 0; g < p; ++g) {
    result.per_group_rates[g] = static_cast<double>(numer[g]) / denom;
  }
  return result;
}

MetricResult Dtpr(const BinaryLabels& predictions, const BinaryLabels& truth,
                  const GroupLabels& groups) {
  CheckSameLength(predictions.size(), groups.size(), "DTPR");
  CheckSameLength(truth.size(), groups.size(), "DTPR");
  const int p = groups.group_count();
  std::vector<std::int64_t> hits(p, 0), positives(p, 0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!truth.IsPositive(i)) continue;
    ++positives[groups[i]];
    if (predictions.IsPositive(i)) ++hits[groups[i]];
  }
  std::vector<double> rates(p);
  for (int g = 0; g < p; ++g) {
    if (positives[g] == 0) {
      throw Error(ErrorCode::kEmptyPositiveSet,
                  "group " + std::to_string(g) +
                      " has no ground-truth positive items");
    }
    rates[g] = static_cast<double>(hits[g]) / static_cast<double>(positives[g]);
  }
  return FromRates(std::move(rates));
}

MetricResult SkewAtK(const GroupPartition& partition,
                     std::span<const double> desired) {
  const std::int64_t k = partition.total_selected;
  if (k == 0) throw Error(ErrorCode::kEmptySelection, "no items selected");
  const int p = partition.group_count();
  if (!desired.empty()) {
    if (desired.size() != static_cast<std::size_t>(p)) {
      throw Error(ErrorCode::kShapeError,
                  "desired fractions must have one entry per group");
    }
    double sum = 0.0;
    for (double df : desired) {
      if (!(df > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "desired fractions must be strictly positive");
      }
      sum += df;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument,
                  "desired fractions must sum to 1");
    }
  }

  MetricResult result;
  result.per_group_rates.resize(p);
  int arg = 0;
  double best = -1.0;
  for (int g = 0; g < p; ++g) {
    const std::int64_t kg = partition.selected_per_group[g];
    result.per_group_rates[g] = static_cast<double>(kg) / static_cast<double>(k);
    double skew;
    if (kg == 0) {
      skew = std::numeric_limits<double>::infinity();
    } else if (desired.empty()) {
      // rf / (1/p) = |K_i| p / |K|, exact when the counts are balanced.
      skew = std::abs(std::log(static_cast<double>(kg * p) /
                               static_cast<double>(k)));
    } else {
      skew = std::abs(std::log(result.per_group_rates[g] / desired[g]));
    }
    if (skew > best) {
      best = skew;
      arg = g;
    }
  }
  result.value = best;
  result.arg_pair = {arg, arg};
  return result;
}

MetricResult DdpRep(std::span<const std::int64_t> positives_per_group,
                    std::int64_t total_positives) {
  if (total_positives <= 0) {
    throw Error(ErrorCode::kEmptySelection, "no retrieved positives");
  }
  if (positives_per_group.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 groups");
  }
  const std::int64_t sum = std::accumulate(positives_per_group.begin(),
                                           positives_per_group.end(),
                                           std::int64_t{0});
  if (sum != total_positives) {
    throw Error(ErrorCode::kInvalidArgument,
                "per-group positives do not sum to the total");
  }
  std::vector<std::int64_t> counts(positives_per_group.begin(),
                                   positives_per_group.end());
  MetricResult result;
  result.arg_pair = ArgMaxPair(counts);
  result.value = static_cast<double>(std::llabs(counts[result.arg_pair.first] -
                                                counts[result.arg_pair.second])) /
                 static_cast<double>(total_positives);
  result.per_group_rates.reserve(counts.size());
  for (std::int64_t c : counts) {
    result.per_group_rates.push_back(static_cast<double>(c) /
                                     static_cast<double>(total_positives));
  }
  return result;
}

double Accuracy(std::span<const int> predictions, std::span<const int> truth) {
  CheckSameLength(predictions.size(), truth.size(), "accuracy");
  if (predictions.empty()) {
    throw Error(ErrorCode::kShapeError, "accuracy of an empty vector");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double Accuracy(const BinaryLabels& predictions, const BinaryLabels& truth) {
  return Accuracy(predictions.values(), truth.values());
}

double PrecisionAtK(std::span<const std::size_t> ranked,
                    const std::unordered_set<std::size_t>& relevant,
                    std::size_t k) {
  if (k == 0 || k > ranked.size()) {
    throw Error(ErrorCode::kInvalidK,
                "k=" + std::to_string(k) + " outside [1, " +
                    std::to_string(ranked.size()) + "]");
  }
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r) {
    if (relevant.count(ranked[r]) != 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double RecallAtK(const std::vector<std::vector<std::size_t>>& per_query_ranked,
                 std::span<const std::size_t> targets, std::size_t k) {
  if (per_query_ranked.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no queries");
  }
  CheckSameLength(per_query_ranked.size(), targets.size(), "recall@k");
  if (k == 0) throw Error(ErrorCode::kInvalidK, "k must be positive");
  std::size_t found = 0;
  for (std::size_t q = 0; q < per_query_ranked.size(); ++q) {
    const auto& ranked = per_query_ranked[q];
    const std::size_t depth = std::min(k, ranked.size());
    for (std::size_t r = 0; r < depth; ++r) {
      if (ranked[r] == targets[q]) {
        ++found;
        break;
      }
    }
  }
  return static_cast<double>(found) /
         static_cast<double>(per_query_ranked.size());
}

}  // namespace metrics
}  // namespace fairlens
