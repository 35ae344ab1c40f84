#include "fairlens/stats.hpp"

#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace fairlens {
namespace stats {

double ChiSquareSf(double x, int df) {
  if (df < 1) {
    throw Error(ErrorCode::kDomainError, "degrees of freedom must be positive");
  }
  if (!(x >= 0.0)) {
    throw Error(ErrorCode::kDomainError, "chi-square argument must be >= 0");
  }
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

TestResult AlexanderGovern(const GroupSamples& samples) {
  const int p = static_cast<int>(samples.size());
  if (p < 2) {
    throw Error(ErrorCode::kInsufficientSamples, "need at least 2 groups");
  }
  std::vector<double> means(p), se(p), weights(p);
  double weight_sum = 0.0;
  for (int g = 0; g < p; ++g) {
    const auto& obs = samples[g];
    if (obs.size() < 2) {
      throw Error(ErrorCode::kInsufficientSamples,
                  "group " + std::to_string(g) + " has fewer than 2 samples");
    }
    const double n = static_cast<double>(obs.size());
    double sum = 0.0;
    for (double v : obs) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : obs) ss += (v - mean) * (v - mean);
    const double var = ss / (n - 1.0);
    if (!(var > 0.0)) {
      throw Error(ErrorCode::kDegenerateVariance,
                  "group " + std::to_string(g) + " has zero variance");
    }
    means[g] = mean;
    se[g] = std::sqrt(var / n);
    weights[g] = 1.0 / (se[g] * se[g]);
    weight_sum += weights[g];
  }

  double grand_mean = 0.0;
  for (int g = 0; g < p; ++g) grand_mean += weights[g] / weight_sum * means[g];

  double statistic = 0.0;
  for (int g = 0; g < p; ++g) {
    const double t = (means[g] - grand_mean) / se[g];
    const double v = static_cast<double>(samples[g].size()) - 1.0;
    const double a = v - 0.5;
    const double b = 48.0 * a * a;
    const double c = std::sqrt(a * std::log1p(t * t / v));
    const double c2 = c * c;
    const double c3 = c2 * c;
    const double c4 = c2 * c2;
    const double c5 = c4 * c;
    const double c7 = c5 * c2;
    const double z = c + (c3 + 3.0 * c) / b -
                     (4.0 * c7 + 33.0 * c5 + 240.0 * c3 + 855.0 * c) /
                         (10.0 * b * b + 8.0 * b * c4 + 1000.0 * b);
    statistic += z * z;
  }

  TestResult result;
  result.statistic = statistic;
  result.degrees_of_freedom = p - 1;
  result.p_value = ChiSquareSf(statistic, p - 1);
  return result;
}

std::vector<QuerySimilarityTest> PerQuerySimilarityTests(
    const Matrix& similarities, const GroupLabels& groups) {
  if (static_cast<std::size_t>(similarities.cols()) != groups.size()) {
    throw Error(ErrorCode::kShapeError,
                "similarity columns do not match the label count");
  }
  const int p = groups.group_count();
  std::vector<QuerySimilarityTest> out;
  out.reserve(similarities.rows());
  for (Eigen::Index q = 0; q < similarities.rows(); ++q) {
    GroupSamples samples(p);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      samples[groups[i]].push_back(similarities(q, i));
    }
    QuerySimilarityTest entry;
    entry.test = AlexanderGovern(samples);
    entry.group_means.resize(p);
    for (int g = 0; g < p; ++g) {
      double sum = 0.0;
      for (double v : samples[g]) sum += v;
      entry.group_means[g] = sum / static_cast<double>(samples[g].size());
    }
    entry.scaled_mean_gap = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        entry.scaled_mean_gap(i, j) =
            std::abs(entry.group_means[i] - entry.group_means[j]) * 100.0;
      }
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace stats
}  // namespace fairlens
