#ifndef FAIRLENS_STATS_HPP_
#define FAIRLENS_STATS_HPP_

#include <vector>

#include "fairlens/core.hpp"

namespace fairlens {
namespace stats {

// One list of observations per group.
using GroupSamples = std::vector<std::vector<double>>;

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
};

// Upper tail of the chi-square distribution, Q(df/2, x/2).
double ChiSquareSf(double x, int df);

// Alexander-Govern test for equal means under unequal group variances.
//
// Groups are pooled into a variance-weighted grand mean, each group mean is
// turned into a one-sample t statistic against it, and every t is mapped to
// an approximately standard normal z by Hill's normalising transformation.
// The statistic sum(z^2) is referred to chi-square with p - 1 degrees of
// freedom.
//
// Throws InsufficientSamples when a group has fewer than 2 observations and
// DegenerateVariance when a group has zero sample variance.
TestResult AlexanderGovern(const GroupSamples& samples);

struct QuerySimilarityTest {
  TestResult test;
  std::vector<double> group_means;
  // |mean_i - mean_j| * 100, p x p, symmetric with a zero diagonal.
  Eigen::MatrixXd scaled_mean_gap;
};

// Splits every row of a q x n similarity matrix by group and runs the test.
std::vector<QuerySimilarityTest> PerQuerySimilarityTests(
    const Matrix& similarities, const GroupLabels& groups);

}  // namespace stats
}  // namespace fairlens

#endif  // FAIRLENS_STATS_HPP_
