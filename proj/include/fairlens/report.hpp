#ifndef FAIRLENS_REPORT_HPP_
#define FAIRLENS_REPORT_HPP_

// Building blocks of audit reports: JSON renderings of metric and test
// results, distribution summaries and the task taxonomy keys.

#include <string>
#include <vector>

#include "fairlens/core.hpp"
#include "fairlens/metrics.hpp"
#include "fairlens/stats.hpp"
#include "fairlens/tasks.hpp"
#include "json.hpp"

namespace fairlens {
namespace report {

inline constexpr int kSchemaVersion = 1;

// Finite numbers pass through; infinities render as "inf" / "-inf".
nlohmann::json Number(double value);

// Category key of a human-centric task, e.g.
// "human-centric/subjective/independence".
std::string CategoryKey(const tasks::TaxonomyTags& tags);
// The four human-centric cells, in a fixed order.
const std::vector<std::string>& CategoryKeys();

nlohmann::json MetricJson(const metrics::MetricResult& result,
                          const GroupLabels& groups);
nlohmann::json TestJson(const stats::TestResult& result);

// Five-number summary plus mean and sample standard deviation (n - 1).
// Quartiles interpolate linearly between order statistics.
struct DistributionSummary {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
};

DistributionSummary Summarize(std::vector<double> values);
nlohmann::json SummaryJson(const DistributionSummary& summary);

// Skeleton shared by every command: schema version, tool identity, command
// name and the configuration echo.
nlohmann::json NewReport(const std::string& command,
                         const nlohmann::json& config,
                         const std::string& config_text);

}  // namespace report
}  // namespace fairlens

#endif  // FAIRLENS_REPORT_HPP_
