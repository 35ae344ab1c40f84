#include "fairlens/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairlens {
namespace report {
namespace {

double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

nlohmann::json Number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  return value;
}

std::string CategoryKey(const tasks::TaxonomyTags& tags) {
  std::string key = tags.human_centric ? "human-centric" : "non-human-centric";
  key += tags.subjective ? "/subjective" : "/objective";
  key += tags.mode == tasks::FairnessMode::kIndependence ? "/independence"
                                                         : "/diversity";
  return key;
}

const std::vector<std::string>& CategoryKeys() {
  static const std::vector<std::string> keys = {
      "human-centric/objective/independence",
      "human-centric/objective/diversity",
      "human-centric/subjective/independence",
      "human-centric/subjective/diversity",
  };
  return keys;
}

nlohmann::json MetricJson(const metrics::MetricResult& result,
                          const GroupLabels& groups) {
  nlohmann::json rates = nlohmann::json::array();
  for (double r : result.per_group_rates) rates.push_back(Number(r));
  return {
      {"value", Number(result.value)},
      {"pair",
       {groups.GroupName(result.arg_pair.first),
        groups.GroupName(result.arg_pair.second)}},
      {"per_group", rates},
  };
}

nlohmann::json TestJson(const stats::TestResult& result) {
  return {
      {"statistic", Number(result.statistic)},
      {"p_value", Number(result.p_value)},
      {"df", result.degrees_of_freedom},
  };
}

DistributionSummary Summarize(std::vector<double> values) {
  DistributionSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = Quantile(values, 0.25);
  s.median = Quantile(values, 0.5);
  s.q3 = Quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

nlohmann::json SummaryJson(const DistributionSummary& s) {
  return {
      {"count", s.count},
      {"quartiles",
       {Number(s.min), Number(s.q1), Number(s.median), Number(s.q3),
        Number(s.max)}},
      {"mean", Number(s.mean)},
      {"std_dev_sample", Number(s.std_dev)},
  };
}

nlohmann::json NewReport(const std::string& command,
                         const nlohmann::json& config,
                         const std::string& config_text) {
  nlohmann::json report;
  report["schema_version"] = kSchemaVersion;
  report["tool"] = {{"name", "fairlens"}, {"version", FAIRLENS_VERSION}};
  report["command"] = command;
  report["config"] = config;
  if (!config_text.empty()) report["config_text"] = config_text;
  return report;
}

}  // namespace report
}  // namespace fairlens
