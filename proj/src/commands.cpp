#include "fairlens/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "fairlens/core.hpp"
#include "fairlens/io.hpp"
#include "fairlens/metrics.hpp"
#include "fairlens/mitigation.hpp"
#include "fairlens/probe.hpp"
#include "fairlens/report.hpp"
#include "fairlens/stats.hpp"
#include "fairlens/synth.hpp"
#include "fairlens/tasks.hpp"

namespace fairlens {
namespace cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration access

[[noreturn]] void ConfigFail(const std::string& context,
                             const std::string& message) {
  throw Error(ErrorCode::kConfigError,
              context.empty() ? message : context + ": " + message);
}

const json& Require(const json& obj, const std::string& key,
                    const std::string& context = {}) {
  if (!obj.is_object()) ConfigFail(context, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) ConfigFail(context, "missing key '" + key + "'");
  return *it;
}

const json* Find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string AsString(const json& v, const std::string& key,
                     const std::string& context) {
  if (!v.is_string()) ConfigFail(context, "'" + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t AsCount(const json& v, const std::string& key,
                    const std::string& context) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    ConfigFail(context, "'" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double AsNumber(const json& v, const std::string& key,
                const std::string& context) {
  if (!v.is_number()) ConfigFail(context, "'" + key + "' must be a number");
  return v.get<double>();
}

bool AsBool(const json& v, const std::string& key,
            const std::string& context) {
  if (!v.is_boolean()) ConfigFail(context, "'" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string GetString(const json& obj, const std::string& key,
                      const std::string& context = {}) {
  return AsString(Require(obj, key, context), key, context);
}

std::string GetString(const json& obj, const std::string& key,
                      const std::string& fallback, const std::string& context) {
  const json* v = Find(obj, key);
  return v ? AsString(*v, key, context) : fallback;
}

bool GetBool(const json& obj, const std::string& key, bool fallback,
             const std::string& context) {
  const json* v = Find(obj, key);
  return v ? AsBool(*v, key, context) : fallback;
}

std::vector<std::size_t> GetCounts(const json& obj, const std::string& key,
                                   const std::string& context) {
  const json& v = Require(obj, key, context);
  if (!v.is_array()) ConfigFail(context, "'" + key + "' must be a list");
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(AsCount(e, key, context));
  return out;
}

std::vector<std::string> GetStrings(const json& obj, const std::string& key,
                                    const std::string& context) {
  const json& v = Require(obj, key, context);
  if (!v.is_array()) ConfigFail(context, "'" + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(AsString(e, key, context));
  return out;
}

fs::path Resolve(const RunOptions& options, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : options.base_dir / p;
}

fs::path GetPath(const json& obj, const std::string& key,
                 const RunOptions& options, const std::string& context = {}) {
  return Resolve(options, GetString(obj, key, context));
}

const json& TaskList(const json& config) {
  const json& list = Require(config, "tasks");
  if (!list.is_array()) ConfigFail("", "'tasks' must be a list");
  if (list.empty()) ConfigFail("", "task list is empty");
  return list;
}

// Re-raises an error with the name of the task that produced it.
template <typename F>
auto WithContext(const std::string& context, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), context + ": " + e.detail());
  }
}

// ---------------------------------------------------------------------------
// Concurrency

// Runs fn(0..count-1) on a pool; results keep index order. The error of the
// lowest failing index is rethrown.
template <typename T>
std::vector<T> ParallelMap(std::size_t count, int threads,
                           const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// Inputs

struct Inputs {
  EmbeddingMatrix items;
  io::LabelTable table;
  std::vector<std::size_t> rows;  // table rows under evaluation
  GroupLabels groups;             // protected attribute on those rows
  std::string eval_split;
};

std::vector<std::size_t> SplitRows(const io::LabelTable& table,
                                   const std::string& which) {
  std::vector<std::size_t> rows;
  if (which == "all") {
    rows.resize(table.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  if (which != "train" && which != "test") {
    ConfigFail("", "eval_split must be all, train or test");
  }
  const Split wanted = which == "train" ? Split::kTrain : Split::kTest;
  const auto splits = table.Splits("split");
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == wanted) rows.push_back(i);
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyInput, "split '" + which + "' is empty");
  }
  return rows;
}

void CheckRowCount(const EmbeddingMatrix& items, const io::LabelTable& table) {
  if (items.rows() != table.rows()) {
    throw Error(ErrorCode::kShapeError,
                std::to_string(items.rows()) + " embeddings but " +
                    std::to_string(table.rows()) + " label rows");
  }
}

Inputs LoadInputs(const json& config, const RunOptions& options) {
  EmbeddingMatrix all = io::ReadEmbeddings(GetPath(config, "embeddings", options));
  io::LabelTable table = io::LabelTable::Read(GetPath(config, "labels", options));
  CheckRowCount(all, table);
  const std::string split = GetString(
      config, "eval_split", table.HasColumn("split") ? "test" : "all", "");
  std::vector<std::size_t> rows = SplitRows(table, split);
  GroupLabels groups =
      table.Groups(GetString(config, "protected")).Subset(rows);
  EmbeddingMatrix items = all.SelectRows(rows);
  return {std::move(items), std::move(table), std::move(rows),
          std::move(groups), split};
}

std::optional<mitigation::FittedTransform> LoadTransform(
    const json& config, const RunOptions& options, std::size_t dims) {
  const json* v = Find(config, "transform");
  if (!v) return std::nullopt;
  auto transform = io::ReadTransform(Resolve(options, AsString(*v, "transform", "")));
  if (transform.input_dims() != dims) {
    throw Error(ErrorCode::kShapeError,
                "transform expects " + std::to_string(transform.input_dims()) +
                    " dims, embeddings have " + std::to_string(dims));
  }
  return transform;
}

json TransformJson(const mitigation::FittedTransform& t) {
  return {{"method", t.MethodName()},
          {"attribute_source", mitigation::AttributeSourceName(t.source)},
          {"input_dims", t.input_dims()},
          {"output_dims", t.output_dims()}};
}

// Item and query embeddings under one representation ("raw" or
// "transformed").
struct Variant {
  std::string name;
  EmbeddingMatrix items;
  EmbeddingMatrix queries;
};

std::vector<Variant> MakeVariants(
    const EmbeddingMatrix& items, const EmbeddingMatrix& queries,
    const std::optional<mitigation::FittedTransform>& transform) {
  if (queries.dims() != items.dims()) {
    throw Error(ErrorCode::kShapeError,
                "query embeddings have " + std::to_string(queries.dims()) +
                    " dims, items have " + std::to_string(items.dims()));
  }
  std::vector<Variant> out;
  out.push_back({"raw", items, queries});
  if (transform) {
    out.push_back(
        {"transformed", transform->Apply(items), transform->Apply(queries)});
  }
  return out;
}

json MatrixJson(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(report::Number(m(i, j)));
    out.push_back(row);
  }
  return out;
}

json LabelMapping(const GroupLabels& groups) { return groups.names(); }

tasks::TaxonomyTags ParseTags(const json& task, tasks::FairnessMode mode,
                              bool default_subjective,
                              const std::string& context) {
  tasks::TaxonomyTags tags;
  tags.human_centric = GetBool(task, "human_centric", true, context);
  tags.subjective = GetBool(task, "subjective", default_subjective, context);
  tags.mode = mode;
  if (!tags.human_centric && tags.subjective) {
    ConfigFail(context, "non-human-centric subjective tasks are not supported");
  }
  return tags;
}

json TagsJson(const tasks::TaxonomyTags& tags) {
  return {{"human_centric", tags.human_centric},
          {"subjective", tags.subjective},
          {"mode", tags.mode == tasks::FairnessMode::kIndependence
                       ? "independence"
                       : "diversity"}};
}

std::size_t QueryIndex(const json& task, const std::string& key,
                       std::size_t query_count, const std::string& context) {
  const std::size_t q = AsCount(Require(task, key, context), key, context);
  if (q >= query_count) {
    ConfigFail(context, "'" + key + "' = " + std::to_string(q) +
                            " exceeds the " + std::to_string(query_count) +
                            " query embeddings");
  }
  return q;
}

std::string TaskName(const json& task, std::size_t index) {
  const std::string context = "task #" + std::to_string(index);
  return GetString(task, "name", context);
}

void RequireUniqueNames(const std::vector<std::string>& names) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) ConfigFail("", "duplicate task name '" + n + "'");
  }
}

// Indices of `names` in ascending name order.
std::vector<std::size_t> NameOrder(const std::vector<std::string>& names) {
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
  return order;
}

// Accumulates metric values per category cell, variant and metric name.
class CategorySummary {
 public:
  explicit CategorySummary(const std::vector<Variant>& variants) {
    for (const auto& key : report::CategoryKeys()) {
      cells_[key].tasks = json::array();
      for (const auto& v : variants) cells_[key].values[v.name];
    }
  }

  void AddTask(const tasks::TaxonomyTags& tags, const std::string& name) {
    if (tags.human_centric) cells_.at(report::CategoryKey(tags)).tasks.push_back(name);
  }
  void Add(const tasks::TaxonomyTags& tags, const std::string& variant,
           const std::string& metric, double value) {
    if (tags.human_centric) {
      cells_.at(report::CategoryKey(tags)).values[variant][metric].push_back(value);
    }
  }

  json ToJson() const {
    json out = json::object();
    for (const auto& key : report::CategoryKeys()) {
      const Cell& cell = cells_.at(key);
      json entry = {{"tasks", cell.tasks}};
      for (const auto& [variant, metrics] : cell.values) {
        json block = json::object();
        for (const auto& [metric, values] : metrics) {
          block[metric] = report::SummaryJson(report::Summarize(values));
        }
        entry[variant] = block;
      }
      out[key] = entry;
    }
    return out;
  }

 private:
  struct Cell {
    json tasks;
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
  };
  std::map<std::string, Cell> cells_;
};

// ---------------------------------------------------------------------------
// classify-audit

struct ClassifyTask {
  std::string name;
  std::size_t class_a = 0;
  std::size_t class_b = 0;
  std::optional<std::string> ground_truth;
  tasks::TaxonomyTags tags;
};

struct ClassifyOutcome {
  json record;
  // variant -> (metric -> value) for the category summary
  std::map<std::string, std::map<std::string, double>> summary;
};

ClassifyOutcome RunClassifyTask(const ClassifyTask& task,
                                const std::vector<Variant>& variants,
                                const Inputs& in) {
  std::optional<BinaryLabels> truth;
  if (task.ground_truth) {
    truth = in.table.Binary(*task.ground_truth).Subset(in.rows);
  }
  ClassifyOutcome out;
  out.record = {{"name", task.name},
                {"tags", TagsJson(task.tags)},
                {"category", report::CategoryKey(task.tags)},
                {"class_queries", {task.class_a, task.class_b}}};
  if (task.ground_truth) out.record["ground_truth"] = *task.ground_truth;
  json results = json::object();
  for (const auto& v : variants) {
    const BinaryLabels pred = tasks::ZeroShotClassify(
        v.items, v.queries.row(task.class_a), v.queries.row(task.class_b));
    const auto ddp = metrics::DdpClassification(pred, in.groups);
    std::size_t positives = 0;
    for (int y : pred.values()) positives += y > 0;
    json block = {
        {"ddp", report::MetricJson(ddp, in.groups)},
        {"positive_rate",
         static_cast<double>(positives) / static_cast<double>(pred.size())}};
    out.summary[v.name]["ddp"] = ddp.value;
    if (truth) {
      try {
        const auto dtpr = metrics::Dtpr(pred, *truth, in.groups);
        block["dtpr"] = report::MetricJson(dtpr, in.groups);
        out.summary[v.name]["dtpr"] = dtpr.value;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptyPositiveSet) throw;
        block["dtpr"] = {{"unavailable", e.what()}};
      }
      const double acc = metrics::Accuracy(pred, *truth);
      block["accuracy"] = acc;
      out.summary[v.name]["accuracy"] = acc;
    }
    results[v.name] = block;
  }
  out.record["results"] = results;
  return out;
}

// ---------------------------------------------------------------------------
// retrieve-audit

struct RetrieveTask {
  std::string name;
  std::size_t query = 0;
  tasks::TaxonomyTags tags;
  std::optional<std::string> relevance;
  std::vector<std::size_t> balanced_queries;
  std::optional<std::size_t> target;  // table row
};

struct RetrieveOutcome {
  json record;
  std::map<std::string, std::map<std::string, double>> summary;
  std::map<std::string, std::vector<std::size_t>> ranking;  // at max k
};

json SelectionMetrics(const std::vector<std::size_t>& ranked, std::size_t k,
                      const RetrieveTask& task, const Inputs& in,
                      const std::unordered_set<std::size_t>* relevant,
                      std::map<std::string, double>* summary,
                      const std::string& prefix) {
  const GroupPartition partition = PartitionByGroup(ranked, in.groups);
  json block = {{"selected_per_group", partition.selected_per_group}};
  const std::string at = "@" + std::to_string(k);
  if (task.tags.mode == tasks::FairnessMode::kIndependence) {
    const auto ddp = metrics::DdpRetrieval(partition);
    block["ddp"] = report::MetricJson(ddp, in.groups);
    if (summary) (*summary)[prefix + "ddp" + at] = ddp.value;
    return block;
  }
  const auto skew = metrics::SkewAtK(partition);
  block["skew"] = report::MetricJson(skew, in.groups);
  if (summary) (*summary)[prefix + "skew" + at] = skew.value;
  if (relevant) {
    std::vector<std::int64_t> positives(in.groups.group_count(), 0);
    std::int64_t total = 0;
    for (std::size_t idx : ranked) {
      if (relevant->count(idx)) {
        ++positives[in.groups[idx]];
        ++total;
      }
    }
    if (total > 0) {
      const auto rep = metrics::DdpRep(positives, total);
      block["ddp_rep"] = report::MetricJson(rep, in.groups);
      if (summary) (*summary)[prefix + "ddp_rep" + at] = rep.value;
    } else {
      block["ddp_rep"] = {{"unavailable", "no relevant item retrieved"}};
    }
    const double precision = metrics::PrecisionAtK(ranked, *relevant, k);
    block["precision"] = precision;
    if (summary) (*summary)[prefix + "precision" + at] = precision;
  }
  return block;
}

RetrieveOutcome RunRetrieveTask(const RetrieveTask& task,
                                const std::vector<Variant>& variants,
                                const std::vector<Matrix>& similarities,
                                const std::vector<std::size_t>& ks,
                                const Inputs& in) {
  std::optional<std::unordered_set<std::size_t>> relevant;
  if (task.relevance) {
    const BinaryLabels rel = in.table.Binary(*task.relevance).Subset(in.rows);
    relevant.emplace();
    for (std::size_t i = 0; i < rel.size(); ++i) {
      if (rel.IsPositive(i)) relevant->insert(i);
    }
  }
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());

  RetrieveOutcome out;
  out.record = {{"name", task.name},
                {"tags", TagsJson(task.tags)},
                {"category", report::CategoryKey(task.tags)},
                {"query", task.query}};
  if (task.relevance) out.record["relevance"] = *task.relevance;
  json results = json::object();
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const Variant& v = variants[vi];
    const Matrix sims = similarities[vi].row(task.query);
    auto& summary = out.summary[v.name];
    json block = json::object();
    json per_k = json::object();
    for (std::size_t k : ks) {
      const auto top = tasks::TopK(sims, k).front();
      json entry = SelectionMetrics(top.ranked_indices, k, task, in,
                                    relevant ? &*relevant : nullptr, &summary,
                                    "");
      if (!task.balanced_queries.empty()) {
        Matrix balanced_queries(task.balanced_queries.size(), v.queries.dims());
        for (std::size_t g = 0; g < task.balanced_queries.size(); ++g) {
          balanced_queries.row(g) = v.queries.row(task.balanced_queries[g]);
        }
        const auto balanced = tasks::BalancedRetrieval(
            v.items, EmbeddingMatrix(balanced_queries), k);
        entry["balanced"] =
            SelectionMetrics(balanced.ranked_indices, k, task, in,
                             relevant ? &*relevant : nullptr, &summary,
                             "balanced_");
      }
      per_k[std::to_string(k)] = entry;
    }
    block["k"] = per_k;
    const auto test = stats::PerQuerySimilarityTests(sims, in.groups).front();
    block["similarity_test"] = report::TestJson(test.test);
    block["group_mean_similarity"] = test.group_means;
    block["mean_similarity_gap_x100"] = MatrixJson(test.scaled_mean_gap);
    results[v.name] = block;
    out.ranking[v.name] = tasks::TopK(sims, max_k).front().ranked_indices;
  }
  out.record["results"] = results;
  return out;
}

// ---------------------------------------------------------------------------
// probe

json ProbeOptionsJson(const probe::ProbeOptions& o) {
  return {{"l2", o.l2}, {"max_iter", o.max_iter}, {"tol", o.tol}};
}

probe::ProbeOptions ParseProbeOptions(const json& config) {
  probe::ProbeOptions o;
  if (const json* v = Find(config, "l2")) o.l2 = AsNumber(*v, "l2", "");
  if (const json* v = Find(config, "max_iter")) {
    o.max_iter = static_cast<int>(AsCount(*v, "max_iter", ""));
  }
  if (const json* v = Find(config, "tol")) o.tol = AsNumber(*v, "tol", "");
  if (o.l2 < 0 || o.tol <= 0 || o.max_iter < 1) {
    ConfigFail("", "probe options need l2 >= 0, tol > 0 and max_iter >= 1");
  }
  return o;
}

json ProbeFitJson(const probe::ProbeModel& model, double accuracy) {
  return {{"accuracy", accuracy},
          {"training_loss", model.training_loss},
          {"iterations", model.iterations},
          {"converged", model.converged}};
}

}  // namespace

// ---------------------------------------------------------------------------

json RunClassifyAudit(const json& config, const RunOptions& options) {
  json out = report::NewReport("classify-audit", config, options.config_text);
  const json& task_list = TaskList(config);
  const Inputs in = LoadInputs(config, options);
  const EmbeddingMatrix queries =
      io::ReadEmbeddings(GetPath(config, "queries", options));

  std::vector<ClassifyTask> specs;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < task_list.size(); ++i) {
    const json& t = task_list[i];
    ClassifyTask task;
    task.name = TaskName(t, i);
    const std::string context = "task '" + task.name + "'";
    task.class_a = QueryIndex(t, "class_a", queries.rows(), context);
    task.class_b = QueryIndex(t, "class_b", queries.rows(), context);
    if (const json* g = Find(t, "ground_truth")) {
      task.ground_truth = AsString(*g, "ground_truth", context);
    }
    task.tags = ParseTags(t, tasks::FairnessMode::kIndependence,
                          !task.ground_truth.has_value(), context);
    names.push_back(task.name);
    specs.push_back(std::move(task));
  }
  RequireUniqueNames(names);

  const auto transform = LoadTransform(config, options, in.items.dims());
  const auto variants = MakeVariants(in.items, queries, transform);

  const auto outcomes = ParallelMap<ClassifyOutcome>(
      specs.size(), options.threads, [&](std::size_t i) {
        return WithContext("task '" + specs[i].name + "'", [&] {
          return RunClassifyTask(specs[i], variants, in);
        });
      });

  CategorySummary summary(variants);
  json records = json::array();
  for (std::size_t i : NameOrder(names)) {
    records.push_back(outcomes[i].record);
    summary.AddTask(specs[i].tags, specs[i].name);
    for (const auto& [variant, metrics] : outcomes[i].summary) {
      for (const auto& [metric, value] : metrics) {
        summary.Add(specs[i].tags, variant, metric, value);
      }
    }
  }
  out["eval_split"] = in.eval_split;
  out["items"] = in.items.rows();
  out["label_mapping"] = {{GetString(config, "protected"), LabelMapping(in.groups)}};
  if (transform) out["transform"] = TransformJson(*transform);
  out["tasks"] = records;
  out["category_summary"] = summary.ToJson();
  return out;
}

json RunRetrieveAudit(const json& config, const RunOptions& options) {
  json out = report::NewReport("retrieve-audit", config, options.config_text);
  const json& task_list = TaskList(config);
  const std::vector<std::size_t> ks = GetCounts(config, "k", "");
  if (ks.empty()) ConfigFail("", "'k' must list at least one value");
  for (std::size_t k : ks) {
    if (k == 0) throw Error(ErrorCode::kInvalidK, "k must be positive");
  }
  const Inputs in = LoadInputs(config, options);
  const EmbeddingMatrix queries =
      io::ReadEmbeddings(GetPath(config, "queries", options));

  std::unordered_map<std::size_t, std::size_t> local_index;
  for (std::size_t i = 0; i < in.rows.size(); ++i) local_index[in.rows[i]] = i;

  std::vector<RetrieveTask> specs;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < task_list.size(); ++i) {
    const json& t = task_list[i];
    RetrieveTask task;
    task.name = TaskName(t, i);
    const std::string context = "task '" + task.name + "'";
    task.query = QueryIndex(t, "query", queries.rows(), context);
    const std::string mode = GetString(t, "mode", context);
    if (mode != "independence" && mode != "diversity") {
      ConfigFail(context, "mode must be independence or diversity");
    }
    if (const json* r = Find(t, "relevance")) {
      task.relevance = AsString(*r, "relevance", context);
    }
    task.tags = ParseTags(t,
                          mode == "independence" ? tasks::FairnessMode::kIndependence
                                                 : tasks::FairnessMode::kDiversity,
                          !task.relevance.has_value(), context);
    if (Find(t, "balanced_queries")) {
      for (std::size_t q : GetCounts(t, "balanced_queries", context)) {
        if (q >= queries.rows()) ConfigFail(context, "balanced query out of range");
        task.balanced_queries.push_back(q);
      }
      if (task.balanced_queries.size() !=
          static_cast<std::size_t>(in.groups.group_count())) {
        ConfigFail(context, "balanced_queries needs one query per group");
      }
    }
    if (const json* target = Find(t, "target")) {
      const std::size_t row = AsCount(*target, "target", context);
      const auto it = local_index.find(row);
      if (it == local_index.end()) {
        throw Error(ErrorCode::kDataError,
                    context + ": target item " + std::to_string(row) +
                        " is not in the evaluated split");
      }
      task.target = it->second;
    }
    for (std::size_t k : ks) {
      if (k > in.items.rows()) {
        throw Error(ErrorCode::kInvalidK,
                    context + ": k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(in.items.rows()) + " items");
      }
    }
    names.push_back(task.name);
    specs.push_back(std::move(task));
  }
  RequireUniqueNames(names);

  const auto transform = LoadTransform(config, options, in.items.dims());
  const auto variants = MakeVariants(in.items, queries, transform);
  std::vector<Matrix> similarities;
  for (const auto& v : variants) {
    similarities.push_back(tasks::CosineSimilarityMatrix(v.items, v.queries));
  }

  const auto outcomes = ParallelMap<RetrieveOutcome>(
      specs.size(), options.threads, [&](std::size_t i) {
        return WithContext("task '" + specs[i].name + "'", [&] {
          return RunRetrieveTask(specs[i], variants, similarities, ks, in);
        });
      });

  CategorySummary summary(variants);
  json records = json::array();
  std::map<std::string, std::vector<std::vector<std::size_t>>> rankings;
  std::vector<std::size_t> targets;
  for (std::size_t i : NameOrder(names)) {
    records.push_back(outcomes[i].record);
    summary.AddTask(specs[i].tags, specs[i].name);
    for (const auto& [variant, metrics] : outcomes[i].summary) {
      for (const auto& [metric, value] : metrics) {
        summary.Add(specs[i].tags, variant, metric, value);
      }
    }
    if (specs[i].target) {
      targets.push_back(*specs[i].target);
      for (const auto& [variant, ranking] : outcomes[i].ranking) {
        rankings[variant].push_back(ranking);
      }
    }
  }

  json performance = json::object();
  if (!targets.empty()) {
    for (const auto& v : variants) {
      json recall = json::object();
      for (std::size_t k : ks) {
        recall[std::to_string(k)] =
            metrics::RecallAtK(rankings[v.name], targets, k);
      }
      performance[v.name] = {{"recall", recall}, {"queries", targets.size()}};
    }
  }

  out["eval_split"] = in.eval_split;
  out["items"] = in.items.rows();
  out["k"] = ks;
  out["label_mapping"] = {{GetString(config, "protected"), LabelMapping(in.groups)}};
  if (transform) out["transform"] = TransformJson(*transform);
  out["tasks"] = records;
  out["category_summary"] = summary.ToJson();
  out["performance"] = performance;
  return out;
}

json RunDebiasFit(const json& config, const RunOptions& options) {
  json out = report::NewReport("debias-fit", config, options.config_text);
  const std::string method = GetString(config, "method");
  if (method != "miclip" && method != "fairpca") {
    ConfigFail("", "method must be miclip or fairpca");
  }
  const std::string source_name =
      GetString(config, "attribute_source", "groundTruth", "");
  if (source_name != "groundTruth" && source_name != "inferred") {
    ConfigFail("", "attribute_source must be groundTruth or inferred");
  }
  const auto source = source_name == "inferred"
                          ? mitigation::AttributeSource::kInferred
                          : mitigation::AttributeSource::kGroundTruth;
  if (source == mitigation::AttributeSource::kInferred &&
      !Find(config, "attribute_prompts")) {
    ConfigFail("", "inferred attribute source requires 'attribute_prompts'");
  }
  const fs::path transform_out = GetPath(config, "transform_out", options);
  std::optional<std::size_t> retain;
  std::optional<std::size_t> target_dim;
  int bins = mitigation::kDefaultMiBins;
  if (method == "miclip") {
    retain = AsCount(Require(config, "retain"), "retain", "");
    if (const json* b = Find(config, "bins")) {
      bins = static_cast<int>(AsCount(*b, "bins", ""));
    }
  } else if (const json* t = Find(config, "target_dim")) {
    target_dim = AsCount(*t, "target_dim", "");
  }

  const EmbeddingMatrix all =
      io::ReadEmbeddings(GetPath(config, "embeddings", options));
  const io::LabelTable table =
      io::LabelTable::Read(GetPath(config, "labels", options));
  CheckRowCount(all, table);
  const std::string protected_column = GetString(config, "protected");
  const LabeledDataset data(all, table.Groups(protected_column), std::nullopt,
                            table.Splits("split"));
  data.RequireBothSplits();
  const std::vector<std::size_t> train_rows = data.Indices(Split::kTrain);
  const EmbeddingMatrix train = all.SelectRows(train_rows);

  std::optional<GroupLabels> fit_groups;
  json source_block = {{"attribute_source", source_name}};
  if (source == mitigation::AttributeSource::kInferred) {
    const EmbeddingMatrix prompts = io::ReadEmbeddings(
        GetPath(config, "attribute_prompts", options));
    if (prompts.dims() != train.dims()) {
      throw Error(ErrorCode::kShapeError,
                  "attribute prompts do not match the embedding width");
    }
    fit_groups = tasks::InferProtectedAttribute(train, prompts);
    source_block["inferred_group_sizes"] = fit_groups->GroupSizes();
  } else {
    fit_groups = data.protected_groups().Subset(train_rows);
    source_block["label_mapping"] = {{protected_column, LabelMapping(*fit_groups)}};
  }

  json fit = {{"method", method}, {"train_items", train.rows()},
              {"input_dims", train.dims()}};
  mitigation::FittedTransform transform = [&]() -> mitigation::FittedTransform {
    if (method == "miclip") {
      auto clip = mitigation::FitMiClip(train, *fit_groups, *retain, bins);
      fit["bins"] = bins;
      fit["retained"] = clip.retained_count();
      fit["removed_count"] = clip.RemovedDimensions().size();
      fit["removed_dims"] = clip.RemovedDimensions();
      fit["mi_scores"] = clip.mi_scores();
      return {std::move(clip), source};
    }
    auto pca = mitigation::FitFairPca(train, *fit_groups, target_dim);
    const auto& d = pca.diagnostics();
    fit["target_dim"] = pca.target_dim();
    fit["target_dim_is_default"] = !target_dim.has_value();
    fit["constraint_count"] = d.constraint_count;
    fit["constraint_rank"] = d.constraint_rank;
    fit["dropped_constraints"] = d.dropped_constraints;
    fit["constraint_residual"] = d.constraint_residual;
    fit["orthonormality_residual"] = d.orthonormality_residual;
    fit["retained_variance"] = d.retained_variance;
    fit["warnings"] = d.warnings;
    return {std::move(pca), source};
  }();

  io::WriteTransform(transform, transform_out);
  out["source"] = source_block;
  out["fit"] = fit;
  out["transform"] = TransformJson(transform);
  out["transform_out"] = GetString(config, "transform_out");
  return out;
}

json RunApply(const json& config, const RunOptions& options) {
  json out = report::NewReport("apply", config, options.config_text);
  const auto transform = io::ReadTransform(GetPath(config, "transform", options));
  const json& files = Require(config, "files");
  if (!files.is_array() || files.empty()) {
    ConfigFail("", "'files' must be a non-empty list");
  }
  json written = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string context = "files[" + std::to_string(i) + "]";
    const std::string input = GetString(files[i], "input", context);
    const std::string output = GetString(files[i], "output", context);
    WithContext(context, [&] {
      const EmbeddingMatrix x = io::ReadEmbeddings(Resolve(options, input));
      if (x.dims() != transform.input_dims()) {
        throw Error(ErrorCode::kShapeError,
                    "transform expects " + std::to_string(transform.input_dims()) +
                        " dims, got " + std::to_string(x.dims()));
      }
      io::WriteEmbeddings(transform.Apply(x), Resolve(options, output));
      written.push_back({{"input", input},
                         {"output", output},
                         {"rows", x.rows()},
                         {"input_dims", x.dims()},
                         {"output_dims", transform.output_dims()}});
      return 0;
    });
  }
  out["transform"] = TransformJson(transform);
  out["files"] = written;
  return out;
}

json RunProbe(const json& config, const RunOptions& options) {
  json out = report::NewReport("probe", config, options.config_text);
  const std::vector<std::string> attributes =
      GetStrings(config, "attributes", "");
  if (attributes.empty()) ConfigFail("", "no attributes requested");
  RequireUniqueNames(attributes);
  const probe::ProbeOptions probe_options = ParseProbeOptions(config);

  const EmbeddingMatrix all =
      io::ReadEmbeddings(GetPath(config, "embeddings", options));
  const io::LabelTable table =
      io::LabelTable::Read(GetPath(config, "labels", options));
  CheckRowCount(all, table);
  const std::vector<std::size_t> train_rows = SplitRows(table, "train");
  const std::vector<std::size_t> test_rows = SplitRows(table, "test");
  const auto transform = LoadTransform(config, options, all.dims());

  struct Representation {
    std::string name;
    EmbeddingMatrix train;
    EmbeddingMatrix test;
  };
  std::vector<Representation> reps;
  reps.push_back({"raw", all.SelectRows(train_rows), all.SelectRows(test_rows)});
  if (transform) {
    reps.push_back({"transformed", transform->Apply(reps[0].train),
                    transform->Apply(reps[0].test)});
  }

  // One job per (attribute, representation).
  const std::size_t jobs = attributes.size() * reps.size();
  const auto fits = ParallelMap<json>(jobs, options.threads, [&](std::size_t j) {
    const std::string& attribute = attributes[j / reps.size()];
    const Representation& rep = reps[j % reps.size()];
    return WithContext("attribute '" + attribute + "'", [&] {
      const GroupLabels labels = table.Groups(attribute);
      std::vector<int> train_y;
      std::vector<int> test_y;
      for (std::size_t r : train_rows) train_y.push_back(labels[r]);
      for (std::size_t r : test_rows) test_y.push_back(labels[r]);
      const auto model = probe::FitProbe(rep.train, train_y,
                                         labels.group_count(), probe_options);
      return ProbeFitJson(model, probe::EvaluateProbe(model, rep.test, test_y));
    });
  });

  json table_rows = json::array();
  json mappings = json::object();
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    const GroupLabels labels = table.Groups(attributes[a]);
    std::vector<std::size_t> counts(labels.group_count(), 0);
    for (std::size_t r : test_rows) ++counts[labels[r]];
    const double majority =
        static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
        static_cast<double>(test_rows.size());
    json row = {{"attribute", attributes[a]},
                {"classes", labels.group_count()},
                {"majority_baseline", majority}};
    for (std::size_t r = 0; r < reps.size(); ++r) {
      row[reps[r].name] = fits[a * reps.size() + r];
    }
    if (transform) {
      row["accuracy_change"] = row["transformed"]["accuracy"].get<double>() -
                               row["raw"]["accuracy"].get<double>();
    }
    table_rows.push_back(row);
    mappings[attributes[a]] = LabelMapping(labels);
  }
  out["probe_options"] = ProbeOptionsJson(probe_options);
  out["train_items"] = train_rows.size();
  out["test_items"] = test_rows.size();
  out["label_mapping"] = mappings;
  if (transform) out["transform"] = TransformJson(*transform);
  out["table"] = table_rows;
  return out;
}

json RunSynth(const json& config, const RunOptions& options) {
  synth::SynthSpec spec;
  if (const json* v = Find(config, "n")) spec.n = AsCount(*v, "n", "");
  if (const json* v = Find(config, "d")) spec.d = AsCount(*v, "d", "");
  if (const json* v = Find(config, "p")) spec.p = static_cast<int>(AsCount(*v, "p", ""));
  if (Find(config, "bias_dims")) spec.bias_dims = GetCounts(config, "bias_dims", "");
  if (const json* v = Find(config, "bias_strength")) {
    spec.bias_strength = AsNumber(*v, "bias_strength", "");
  }
  if (Find(config, "concept_dims")) {
    spec.concept_dims = GetCounts(config, "concept_dims", "");
  }
  if (const json* v = Find(config, "concept_strength")) {
    spec.concept_strength = AsNumber(*v, "concept_strength", "");
  }
  if (const json* v = Find(config, "seed")) {
    if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
      ConfigFail("", "'seed' must be a non-negative integer");
    }
    spec.seed = v->get<std::uint64_t>();
  }
  if (options.seed) spec.seed = *options.seed;
  const fs::path dir = GetPath(config, "output_dir", options);

  const LabeledDataset data = synth::Generate(spec);

  json spec_json = {{"n", spec.n},
                    {"d", spec.d},
                    {"p", spec.p},
                    {"bias_dims", spec.bias_dims},
                    {"bias_strength", spec.bias_strength},
                    {"concept_dims", spec.concept_dims},
                    {"concept_strength", spec.concept_strength},
                    {"seed", spec.seed}};

  std::vector<std::string> group_col;
  std::vector<std::string> concept_col;
  std::vector<std::string> split_col;
  for (std::size_t i = 0; i < data.size(); ++i) {
    group_col.push_back("g" + std::to_string(data.protected_groups()[i]));
    concept_col.push_back(data.ground_truth()->IsPositive(i) ? "1" : "0");
    split_col.push_back(data.split()[i] == Split::kTrain ? "train" : "test");
  }
  const io::LabelTable labels({"group", "concept", "split"},
                              {group_col, concept_col, split_col});

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  }
  io::WriteEmbeddings(data.embeddings(), dir / "embeddings.emb");
  labels.Write(dir / "labels.csv");
  const json sidecar = {{"schema_version", report::kSchemaVersion},
                        {"generator", "fairlens synth"},
                        {"spec", spec_json},
                        {"files", {"embeddings.emb", "labels.csv"}}};
  io::WriteReport(sidecar, dir / "synth.json");

  json out = report::NewReport("synth", config, options.config_text);
  out["spec"] = spec_json;
  out["files"] = {"embeddings.emb", "labels.csv", "synth.json"};
  out["group_sizes"] = data.protected_groups().GroupSizes();
  out["train_items"] = data.Indices(Split::kTrain).size();
  out["test_items"] = data.Indices(Split::kTest).size();
  return out;
}

const std::vector<std::string>& CommandNames() {
  static const std::vector<std::string> names = {
      "classify-audit", "retrieve-audit", "debias-fit",
      "apply",          "probe",          "synth"};
  return names;
}

json RunCommand(const std::string& command, const json& config,
                const RunOptions& options) {
  if (!config.is_object()) ConfigFail("", "configuration must be an object");
  if (options.threads < 1) ConfigFail("", "threads must be at least 1");
  try {
    if (command == "classify-audit") return RunClassifyAudit(config, options);
    if (command == "retrieve-audit") return RunRetrieveAudit(config, options);
    if (command == "debias-fit") return RunDebiasFit(config, options);
    if (command == "apply") return RunApply(config, options);
    if (command == "probe") return RunProbe(config, options);
    if (command == "synth") return RunSynth(config, options);
  } catch (const json::exception& e) {
    ConfigFail("", e.what());
  }
  ConfigFail("", "unknown command '" + command + "'");
}

int ExitCodeFor(const Error& error) {
  switch (ErrorClassOf(error.code())) {
    case ErrorClass::kConfig: return 2;
    case ErrorClass::kData: return 3;
    case ErrorClass::kNumeric: return 4;
  }
  return 3;
}

}  // namespace cli
}  // namespace fairlens
