#include "fairlens/probe.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "fairlens/metrics.hpp"

namespace fairlens {
namespace probe {
namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-16;

void CheckLabels(const EmbeddingMatrix& x, std::span<const int> labels,
                 int classes) {
  if (labels.size() != x.rows()) {
    throw Error(ErrorCode::kShapeError, "labels and features differ in length");
  }
  if (classes < 2) {
    throw Error(ErrorCode::kDegenerateLabels, "need at least 2 classes");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw Error(ErrorCode::kDataError,
                  "class label " + std::to_string(y) + " out of range");
    }
  }
}

// Logits for all classes, the reference class fixed at zero.
Eigen::MatrixXd Logits(const Matrix& x, const Eigen::MatrixXd& parameters) {
  const Eigen::Index d = x.cols();
  const Eigen::Index free = parameters.cols();
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(x.rows(), free + 1);
  logits.leftCols(free) = x * parameters.topRows(d);
  logits.leftCols(free).rowwise() += parameters.row(d);
  return logits;
}

}  // namespace

ProbeModel::ProbeModel(Eigen::MatrixXd parameters, int classes)
    : parameters_(std::move(parameters)), classes_(classes) {
  if (classes_ < 2 || parameters_.cols() != classes_ - 1 ||
      parameters_.rows() < 2) {
    throw Error(ErrorCode::kShapeError, "probe parameter shape mismatch");
  }
  if (!parameters_.allFinite()) {
    throw Error(ErrorCode::kDataError, "probe parameters not finite");
  }
}

std::vector<int> ProbeModel::Predict(const EmbeddingMatrix& x) const {
  if (x.dims() != dims()) {
    throw Error(ErrorCode::kShapeError,
                "probe expects " + std::to_string(dims()) + " dims, got " +
                    std::to_string(x.dims()));
  }
  const Eigen::MatrixXd logits = Logits(x.values(), parameters_);
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    out[i] = best;
  }
  return out;
}

double ProbeObjective(const EmbeddingMatrix& x, std::span<const int> labels,
                      int classes, double l2, const Eigen::MatrixXd& parameters,
                      Eigen::MatrixXd* gradient) {
  const Eigen::Index n = x.values().rows();
  const Eigen::Index d = x.values().cols();
  Eigen::MatrixXd logits = Logits(x.values(), parameters);

  double loss = 0.0;
  // Softmax probabilities overwrite the logits row by row.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = logits.row(i).maxCoeff();
    const double lse =
        top + std::log((logits.row(i).array() - top).exp().sum());
    loss += lse - logits(i, labels[i]);
    logits.row(i) = (logits.row(i).array() - lse).exp().matrix();
  }
  loss /= static_cast<double>(n);
  const auto weights = parameters.topRows(d);
  loss += 0.5 * l2 * weights.squaredNorm();

  if (gradient != nullptr) {
    Eigen::MatrixXd residual = logits.leftCols(classes - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[i] < classes - 1) residual(i, labels[i]) -= 1.0;
    }
    residual /= static_cast<double>(n);
    gradient->resize(d + 1, classes - 1);
    gradient->topRows(d) = x.values().transpose() * residual + l2 * weights;
    gradient->row(d) = residual.colwise().sum();
  }
  return loss;
}

ProbeModel FitProbe(const EmbeddingMatrix& x, std::span<const int> labels,
                    int classes, const ProbeOptions& options) {
  CheckLabels(x, labels, classes);
  std::vector<bool> present(classes, false);
  int distinct = 0;
  for (int y : labels) {
    if (!present[y]) {
      present[y] = true;
      ++distinct;
    }
  }
  if (distinct < 2) {
    throw Error(ErrorCode::kDegenerateLabels,
                "training labels contain a single class");
  }

  Eigen::MatrixXd params = Eigen::MatrixXd::Zero(x.dims() + 1, classes - 1);
  Eigen::MatrixXd grad;
  double loss = ProbeObjective(x, labels, classes, options.l2, params, &grad);
  std::vector<double> history{loss};
  double step = 1.0;
  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iter; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < options.tol) {
      converged = true;
      break;
    }
    const double grad_sq = grad.squaredNorm();
    step *= 2.0;
    bool accepted = false;
    while (step >= kMinStep) {
      Eigen::MatrixXd trial = params - step * grad;
      const double trial_loss =
          ProbeObjective(x, labels, classes, options.l2, trial, nullptr);
      if (trial_loss <= loss - kArmijo * step * grad_sq) {
        params = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    loss = ProbeObjective(x, labels, classes, options.l2, params, &grad);
    history.push_back(loss);
  }
  if (!converged && grad.cwiseAbs().maxCoeff() < options.tol) converged = true;

  ProbeModel model(std::move(params), classes);
  model.training_loss = loss;
  model.iterations = iter;
  model.converged = converged;
  model.loss_history = std::move(history);
  return model;
}

std::vector<int> BinaryToClasses(const BinaryLabels& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = labels.IsPositive(i) ? 1 : 0;
  }
  return out;
}

ProbeModel FitProbe(const EmbeddingMatrix& x, const GroupLabels& labels,
                    const ProbeOptions& options) {
  return FitProbe(x, labels.labels(), labels.group_count(), options);
}

ProbeModel FitProbe(const EmbeddingMatrix& x, const BinaryLabels& labels,
                    const ProbeOptions& options) {
  return FitProbe(x, BinaryToClasses(labels), 2, options);
}

double EvaluateProbe(const ProbeModel& model, const EmbeddingMatrix& x,
                     std::span<const int> labels) {
  if (labels.size() != x.rows()) {
    throw Error(ErrorCode::kShapeError, "labels and features differ in length");
  }
  const auto predicted = model.Predict(x);
  return metrics::Accuracy(predicted, labels);
}

double EvaluateProbe(const ProbeModel& model, const EmbeddingMatrix& x,
                     const GroupLabels& labels) {
  return EvaluateProbe(model, x, labels.labels());
}

double EvaluateProbe(const ProbeModel& model, const EmbeddingMatrix& x,
                     const BinaryLabels& labels) {
  return EvaluateProbe(model, x, BinaryToClasses(labels));
}

}  // namespace probe
}  // namespace fairlens
