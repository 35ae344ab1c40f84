#ifndef FAIRLENS_PROBE_HPP_
#define FAIRLENS_PROBE_HPP_

// Linear probe: L2-regularised multinomial logistic regression on frozen
// embeddings, fitted by deterministic full-batch gradient descent with an
// Armijo backtracking line search from a zero start.
//
// Parameters use reference coding: classes 0..C-2 each own a weight vector
// and a bias, the last class has logit 0. Binary labels map -1 -> class 0 and
// +1 -> class 1.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fairlens/core.hpp"

namespace fairlens {
namespace probe {

struct ProbeOptions {
  double l2 = 1e-4;
  int max_iter = 1000;
  double tol = 1e-6;
};

class ProbeModel {
 public:
  ProbeModel(Eigen::MatrixXd parameters, int classes);

  // (d + 1) x (classes - 1); the last row holds the biases.
  const Eigen::MatrixXd& parameters() const { return parameters_; }
  int classes() const { return classes_; }
  std::size_t dims() const { return parameters_.rows() - 1; }

  // Argmax class per row, ties to the lowest class index.
  std::vector<int> Predict(const EmbeddingMatrix& x) const;

  double training_loss = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective value after each accepted step, starting at the initial point.
  std::vector<double> loss_history;

 private:
  Eigen::MatrixXd parameters_;
  int classes_;
};

// Average cross-entropy plus (l2 / 2) * ||weights||^2 (biases are not
// penalised). `gradient`, when given, receives d objective / d parameters.
double ProbeObjective(const EmbeddingMatrix& x, std::span<const int> labels,
                      int classes, double l2, const Eigen::MatrixXd& parameters,
                      Eigen::MatrixXd* gradient);

// Labels are class indices in [0, classes). Throws DegenerateLabels when
// fewer than two classes occur.
ProbeModel FitProbe(const EmbeddingMatrix& x, std::span<const int> labels,
                    int classes, const ProbeOptions& options = {});
ProbeModel FitProbe(const EmbeddingMatrix& x, const GroupLabels& labels,
                    const ProbeOptions& options = {});
ProbeModel FitProbe(const EmbeddingMatrix& x, const BinaryLabels& labels,
                    const ProbeOptions& options = {});

double EvaluateProbe(const ProbeModel& model, const EmbeddingMatrix& x,
                     std::span<const int> labels);
double EvaluateProbe(const ProbeModel& model, const EmbeddingMatrix& x,
                     const GroupLabels& labels);
double EvaluateProbe(const ProbeModel& model, const EmbeddingMatrix& x,
                     const BinaryLabels& labels);

// -1/+1 -> 0/1.
std::vector<int> BinaryToClasses(const BinaryLabels& labels);

}  // namespace probe
}  // namespace fairlens

#endif  // FAIRLENS_PROBE_HPP_
