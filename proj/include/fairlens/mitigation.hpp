#ifndef FAIRLENS_MITIGATION_HPP_
#define FAIRLENS_MITIGATION_HPP_

// Post-processing debiasing maps fitted on a train split and applied to both
// image and text embeddings:
//
//  * MI clipping drops the embedding dimensions whose values carry the most
//    mutual information about the protected attribute.
//  * Fair PCA projects onto the variance-maximising subspace whose
//    coordinates are empirically uncorrelated with every group indicator.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fairlens/core.hpp"

namespace fairlens {
namespace mitigation {

inline constexpr int kDefaultMiBins = 32;

// Plug-in mutual information (nats) between each equal-frequency-binned
// dimension and the group label. Tied values always share a bin, so a
// dimension with v distinct values uses at most v bins.
std::vector<double> EstimateMiPerDimension(const EmbeddingMatrix& train,
                                           const GroupLabels& groups,
                                           int bins = kDefaultMiBins);

class MiClipTransform {
 public:
  MiClipTransform(std::vector<bool> keep_mask, std::vector<double> mi_scores);

  const std::vector<bool>& keep_mask() const { return keep_mask_; }
  const std::vector<double>& mi_scores() const { return mi_scores_; }
  std::size_t input_dims() const { return keep_mask_.size(); }
  std::size_t retained_count() const;
  std::vector<std::size_t> KeptDimensions() const;
  std::vector<std::size_t> RemovedDimensions() const;

  // Column subset, original order. Throws ShapeError on a dims mismatch.
  EmbeddingMatrix Apply(const EmbeddingMatrix& embeddings) const;

 private:
  std::vector<bool> keep_mask_;
  std::vector<double> mi_scores_;
};

// Keeps `retained` dimensions, cutting the d - retained of highest MI
// (ties cut the lower dimension index first). Requires 1 <= retained < d.
MiClipTransform FitMiClip(const EmbeddingMatrix& train,
                          const GroupLabels& groups, std::size_t retained,
                          int bins = kDefaultMiBins);
MiClipTransform FitMiClip(const LabeledDataset& data, std::size_t retained,
                          int bins = kDefaultMiBins);
// Same cut from precomputed scores.
MiClipTransform MiClipFromScores(std::vector<double> mi_scores,
                                 std::size_t retained);

EmbeddingMatrix ApplyMiClip(const MiClipTransform& transform,
                            const EmbeddingMatrix& embeddings);

struct FairPcaDiagnostics {
  int constraint_count = 0;    // p - 1
  int constraint_rank = 0;     // numerical rank of the constraint system
  int dropped_constraints = 0; // constraint_count - constraint_rank
  double constraint_residual = 0.0;      // max |Z~^T X_c P|
  double orthonormality_residual = 0.0;  // max |P^T P - I|
  double retained_variance = 0.0;        // trace of projected covariance
  std::vector<std::string> warnings;
};

class FairPcaTransform {
 public:
  // Throws ShapeError on inconsistent sizes and RankError when the columns of
  // `projection` are not orthonormal to 1e-10.
  FairPcaTransform(Vector mean, Eigen::MatrixXd projection,
                   FairPcaDiagnostics diagnostics = {});

  const Vector& mean() const { return mean_; }
  const Eigen::MatrixXd& projection() const { return projection_; }
  std::size_t input_dims() const { return mean_.size(); }
  std::size_t target_dim() const { return projection_.cols(); }
  const FairPcaDiagnostics& diagnostics() const { return diagnostics_; }

  // (X - 1 mean^T) P.
  EmbeddingMatrix Apply(const EmbeddingMatrix& embeddings) const;

 private:
  Vector mean_;
  Eigen::MatrixXd projection_;
  FairPcaDiagnostics diagnostics_;
};

inline constexpr double kOrthonormalityTolerance = 1e-10;
inline constexpr double kConstraintTolerance = 1e-8;
inline constexpr double kRankThreshold = 1e-10;

// target_dim defaults to d - (p - 1).
FairPcaTransform FitFairPca(const EmbeddingMatrix& train,
                            const GroupLabels& groups,
                            std::optional<std::size_t> target_dim = {});
FairPcaTransform FitFairPca(const LabeledDataset& data,
                            std::optional<std::size_t> target_dim = {});

EmbeddingMatrix ApplyFairPca(const FairPcaTransform& transform,
                             const EmbeddingMatrix& embeddings);

// Demeaned one-hot encoding of the groups (n x p).
Eigen::MatrixXd DemeanedIndicators(const GroupLabels& groups);

// Whether the protected labels used for fitting were ground truth or
// inferred from the embeddings themselves.
enum class AttributeSource : std::uint8_t { kGroundTruth = 0, kInferred = 1 };

const char* AttributeSourceName(AttributeSource source);

// A fitted map plus the provenance of the labels it was fitted on. The same
// map is applied to image and text embeddings.
struct FittedTransform {
  std::variant<MiClipTransform, FairPcaTransform> map;
  AttributeSource source = AttributeSource::kGroundTruth;

  EmbeddingMatrix Apply(const EmbeddingMatrix& embeddings) const;
  std::size_t input_dims() const;
  std::size_t output_dims() const;
  const char* MethodName() const;  // "miclip" or "fairpca"
};

}  // namespace mitigation
}  // namespace fairlens

#endif  // FAIRLENS_MITIGATION_HPP_
