#include "fairlens/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fairlens {
namespace mitigation {
namespace {

// Equal-frequency bin per item; all copies of a value share the bin of the
// first copy in sorted order.
std::vector<int> EqualFrequencyBins(const Matrix& x, Eigen::Index col,
                                    int bins) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x(a, col) < x(b, col);
  });
  std::vector<int> bin_of(n);
  int current = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == 0 || x(order[r], col) != x(order[r - 1], col)) {
      current = static_cast<int>((r * static_cast<std::size_t>(bins)) / n);
    }
    bin_of[order[r]] = current;
  }
  return bin_of;
}

void CheckDims(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error(ErrorCode::kShapeError,
                "transform expects " + std::to_string(expected) +
                    " dims, input has " + std::to_string(got));
  }
}

}  // namespace

std::vector<double> EstimateMiPerDimension(const EmbeddingMatrix& train,
                                           const GroupLabels& groups,
                                           int bins) {
  if (bins < 2) {
    throw Error(ErrorCode::kInvalidBins, "need at least 2 bins");
  }
  const std::size_t n = train.rows();
  if (groups.size() != n) {
    throw Error(ErrorCode::kShapeError, "labels and embeddings differ in length");
  }
  if (n < static_cast<std::size_t>(bins)) {
    throw Error(ErrorCode::kInvalidBins,
                std::to_string(bins) + " bins for only " + std::to_string(n) +
                    " items");
  }
  const int p = groups.group_count();
  const auto group_sizes = groups.GroupSizes();
  const double dn = static_cast<double>(n);

  std::vector<double> scores(train.dims(), 0.0);
  std::vector<std::int64_t> joint(static_cast<std::size_t>(bins) * p);
  std::vector<std::int64_t> marginal(bins);
  for (std::size_t d = 0; d < train.dims(); ++d) {
    const auto bin_of = EqualFrequencyBins(train.values(), d, bins);
    std::fill(joint.begin(), joint.end(), 0);
    std::fill(marginal.begin(), marginal.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++joint[static_cast<std::size_t>(bin_of[i]) * p + groups[i]];
      ++marginal[bin_of[i]];
    }
    double mi = 0.0;
    for (int b = 0; b < bins; ++b) {
      for (int g = 0; g < p; ++g) {
        const auto c = joint[static_cast<std::size_t>(b) * p + g];
        if (c == 0) continue;
        const double cd = static_cast<double>(c);
        mi += cd / dn *
              std::log(cd * dn / (static_cast<double>(marginal[b]) *
                                  static_cast<double>(group_sizes[g])));
      }
    }
    scores[d] = std::max(mi, 0.0);
  }
  return scores;
}

MiClipTransform::MiClipTransform(std::vector<bool> keep_mask,
                                 std::vector<double> mi_scores)
    : keep_mask_(std::move(keep_mask)), mi_scores_(std::move(mi_scores)) {
  if (keep_mask_.empty() || mi_scores_.size() != keep_mask_.size()) {
    throw Error(ErrorCode::kShapeError, "mask and MI scores differ in length");
  }
  if (retained_count() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mask keeps no dimension");
  }
}

std::size_t MiClipTransform::retained_count() const {
  return static_cast<std::size_t>(
      std::count(keep_mask_.begin(), keep_mask_.end(), true));
}

std::vector<std::size_t> MiClipTransform::KeptDimensions() const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < keep_mask_.size(); ++d) {
    if (keep_mask_[d]) out.push_back(d);
  }
  return out;
}

std::vector<std::size_t> MiClipTransform::RemovedDimensions() const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < keep_mask_.size(); ++d) {
    if (!keep_mask_[d]) out.push_back(d);
  }
  return out;
}

EmbeddingMatrix MiClipTransform::Apply(const EmbeddingMatrix& embeddings) const {
  CheckDims(keep_mask_.size(), embeddings.dims());
  const auto kept = KeptDimensions();
  Matrix out(embeddings.rows(), kept.size());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    out.col(c) = embeddings.values().col(kept[c]);
  }
  return EmbeddingMatrix(std::move(out));
}

MiClipTransform MiClipFromScores(std::vector<double> mi_scores,
                                 std::size_t retained) {
  const std::size_t d = mi_scores.size();
  if (retained < 1 || retained >= d) {
    throw Error(ErrorCode::kInvalidArgument,
                "retained dimension count " + std::to_string(retained) +
                    " outside [1, " + std::to_string(d) + ")");
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mi_scores[a] > mi_scores[b];
  });
  std::vector<bool> keep(d, true);
  for (std::size_t r = 0; r < d - retained; ++r) keep[order[r]] = false;
  return MiClipTransform(std::move(keep), std::move(mi_scores));
}

MiClipTransform FitMiClip(const EmbeddingMatrix& train,
                          const GroupLabels& groups, std::size_t retained,
                          int bins) {
  if (retained < 1 || retained >= train.dims()) {
    throw Error(ErrorCode::kInvalidArgument,
                "retained dimension count " + std::to_string(retained) +
                    " outside [1, " + std::to_string(train.dims()) + ")");
  }
  return MiClipFromScores(EstimateMiPerDimension(train, groups, bins), retained);
}

MiClipTransform FitMiClip(const LabeledDataset& data, std::size_t retained,
                          int bins) {
  data.RequireBothSplits();
  const LabeledDataset train = data.Restrict(Split::kTrain);
  return FitMiClip(train.embeddings(), train.protected_groups(), retained, bins);
}

EmbeddingMatrix ApplyMiClip(const MiClipTransform& transform,
                            const EmbeddingMatrix& embeddings) {
  return transform.Apply(embeddings);
}

Eigen::MatrixXd DemeanedIndicators(const GroupLabels& groups) {
  const Eigen::Index n = static_cast<Eigen::Index>(groups.size());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, groups.group_count());
  for (Eigen::Index i = 0; i < n; ++i) z(i, groups[i]) = 1.0;
  z.rowwise() -= z.colwise().mean();
  return z;
}

FairPcaTransform::FairPcaTransform(Vector mean, Eigen::MatrixXd projection,
                                   FairPcaDiagnostics diagnostics)
    : mean_(std::move(mean)),
      projection_(std::move(projection)),
      diagnostics_(std::move(diagnostics)) {
  if (mean_.size() == 0 || projection_.rows() != mean_.size() ||
      projection_.cols() < 1) {
    throw Error(ErrorCode::kShapeError, "inconsistent fair PCA shapes");
  }
  if (!mean_.allFinite() || !projection_.allFinite()) {
    throw Error(ErrorCode::kDataError, "fair PCA parameters not finite");
  }
  const Eigen::MatrixXd gram = projection_.transpose() * projection_;
  const double residual =
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (residual > kOrthonormalityTolerance) {
    throw Error(ErrorCode::kRankError,
                "projection columns are not orthonormal (residual " +
                    std::to_string(residual) + ")");
  }
  diagnostics_.orthonormality_residual = residual;
}

EmbeddingMatrix FairPcaTransform::Apply(const EmbeddingMatrix& embeddings) const {
  CheckDims(input_dims(), embeddings.dims());
  Matrix centered = embeddings.values().rowwise() - mean_.transpose();
  return EmbeddingMatrix(Matrix(centered * projection_));
}

FairPcaTransform FitFairPca(const EmbeddingMatrix& train,
                            const GroupLabels& groups,
                            std::optional<std::size_t> target_dim) {
  const auto n = static_cast<Eigen::Index>(train.rows());
  const auto d = static_cast<Eigen::Index>(train.dims());
  const int p = groups.group_count();
  if (groups.size() != train.rows()) {
    throw Error(ErrorCode::kShapeError, "labels and embeddings differ in length");
  }
  const Eigen::Index max_rank = d - (p - 1);
  const Eigen::Index r =
      target_dim ? static_cast<Eigen::Index>(*target_dim) : max_rank;
  if (r < 1 || r > max_rank) {
    throw Error(ErrorCode::kRankError,
                "target dimension " + std::to_string(r) + " outside [1, " +
                    std::to_string(max_rank) + "]");
  }

  FairPcaDiagnostics diag;
  diag.constraint_count = p - 1;
  if (n <= d) {
    diag.warnings.push_back("only " + std::to_string(n) + " samples for " +
                            std::to_string(d) +
                            " dimensions; covariance is rank-deficient");
  }

  const Vector mean = train.values().colwise().mean().transpose();
  const Eigen::MatrixXd centered = train.values().rowwise() - mean.transpose();
  const Eigen::MatrixXd indicators = DemeanedIndicators(groups);
  const Eigen::MatrixXd constraints = indicators.transpose() * centered;  // p x d

  // Null space of the constraint rows. Singular values below the threshold,
  // relative to the larger of the top singular value and the data scale,
  // count as zero so a constraint that is already met does not remove a
  // direction.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double scale = indicators.norm() * centered.norm();
  const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
  const double threshold = kRankThreshold * std::max(sigma_max, scale);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > threshold) ++rank;
  }
  diag.constraint_rank = static_cast<int>(rank);
  diag.dropped_constraints = diag.constraint_count - diag.constraint_rank;
  if (diag.dropped_constraints > 0) {
    diag.warnings.push_back(std::to_string(diag.dropped_constraints) +
                            " group constraint(s) numerically inactive; dropped");
  }
  const Eigen::MatrixXd basis = svd.matrixV().rightCols(d - rank);  // d x (d-rank)

  // Standard PCA inside the feasible subspace.
  const Eigen::MatrixXd reduced = centered * basis;
  const Eigen::MatrixXd cov =
      (reduced.transpose() * reduced) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kRankError, "eigendecomposition failed");
  }
  const Eigen::Index m = cov.rows();
  Eigen::MatrixXd top(m, r);
  for (Eigen::Index c = 0; c < r; ++c) {
    Vector v = eig.eigenvectors().col(m - 1 - c);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    top.col(c) = v;
    diag.retained_variance += eig.eigenvalues()[m - 1 - c];
  }
  Eigen::MatrixXd projection = basis * top;

  diag.constraint_residual =
      (constraints * projection).cwiseAbs().maxCoeff();
  return FairPcaTransform(mean, std::move(projection), std::move(diag));
}

FairPcaTransform FitFairPca(const LabeledDataset& data,
                            std::optional<std::size_t> target_dim) {
  data.RequireBothSplits();
  const LabeledDataset train = data.Restrict(Split::kTrain);
  return FitFairPca(train.embeddings(), train.protected_groups(), target_dim);
}

EmbeddingMatrix ApplyFairPca(const FairPcaTransform& transform,
                             const EmbeddingMatrix& embeddings) {
  return transform.Apply(embeddings);
}

const char* AttributeSourceName(AttributeSource source) {
  return source == AttributeSource::kInferred ? "inferred" : "groundTruth";
}

EmbeddingMatrix FittedTransform::Apply(const EmbeddingMatrix& embeddings) const {
  return std::visit([&](const auto& t) { return t.Apply(embeddings); }, map);
}

std::size_t FittedTransform::input_dims() const {
  return std::visit([](const auto& t) { return t.input_dims(); }, map);
}

std::size_t FittedTransform::output_dims() const {
  if (const auto* clip = std::get_if<MiClipTransform>(&map)) {
    return clip->retained_count();
  }
  return std::get<FairPcaTransform>(map).target_dim();
}

const char* FittedTransform::MethodName() const {
  return std::holds_alternative<MiClipTransform>(map) ? "miclip" : "fairpca";
}

}  // namespace mitigation
}  // namespace fairlens
