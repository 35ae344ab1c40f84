#include "fairlens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace fairlens {
namespace synth {
namespace {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t Mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent streams for the different draws keep each one stable when
// another changes size.
enum Stream : std::uint64_t { kNoise = 1, kConcept = 2, kSplit = 3 };

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(Mix(seed ^ Mix(stream * kGoldenGamma + 1))) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return Mix(key_ + counter_ * kGoldenGamma);
}

void ValidateSpec(const SynthSpec& spec) {
  if (spec.p < 2) throw Error(ErrorCode::kInvalidArgument, "p must be >= 2");
  if (spec.n < 2 * static_cast<std::size_t>(spec.p)) {
    throw Error(ErrorCode::kTooSmall,
                "n=" + std::to_string(spec.n) + " < 2p=" +
                    std::to_string(2 * spec.p));
  }
  if (spec.d < 1) throw Error(ErrorCode::kInvalidArgument, "d must be >= 1");
  if (!(spec.bias_strength >= 0.0) || !(spec.concept_strength >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "strengths must be >= 0");
  }
  std::vector<bool> used(spec.d, false);
  for (std::size_t b : spec.bias_dims) {
    if (b >= spec.d) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bias dim " + std::to_string(b) + " >= d");
    }
    used[b] = true;
  }
  for (std::size_t c : spec.concept_dims) {
    if (c >= spec.d) {
      throw Error(ErrorCode::kInvalidArgument,
                  "concept dim " + std::to_string(c) + " >= d");
    }
    if (used[c]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dim " + std::to_string(c) + " is both bias and concept");
    }
  }
}

LabeledDataset Generate(const SynthSpec& spec) {
  ValidateSpec(spec);
  const std::size_t n = spec.n;
  const int p = spec.p;

  std::vector<int> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = static_cast<int>(i % p);

  std::vector<int> concept_labels(n);
  for (std::size_t i = 0; i < n; ++i) concept_labels[i] = i < n / 2 ? 1 : -1;
  CounterRng concept_rng(spec.seed, kConcept);
  std::shuffle(concept_labels.begin(), concept_labels.end(), concept_rng);

  CounterRng noise_rng(spec.seed, kNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, spec.d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.d; ++j) x(i, j) = normal(noise_rng);
  }
  const double center = 0.5 * (p - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double offset = spec.bias_strength * (groups[i] - center);
    for (std::size_t b : spec.bias_dims) x(i, b) += offset;
    const double shift = 0.5 * spec.concept_strength * concept_labels[i];
    for (std::size_t c : spec.concept_dims) x(i, c) += shift;
  }

  std::vector<Split> split(n, Split::kTest);
  CounterRng split_rng(spec.seed, kSplit);
  for (int g = 0; g < p; ++g) {
    std::vector<std::size_t> members;
    for (std::size_t i = static_cast<std::size_t>(g); i < n; i += p) {
      members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), split_rng);
    const auto size = static_cast<long>(members.size());
    const long train =
        std::clamp(std::lround(0.7 * static_cast<double>(size)), 1L, size - 1);
    for (long r = 0; r < train; ++r) split[members[r]] = Split::kTrain;
  }

  return LabeledDataset(EmbeddingMatrix(std::move(x)),
                        GroupLabels(std::move(groups), p),
                        BinaryLabels(std::move(concept_labels)),
                        std::move(split));
}

}  // namespace synth
}  // namespace fairlens
