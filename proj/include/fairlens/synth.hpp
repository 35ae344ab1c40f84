#ifndef FAIRLENS_SYNTH_HPP_
#define FAIRLENS_SYNTH_HPP_

// Synthetic biased embeddings with planted group and concept directions.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "fairlens/core.hpp"

namespace fairlens {
namespace synth {

// Counter-based 64-bit generator: output k is SplitMix64's finaliser applied
// to key + k * golden-gamma, so any position of the stream is addressable.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct SynthSpec {
  std::size_t n = 2000;
  std::size_t d = 64;
  int p = 2;
  std::vector<std::size_t> bias_dims;
  // Separation between adjacent group means, in within-group sigmas.
  double bias_strength = 0.0;
  std::vector<std::size_t> concept_dims;
  // Separation between the two concept-class means, in sigmas.
  double concept_strength = 0.0;
  std::uint64_t seed = 0;
};

// Throws TooSmall when n < 2p and InvalidArgument for any other bad field.
void ValidateSpec(const SynthSpec& spec);

// Unit-variance Gaussian rows. Group g (g = i mod p) is shifted by
// bias_strength * (g - (p-1)/2) along every bias dimension; the balanced
// binary concept y in {-1,+1} (the ground truth) is shifted by
// concept_strength * y / 2 along every concept dimension. The split is
// stratified: each group sends round(0.7 n_g), clamped to [1, n_g - 1], of
// its shuffled members to train.
LabeledDataset Generate(const SynthSpec& spec);

}  // namespace synth
}  // namespace fairlens

#endif  // FAIRLENS_SYNTH_HPP_
