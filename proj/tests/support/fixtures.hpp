#ifndef FAIRLENS_TESTS_FIXTURES_HPP_
#define FAIRLENS_TESTS_FIXTURES_HPP_

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fairlens/core.hpp"
#include "fairlens/synth.hpp"

namespace fixtures {

// Fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fairlens_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Labels in [0, p) with every group present.
inline std::vector<int> RandomGroups(std::size_t n, int p, std::mt19937_64& rng) {
  std::vector<int> labels(n);
  std::uniform_int_distribution<int> pick(0, p - 1);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i < static_cast<std::size_t>(p) ? static_cast<int>(i) : pick(rng);
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

inline fairlens::synth::SynthSpec BiasedSpec(std::size_t n, std::size_t d,
                                             int p, double bias_strength,
                                             std::uint64_t seed) {
  fairlens::synth::SynthSpec spec;
  spec.n = n;
  spec.d = d;
  spec.p = p;
  spec.bias_dims = {0, 1};
  spec.bias_strength = bias_strength;
  spec.concept_dims = {2, 3};
  spec.concept_strength = 3.0;
  spec.seed = seed;
  return spec;
}

}  // namespace fixtures

#endif  // FAIRLENS_TESTS_FIXTURES_HPP_
