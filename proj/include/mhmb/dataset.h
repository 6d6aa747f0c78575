#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mhmb/rng.h"

namespace mhmb {

// Row-major N x d feature matrix with optional integer labels.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;
  std::optional<std::vector<int>> labels;
  std::string provenance;

  std::size_t size() const { return rows; }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * cols, cols};
  }
  double scalar(std::size_t i) const { return features[i * cols]; }
};

// Unsigned-byte tensor from an IDX container.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

// Parses an IDX byte stream (magic 0x00000801 for 1-D, 0x00000803 for 3-D,
// big-endian 32-bit dimensions, then the payload). The payload length must
// match the declared dimensions exactly.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_idx(const IdxTensor& tensor);

// Reads a file, transparently inflating gzip input.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
IdxTensor load_idx(const std::filesystem::path& path);

// Keeps rows labelled `pos_digit` (label +1) or `neg_digit` (label -1); pixel
// values are scaled to [0, 1].
Dataset mnist_binary_subset(const IdxTensor& images, const IdxTensor& labels,
                            int pos_digit = 7, int neg_digit = 1);

// n draws from 0.5 N(theta1, 2) + 0.5 N(theta1 + theta2, 2).
Dataset generate_mixture_data(std::size_t n, double theta1, double theta2,
                              std::uint64_t seed);

// n draws from N(mean, 1).
Dataset generate_gaussian_data(std::size_t n, double mean, std::uint64_t seed);

// b distinct indices drawn uniformly from [0, n) minus `exclude`.
std::vector<std::size_t> draw_minibatch(std::size_t n, std::size_t b, Rng& rng,
                                        const std::unordered_set<std::size_t>& exclude = {});

// Incremental sampling without replacement by a partial Fisher-Yates
// shuffle over a persistent permutation. reset() starts a new test
// invocation in O(1); next(b) returns b indices not seen since the reset.
class MinibatchSampler {
 public:
  explicit MinibatchSampler(std::size_t n);

  // Undoes this round's swaps, so every round starts from the identity
  // permutation and the draw depends on the rng alone.
  void reset();
  std::size_t remaining() const { return perm_.size() - used_; }
  std::size_t used() const { return used_; }
  std::size_t population() const { return perm_.size(); }

  std::span<const std::size_t> next(std::size_t b, Rng& rng);
  std::span<const std::size_t> drawn() const { return {perm_.data(), used_}; }

 private:
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> swapped_with_;
  std::size_t used_ = 0;
};

}  // namespace mhmb
