#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "curvssl/tensor.hpp"

namespace curvssl {

struct ImageShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct Dataset {
  std::string name;
  Tensor features;  // n × d, values in [0, 1]
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::optional<ImageShape> image;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  // Throws InvalidCounts / ShapeMismatch when the invariants do not hold.
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset head(std::size_t n) const;
};

// IDX pair: images magic 2051 (u8, 3 dims), labels magic 2049 (u8, 1 dim),
// big-endian 32-bit extents. Pixels scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Gaussian clusters around seeded centers drawn in [0.25, 0.75]^d; labels
// cycle through the classes; coordinates clamped to [0, 1].
Dataset make_blobs(std::size_t n, std::size_t num_classes, std::size_t dim, double spread, std::uint64_t seed);
// 2-D ring of the given radius around (0.5, 0.5); class c owns the arc
// [2πc/C, 2π(c+1)/C); radial Gaussian noise; clamped to [0, 1].
Dataset make_ring(std::size_t n, std::size_t num_classes, double radius, double noise, std::uint64_t seed);

// CSV header `label,f0,f1,...`, one row per sample.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
// Reads any `label,<values...>` CSV with a header row (dataset or embedding
// exports). Values are not range checked. Throws IoFailure, TypeError,
// CountMismatch (ragged rows) or EmptyDataset.
Dataset read_labeled_csv(const std::filesystem::path& path);

struct AugmentationPolicy {
  double noise_sigma = 0.1;
  double mask_fraction = 0.1;
  std::size_t shift_max = 2;

  void validate() const;
  friend bool operator==(const AugmentationPolicy&, const AugmentationPolicy&) = default;
};

// Shift (images only, zero fill), then zero a mask_fraction of coordinates,
// then add Gaussian noise, then clamp to [0, 1]. Draws only from `rng`.
Tensor augment_view(std::span<const double> x, const AugmentationPolicy& policy, std::mt19937_64& rng,
                    std::optional<ImageShape> image = std::nullopt);

struct BatchPlan {
  std::uint64_t seed = 0;
  std::size_t batch_size = 256;
  // A trailing short slice with fewer rows is dropped (curvature needs b > k);
  // usually k + 2.
  std::size_t min_rows = 12;
};

// Seeded permutation of [0, n), a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

// Throws BatchTooSmall when batch_size is 0 or exceeds n.
std::vector<std::vector<std::size_t>> batches(const Dataset& data, const BatchPlan& plan, std::size_t epoch);

}  // namespace curvssl
