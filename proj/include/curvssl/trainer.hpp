#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "curvssl/checkpoint.hpp"
#include "curvssl/data.hpp"
#include "curvssl/geometry.hpp"
#include "curvssl/losses.hpp"
#include "curvssl/model.hpp"

namespace curvssl {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  std::size_t k = 10;
  LossWeights weights;
  Metric metric = Euclidean{};
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double eps = kDefaultEps;
  std::uint64_t seed = 0;
  Architecture architecture;
  AugmentationPolicy augmentation;
  // Ablation hook: false removes the curvature branch from the step graph.
  bool compute_curvature = true;

  // Throws InvariantViolation (b <= k+1, lr <= 0, epochs == 0, ...).
  void validate() const;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros_like(std::span<const Tensor> params);
};

// One Adam update in place: g += weight_decay * theta, moment updates,
// theta -= lr * m_hat / (sqrt(v_hat) + epsilon). Throws ShapeMismatch.
void adam_update(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state, double lr,
                 double weight_decay);

// Flattened parameter order: encoder layers then projector layers, weight
// before bias.
std::vector<Tensor> flatten(const Parameters& params);
Parameters unflatten(const Parameters& like, std::vector<Tensor> tensors);

struct AdamResult {
  Parameters params;
  AdamState state;
};
AdamResult adam_step(const Parameters& params, const Parameters& grads, const AdamState& state, double lr,
                     double weight_decay);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown mean;
  double seconds = 0.0;
};

using History = std::vector<EpochRecord>;

class Pretrainer {
 public:
  Pretrainer(TrainConfig config, const Dataset& data);

  // Draws both views for `rows`, evaluates the objective, applies one Adam
  // step and returns the pre-update loss.
  LossBreakdown step(std::size_t epoch, std::size_t batch, std::span<const std::size_t> rows);
  EpochRecord run_epoch(std::size_t epoch);
  History run();

  Checkpoint checkpoint(const History& history, std::string config_text = {}) const;

  const Parameters& parameters() const noexcept { return params_; }
  const AdamState& optimizer() const noexcept { return adam_; }
  const TrainConfig& config() const noexcept { return config_; }

 private:
  Tensor views(std::size_t epoch, std::size_t batch, std::span<const std::size_t> rows, std::uint64_t view) const;

  TrainConfig config_;
  const Dataset& data_;
  Parameters params_;
  AdamState adam_;
};

struct PretrainResult {
  Checkpoint checkpoint;
  History history;
};

PretrainResult pretrain(const TrainConfig& config, const Dataset& data, std::string config_text = {});

struct ProbeConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.1;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  // 0 = affine probe. Anything else inserts one relu hidden layer.
  std::size_t hidden_units = 0;
};

struct ProbeResult {
  double accuracy = 0.0;
  double train_accuracy = 0.0;
};

// Frozen encoder, projector discarded; softmax cross-entropy trained by
// plain mini-batch SGD; top-1 accuracy on `test`.
ProbeResult linear_probe(const Checkpoint& ckpt, const Dataset& train, const Dataset& test, const ProbeConfig& config);

// argmax per row (lowest class index wins ties) against labels.
double top1_accuracy(const Tensor& logits, std::span<const int> labels);

void write_history_csv(const History& history, const std::filesystem::path& path);
void write_embeddings_csv(const Tensor& features, std::span<const int> labels, const std::filesystem::path& path);

}  // namespace curvssl
