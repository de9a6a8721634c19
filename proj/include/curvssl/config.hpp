#pragma once

// Run configuration: `key = value` lines, `#` starts a comment. Every key
// is optional and falls back to the defaults below. Relative paths resolve
// against the directory holding the config file.
//
//   key               default      notes
//   epochs            100
//   batch_size        256          must exceed k + 1
//   k                 10
//   lambda_emb        1
//   lambda_curv       1
//   alpha_curv        1
//   metric            euclidean    euclidean | linear | rbf
//   gamma             (unset)      rbf only; unset = median heuristic
//   learning_rate     0.001
//   weight_decay      0.0001
//   eps               1e-05
//   seed              0
//   input_dim         784          synthetic sets use it as their dimension
//   encoder_widths    256,128
//   projector_widths  128,32
//   noise_sigma       0.1
//   mask_fraction     0.1
//   shift_max         2
//   dataset           mnist        mnist | blobs | ring
//   train_images      (unset)      IDX files, mnist only
//   train_labels      (unset)
//   test_images       (unset)
//   test_labels       (unset)
//   train_limit       0            keep the first n rows; 0 keeps all
//   test_limit        0
//   synthetic_train   512          blobs / ring sizes
//   synthetic_test    256
//   synthetic_classes 4
//   blobs_spread      0.05
//   ring_radius       0.3
//   ring_noise        0.02
//   data_seed         0
//   probe_epochs      50
//   probe_lr          0.1
//   probe_batch       256
//   probe_hidden      0            0 = affine probe
//   out               out          output directory

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "curvssl/data.hpp"
#include "curvssl/trainer.hpp"

namespace curvssl {

enum class DatasetKind { Mnist, Blobs, Ring };

struct RunConfig {
  TrainConfig train;
  DatasetKind dataset = DatasetKind::Mnist;
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  std::size_t synthetic_train = 512;
  std::size_t synthetic_test = 256;
  std::size_t synthetic_classes = 4;
  double blobs_spread = 0.05;
  double ring_radius = 0.3;
  double ring_noise = 0.02;
  std::uint64_t data_seed = 0;
  ProbeConfig probe;
  std::filesystem::path out = "out";

  // TrainConfig invariants plus dataset consistency. Throws
  // InvariantViolation.
  void validate() const;
};

// Throws UnknownKey, TypeError or InvariantViolation (with the 1-based line
// number as `row` where one applies).
RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
// Throws IoFailure when the file cannot be read.
RunConfig parse_config(const std::filesystem::path& path);

// Every effective value, one key per line, in the table order above. Parsing
// the result yields the same RunConfig.
std::string render_config(const RunConfig& config);
void write_resolved_config(const RunConfig& config, const std::filesystem::path& dir);

struct DataSplit {
  Dataset train;
  Dataset test;
};

DataSplit load_datasets(const RunConfig& config);

}  // namespace curvssl
