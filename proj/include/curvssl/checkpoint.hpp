#pragma once

// Checkpoint file (text, line oriented, values as IEEE-754 bit patterns in
// 16 lowercase hex digits so every double round-trips exactly):
//
//   curvssl-checkpoint 1
//   architecture <input_dim> encoder <w1,w2,...> projector <w1,w2,...> activation relu
//   seed <u64>
//   epochs <count>
//   config_digest <16 hex>            FNV-1a 64 of the config block below
//   config <line count>
//   <verbatim config lines>
//   weights <lambda_emb> <lambda_curv> <alpha_curv>
//   history <row count>
//   <epoch> <total> <emb_diag> <emb_offdiag> <curv_diag> <curv_offdiag>
//   tensors <count>
//   tensor <name> <rows> <cols>
//   <rows*cols hex values, up to 8 per line>
//   ...
//   end

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "curvssl/losses.hpp"
#include "curvssl/model.hpp"

namespace curvssl {

struct Provenance {
  std::uint64_t seed = 0;
  std::size_t epochs_completed = 0;
  std::string config_text;
  LossWeights weights;
  std::vector<LossBreakdown> loss_history;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Checkpoint {
  Architecture architecture;
  Parameters parameters;
  Provenance provenance;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr int kCheckpointFormatVersion = 1;

std::uint64_t config_digest(std::string_view text);

std::string encode_double(double v);
double decode_double(std::string_view hex);

// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws IoFailure, FormatVersionMismatch (wrong version, malformed or
// truncated body) or DigestMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace curvssl
