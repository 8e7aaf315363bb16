#pragma once

#include <array>
#include <random>
#include <vector>

#include "motioncast/tokenizer.hpp"

namespace motioncast {

enum class MaskMode { kDynamic, kFixed, kModalityMeta, kNone };

const char* mask_mode_name(MaskMode m);
MaskMode mask_mode_from_name(const std::string& name);

struct MaskSpec {
  int chunk = 1;  // sampling-mask chunk = max_fps / simulated_fps
  double r_s_low = 0.1;
  double r_s_high = 0.9;
  double r_t = 0.1;
  MaskMode mode = MaskMode::kDynamic;
  double fixed_ratio = 0.25;

  void validate() const;
};

struct MaskResult {
  std::vector<std::uint8_t> keep;      // aligned with seq.tokens
  std::vector<std::uint8_t> replace;   // kept, but swapped for the mask embedding
  double realized_r_s = 0.0;
  std::array<std::vector<int>, kModalityCount> dropped_frames;
  std::array<std::vector<int>, kModalityCount> dropped_elements;
};

/// Coarsens the observation grid: within every consecutive block of `chunk`
/// active slots, only the block's last (latest) slot survives. Simulates
/// max_fps / chunk. Deterministic.
MaskResult sampling_mask(const TokenSequence& seq, int chunk);

/// Draws r_s from the spec interval, removes that fraction of pose elements
/// at every observed frame, and replaces floor(r_t * frames) frames of each
/// of trajectory / 3-D box / 2-D box with the mask embedding.
MaskResult dynamic_st_mask(const TokenSequence& seq, const MaskSpec& spec,
                           std::mt19937_64& rng);

/// Removes exactly floor(fixed_ratio * kept pose tokens) pose tokens,
/// uniformly. The count never varies between draws.
MaskResult fixed_st_mask(const TokenSequence& seq, double fixed_ratio,
                         std::mt19937_64& rng);

/// Drops each auxiliary modality entirely with probability 1/2; the
/// trajectory always stays.
MaskResult modality_meta_mask(const TokenSequence& seq, std::mt19937_64& rng);

/// Merges a result into the sequence flags (keep intersects, replace unions).
void apply_mask(TokenSequence& seq, const MaskResult& result);

/// sampling_mask + apply + observation-grid coarsening in one step, so
/// successive applications compose like successive frame-rate reductions.
MaskResult apply_sampling_mask(TokenSequence& seq, int chunk);

/// Sampling mask (when chunk > 1) followed by the configured mode.
/// Returns the mode's result (identity result for kNone).
MaskResult apply_mask_pipeline(TokenSequence& seq, const MaskSpec& spec,
                               std::mt19937_64& rng);

}  // namespace motioncast
