#pragma once

#include <array>
#include <string>
#include <vector>

#include "motioncast/data.hpp"
#include "motioncast/tensor.hpp"

namespace motioncast {

/// One token: a specific element of one modality at a specific grid slot.
/// Observation slots are <= 0 with 0 the last observed frame; prediction
/// slots are >= 1.
struct TokenMeta {
  Modality modality = Modality::kTraj;
  int element = 0;
  int frame = -1;     // frame index within the side, -1 for padding slots
  int grid_slot = 0;
  bool is_future_query = false;
  bool is_valid = false;  // carries data (queries count as valid)
  bool is_padding = false;
  bool kept = false;      // participates in attention
  bool replaced = false;  // in sequence but carrying the mask embedding
  int row = -1;           // row in the assembled feature matrix
  std::array<double, 3> value{};  // source coordinates, f_c entries used
};

struct TokenSequence {
  std::vector<TokenMeta> tokens;
  double fps = 0;
  int grid_stride = 0;  // max_fps / fps
  int t_obs = 0;
  int t_pred = 0;
  /// Observation grid slots still alive, descending from 0; sampling masks
  /// coarsen this list.
  std::vector<int> active_obs_slots;
  Tensor features;  // [rows x D], built by assemble_features
  std::string sort_key;  // content-derived ordering key for the agent

  int in_sequence_count() const;
  int kept_count(Modality m, bool include_replaced) const;
};

/// Learned inputs the tokenizer needs from the model.
struct ProjectionParams {
  std::array<Tensor, kModalityCount> weight;  // [f_c x D] each, undefined if unregistered
  std::array<Tensor, kModalityCount> bias;    // [1 x D]
  Tensor mask_embedding;                      // [1 x D]
  Tensor traj_query;                          // [1 x D]
  Tensor pose_query;                          // [39 x D]
};

/// Fixed sinusoidal tables, indexed by |grid_slot| and side, with a distinct
/// band per modality. Deterministic and horizon-agnostic.
class BiDirEncoder {
 public:
  explicit BiDirEncoder(int dim) : dim_(dim) {}
  int dim() const { return dim_; }
  void encode(Modality m, bool prediction_side, int abs_slot, double* out) const;
  std::vector<double> encode(Modality m, bool prediction_side, int abs_slot) const;

 private:
  int dim_;
};

// --- pipeline steps -----------------------------------------------------------

/// One token per (observed frame, element) of every selected modality the
/// agent carries. Invalid entries become invalid tokens.
TokenSequence project(const AgentTrack& agent, int t_obs, int t_pred,
                      const std::vector<Modality>& modalities);

/// Places tokens on the max-fps virtual grid, anchored so the last observed
/// frame is slot 0, and inserts padding tokens on the empty slots.
void upsample_pad(TokenSequence& seq, double fps, double max_fps = 50.0);

/// One learned query token per future frame per output element, at
/// prediction-side grid slots. Queries are never masked.
void append_future_queries(TokenSequence& seq,
                           const std::vector<Modality>& output_modalities);

/// Adds the positional table to every in-sequence row of seq.features.
/// Returns the constant encoding matrix that was added.
Tensor bidir_encode(TokenSequence& seq, const BiDirEncoder& enc);

/// Builds seq.features: modality projections for kept tokens, the mask
/// embedding for replaced tokens, learned queries, plus positional encoding.
/// Records onto the active graph.
void assemble_features(TokenSequence& seq, const ProjectionParams& params,
                       const BiDirEncoder& enc);

// --- token accounting --------------------------------------------------------

struct TokenBudget {
  /// Tokens each modality contributes to the stage-1 sequence (replaced
  /// tokens still occupy their slot).
  std::array<int, kModalityCount> sequence_tokens{};
  int l1 = 0;  // sum over present modalities, pose terms shrunk by the drop
  int l2 = 0;  // n_agents * (traj + kept 3-D pose)
  /// Tokens still carrying data after the temporal replacements.
  std::array<int, kModalityCount> data_tokens{};
  int l1_realized = 0;
  int l2_realized = 0;
};

/// Exact kept-token accounting for one agent configuration. elements[m] is
/// the number of elements with data for modality m (0 = absent), t_frames the
/// per-modality post-sampling frame count, realized_r_s the drawn spatial
/// ratio, r_t the temporal ratio.
TokenBudget token_budget(const std::array<int, kModalityCount>& elements,
                         int t_frames, double realized_r_s, double r_t,
                         int n_agents);

}  // namespace motioncast
