#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "motioncast/data.hpp"
#include "motioncast/masking.hpp"
#include "motioncast/tensor.hpp"
#include "motioncast/tokenizer.hpp"

namespace motioncast {

struct ModelConfig {
  int hidden_dim = 128;
  int heads = 4;
  int layers_stage1 = 6;   // cross-modality transformer
  int layers_stage2 = 4;   // social-interaction transformer
  int ff_mult = 4;
  int num_modes = 20;      // K trajectory hypotheses
  double max_fps = 50.0;
  double ln_eps = 1e-5;

  void validate() const;
};

/// All learnable parameters, registered in a fixed order so the count and
/// the checkpoint layout are deterministic in the config.
class ModelState {
 public:
  ModelState() = default;
  ModelState(const ModelConfig& cfg, std::uint64_t seed);

  ModelConfig config;

  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  bool has_param(const std::string& name) const;
  std::vector<std::pair<std::string, Tensor>>& parameters() { return params_; }
  const std::vector<std::pair<std::string, Tensor>>& parameters() const {
    return params_;
  }
  long long parameter_count() const;
  ProjectionParams projection_params() const;
  BiDirEncoder encoder() const { return BiDirEncoder(config.hidden_dim); }

  /// Deep copy (fresh storage, same values).
  ModelState clone() const;

 private:
  Tensor& add(const std::string& name, std::vector<int> shape);
  std::vector<std::pair<std::string, Tensor>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One masked, assembled sample; agents[0] is the ego, neighbors follow in
/// canonical content order.
struct TokenizedSample {
  std::vector<TokenSequence> agents;
};

struct ForwardOutput {
  std::vector<Tensor> traj_modes;  // K tensors of [t_pred x 2]
  Tensor pose;                     // [t_pred*39 x 3]; undefined without pose queries
  int t_pred = 0;
};

/// Normalizes nothing itself: callers pass an already-normalized window.
/// Draws masks (in canonical agent order), assembles features on the active
/// graph, and orders neighbors by their content key.
TokenizedSample tokenize_sample(const SceneRecord& normalized, int ego_index,
                                const std::vector<Modality>& input_modalities,
                                const std::vector<Modality>& output_modalities,
                                const ModelState& state, const MaskSpec& mask,
                                std::mt19937_64& rng);

/// Stage 1 per agent over its kept tokens, stage 2 once over all agents'
/// trajectory and 3-D pose tokens plus the ego's future queries, then the
/// output heads on the ego query outputs.
ForwardOutput model_forward(const TokenizedSample& sample, const ModelState& state);

/// Pre-norm attention + feed-forward layers of one stage ("s1" or "s2"),
/// applied to an arbitrary token matrix.
Tensor transformer_stack(Tensor x, const ModelState& state, const char* stage,
                         int layers);

struct SupervisionTarget {
  Tensor traj_gt;      // [t_pred x 2]
  Tensor pose_gt;      // [t_pred*39 x 3], zeros where invalid
  Tensor pose_mask;    // same shape, 1 where supervised
  int pose_valid_count = 0;
  double traj_weight = 1.0;
  double pose_weight = 1.0;
};

SupervisionTarget make_target(const SceneRecord& normalized, int ego_index,
                              bool supervise_pose);

/// Winner-takes-all trajectory L2 plus masked pose L2. The unweighted term
/// values are reported through the optional out-params.
Tensor model_loss(const ForwardOutput& out, const SupervisionTarget& target,
                  double* traj_term = nullptr, double* pose_term = nullptr);

struct PredictionOutput {
  std::vector<std::vector<std::array<double, 2>>> traj_modes;  // K x t_pred
  std::vector<std::array<double, 3>> pose;  // t_pred*39, pelvis-local meters
  std::array<std::uint8_t, kPoseJointCount> pose_joint_valid{};
  int t_pred = 0;
};

/// Inference on one window: tokenizes the chosen modalities with no
/// training-time masking beyond the frame-rate sampling mask, then returns
/// world-frame trajectories (pose stays pelvis-local).
PredictionOutput predict(const SceneRecord& window_scene, int ego_index,
                         const ModelState& state,
                         const std::vector<Modality>& input_subset,
                         const std::vector<Modality>& output_modalities);

}  // namespace motioncast
