#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "motioncast/checkpoint.hpp"
#include "motioncast/metrics.hpp"
#include "motioncast/model.hpp"

namespace motioncast {

struct TrainConfig {
  int epochs = 60;
  double base_lr = 1e-4;
  double decay_factor = 0.1;
  double decay_at_fraction = 0.8;
  int batch_size = 32;
  std::uint64_t seed = 0;
  MaskSpec mask;
  FrameSettings settings;
  std::vector<Modality> input_modalities{Modality::kTraj};
  std::vector<Modality> output_modalities{Modality::kTraj};
  double traj_loss_weight = 1.0;
  double pose_loss_weight = 1.0;
  double grad_clip = 1.0;
  int max_egos_per_scene = 1;

  void validate() const;
};

/// Step schedule: base_lr until floor(decay_at_fraction * epochs), decayed
/// by decay_factor from then on.
double lr_schedule(int epoch, const TrainConfig& cfg);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  std::unordered_map<std::string, Tensor> m, v;
};

/// Bias-corrected Adam over named gradients. Aborts on a non-finite
/// gradient, naming the parameter.
void adam_step(ModelState& state,
               const std::unordered_map<std::string, Tensor>& grads,
               AdamState& opt, double lr);

struct TrainLogRow {
  int epoch;
  int step;
  double lr;
  double total;
  double traj_term;
  double pose_term;
};

struct TrainSummary {
  std::vector<double> epoch_losses;
  std::vector<TrainLogRow> log;
};

/// Deterministic single-threaded loop over window-sized scenes. start_epoch
/// lets a resumed run continue the same seeded shuffle/mask streams;
/// end_epoch (-1 = cfg.epochs) stops early without changing the schedule.
TrainSummary train_model(ModelState& state,
                         const std::vector<SceneRecord>& scenes,
                         const TrainConfig& cfg, AdamState* opt = nullptr,
                         int start_epoch = 0, int end_epoch = -1);

/// Cuts raw canonical scenes into training windows under the configured
/// frame settings, resampling when rates differ.
std::vector<SceneRecord> prepare_windows(const std::vector<SceneRecord>& raw,
                                         const FrameSettings& settings);

void save_training_checkpoint(const std::string& path, const ModelState& state,
                              const AdamState& opt, int next_epoch,
                              const TrainConfig& cfg,
                              const std::vector<std::string>& train_splits);
ModelState load_training_checkpoint(const std::string& path, AdamState* opt,
                                    int* next_epoch,
                                    std::vector<std::string>* train_splits = nullptr);

struct PretrainResult {
  std::string checkpoint_path;
  TrainSummary summary;
};

/// Merged-dataset pre-training from canonical files; writes checkpoint,
/// loss CSV and the resolved config into out_dir.
PretrainResult pretrain(const std::vector<std::string>& dataset_paths,
                        const ModelConfig& mcfg, const TrainConfig& cfg,
                        const std::string& out_dir);

/// Reuses every parameter unchanged; only the data pipeline and the
/// sampling-mask chunk follow the new frame settings.
PretrainResult finetune(const std::string& checkpoint_path,
                        const std::string& dataset_path,
                        const FrameSettings& new_settings, TrainConfig cfg,
                        const std::string& out_dir);

struct FewShotRow {
  int n;
  std::string variant;  // "pretrained" or "scratch"
  double ade;
  double fde;
  double min_ade_k;
  double min_fde_k;
};

/// Fine-tunes on growing subsets of train_pool and evaluates each stage;
/// the from-scratch baseline shares the n grid.
std::vector<FewShotRow> few_shot(const ModelState& pretrained,
                                 const std::vector<SceneRecord>& train_pool,
                                 const std::vector<SceneRecord>& eval_set,
                                 const TrainConfig& cfg,
                                 std::vector<int> n_grid = {50, 100, 250, 500,
                                                            1000});

void write_loss_csv(const std::string& path,
                    const std::vector<TrainLogRow>& log);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json frame_settings_to_json(const FrameSettings& s);
FrameSettings frame_settings_from_json(const nlohmann::json& j);
std::vector<Modality> parse_modality_list(const std::string& csv);

}  // namespace motioncast
