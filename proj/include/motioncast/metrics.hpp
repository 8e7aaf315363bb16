#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motioncast/checkpoint.hpp"
#include "motioncast/model.hpp"
#include "motioncast/navsim.hpp"

namespace motioncast {

using Path2 = std::vector<std::array<double, 2>>;

/// Mean Euclidean displacement over frames.
double ade(const Path2& pred, const Path2& gt);
/// Displacement at the final frame.
double fde(const Path2& pred, const Path2& gt);
/// Best-of-K; the minimizing mode index is reported through best_mode.
double min_ade_k(const std::vector<Path2>& modes, const Path2& gt,
                 int* best_mode = nullptr);
double min_fde_k(const std::vector<Path2>& modes, const Path2& gt,
                 int* best_mode = nullptr);

/// Mean joint error in millimeters at the frame round(at_ms*fps/1000)-1.
/// pred/gt/valid are flattened [t_pred x 39]; NaN when no joint is valid.
double mpjpe_at(const std::vector<std::array<double, 3>>& pred,
                const std::vector<std::array<double, 3>>& gt,
                const std::vector<std::uint8_t>& valid, int t_pred, int at_ms,
                double fps);

// --- corruption ------------------------------------------------------------

struct CorruptionSpec {
  double keep_fraction = 1.0;  // of the valid joints, per frame
  double gaussian_std = 0.0;
  enum class Unit { kMillimeters, kMeters } std_unit = Unit::kMillimeters;
  std::uint64_t seed = 0;

  double std_meters() const {
    return std_unit == Unit::kMillimeters ? gaussian_std / 1000.0 : gaussian_std;
  }
};

/// Degrades the OBSERVED 3-D pose of every agent: per frame a uniformly
/// chosen joint subset goes invalid, survivors get i.i.d. Gaussian noise.
/// Future frames (the ground truth) are never touched.
SceneRecord corrupt_pose(const SceneRecord& sample, const CorruptionSpec& spec);

// --- evaluation ---------------------------------------------------------------

struct MetricReport {
  double ade = 0.0;
  double fde = 0.0;
  double min_ade_k = 0.0;
  double min_fde_k = 0.0;
  int k = 0;
  std::map<int, double> mpjpe_at_ms;  // ms -> mm
  int sample_count = 0;
  int pose_sample_count = 0;
};

struct EvalTask {
  std::vector<Modality> input_modalities{Modality::kTraj};
  std::vector<Modality> output_modalities{Modality::kTraj};
  std::optional<CorruptionSpec> corruption;
  std::vector<int> mpjpe_ms{};   // pose checkpoints only
  int max_egos_per_scene = 1 << 30;
};

/// Deterministic sweep over every valid ego of every scene.
MetricReport evaluate(const ModelState& state,
                      const std::vector<SceneRecord>& scenes,
                      const EvalTask& task);

/// Constant-velocity reference prediction for one ego (K identical modes).
PredictionOutput cv_reference_predict(const SceneRecord& scene, int ego_index,
                                      int k_modes);
/// The same sweep as evaluate, using the constant-velocity reference.
MetricReport evaluate_cv_reference(const std::vector<SceneRecord>& scenes,
                                   int k_modes, int max_egos_per_scene = 1 << 30);

/// Split discipline: both tags declared and equal is a contract violation.
void check_split_disjoint(const std::vector<std::string>& train_splits,
                          const std::string& eval_split);

// --- navigation adapter ---------------------------------------------------------

/// Drives the navsim Predictor interface with a trained checkpoint: each
/// pedestrian in turn becomes the ego of a trajectory-only window.
class CheckpointPredictor : public Predictor {
 public:
  CheckpointPredictor(const ModelState* state, double fps, int t_obs)
      : state_(state), fps_(fps), t_obs_(t_obs) {}
  int required_history() const override { return t_obs_; }
  std::vector<std::vector<Vec2>> predict(
      const std::vector<std::vector<Vec2>>& histories, int horizon) override;

 private:
  const ModelState* state_;
  double fps_;
  int t_obs_;
};

}  // namespace motioncast
