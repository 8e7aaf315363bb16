#include "motioncast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace motioncast {

namespace {

double hypot2(double dx, double dy) { return std::sqrt(dx * dx + dy * dy); }

void check_lengths(const Path2& pred, const Path2& gt, const char* op) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(gt.size()) + ")");
  }
}

}  // namespace

double ade(const Path2& pred, const Path2& gt) {
  check_lengths(pred, gt, "ade");
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    total += hypot2(pred[t][0] - gt[t][0], pred[t][1] - gt[t][1]);
  }
  return total / pred.size();
}

double fde(const Path2& pred, const Path2& gt) {
  check_lengths(pred, gt, "fde");
  const std::size_t t = pred.size() - 1;
  return hypot2(pred[t][0] - gt[t][0], pred[t][1] - gt[t][1]);
}

namespace {

double min_over_modes(const std::vector<Path2>& modes, const Path2& gt,
                      double (*metric)(const Path2&, const Path2&),
                      int* best_mode) {
  if (modes.empty()) throw std::invalid_argument("best-of-k: no modes");
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double v = metric(modes[k], gt);
    if (v < best) {
      best = v;
      best_idx = static_cast<int>(k);
    }
  }
  if (best_mode) *best_mode = best_idx;
  return best;
}

}  // namespace

double min_ade_k(const std::vector<Path2>& modes, const Path2& gt,
                 int* best_mode) {
  return min_over_modes(modes, gt, &ade, best_mode);
}

double min_fde_k(const std::vector<Path2>& modes, const Path2& gt,
                 int* best_mode) {
  return min_over_modes(modes, gt, &fde, best_mode);
}

double mpjpe_at(const std::vector<std::array<double, 3>>& pred,
                const std::vector<std::array<double, 3>>& gt,
                const std::vector<std::uint8_t>& valid, int t_pred, int at_ms,
                double fps) {
  const int frame = static_cast<int>(std::llround(at_ms * fps / 1000.0)) - 1;
  if (frame < 0 || frame >= t_pred) {
    throw std::invalid_argument("mpjpe_at: " + std::to_string(at_ms) +
                                " ms is outside the prediction horizon");
  }
  if (pred.size() != gt.size() ||
      pred.size() != static_cast<std::size_t>(t_pred) * kPoseJointCount ||
      valid.size() != pred.size()) {
    throw std::invalid_argument("mpjpe_at: shape mismatch");
  }
  double total = 0.0;
  int n = 0;
  const std::size_t base = static_cast<std::size_t>(frame) * kPoseJointCount;
  for (int j = 0; j < kPoseJointCount; ++j) {
    if (!valid[base + j]) continue;
    const auto& p = pred[base + j];
    const auto& g = gt[base + j];
    total += std::sqrt((p[0] - g[0]) * (p[0] - g[0]) +
                       (p[1] - g[1]) * (p[1] - g[1]) +
                       (p[2] - g[2]) * (p[2] - g[2]));
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return 1000.0 * total / n;
}

// --- corruption ---------------------------------------------------------------

SceneRecord corrupt_pose(const SceneRecord& sample, const CorruptionSpec& spec) {
  if (spec.keep_fraction <= 0.0 || spec.keep_fraction > 1.0) {
    throw std::invalid_argument("corrupt_pose: keep fraction must be in (0,1]");
  }
  if (spec.gaussian_std < 0.0) {
    throw std::invalid_argument("corrupt_pose: std must be >= 0");
  }

  SceneRecord out = sample;
  const double sigma = spec.std_meters();
  std::mt19937_64 rng(mix_seed(spec.seed, 0xc0441));
  std::normal_distribution<double> noise(0.0, sigma);

  for (AgentTrack& agent : out.agents) {
    if (!agent.pose3d) continue;
    ModalityTensor& p = *agent.pose3d;
    for (int t = 0; t < sample.t_obs; ++t) {
      std::vector<int> valid_joints;
      for (int e = 0; e < p.elements; ++e) {
        if (p.is_valid(t, e)) valid_joints.push_back(e);
      }
      if (valid_joints.empty()) continue;
      const int n_keep = static_cast<int>(
          std::floor(spec.keep_fraction * valid_joints.size()));
      // uniform subset: partial Fisher-Yates over the valid ids
      for (int i = 0; i < n_keep; ++i) {
        std::uniform_int_distribution<int> pick(
            i, static_cast<int>(valid_joints.size()) - 1);
        std::swap(valid_joints[i], valid_joints[static_cast<std::size_t>(pick(rng))]);
      }
      for (std::size_t i = n_keep; i < valid_joints.size(); ++i) {
        p.invalidate(t, valid_joints[i]);
      }
      if (sigma > 0.0) {
        for (int i = 0; i < n_keep; ++i) {
          const int e = valid_joints[i];
          for (int f = 0; f < 3; ++f) p.value(t, e, f) += noise(rng);
        }
      }
    }
  }
  return out;
}

// --- evaluation -----------------------------------------------------------------

namespace {

Path2 gt_future_path(const SceneRecord& scene, int ego) {
  const AgentTrack& a = scene.agents[ego];
  Path2 gt(scene.t_pred);
  for (int j = 0; j < scene.t_pred; ++j) {
    const int t = scene.t_obs + j;
    gt[j] = {a.traj.value(t, 0, 0), a.traj.value(t, 0, 1)};
  }
  return gt;
}

struct PoseGt {
  std::vector<std::array<double, 3>> values;
  std::vector<std::uint8_t> valid;
  int n_valid = 0;
};

/// Pelvis-local future pose, matching the model's output frame.
PoseGt gt_future_pose(const SceneRecord& scene, int ego) {
  PoseGt gt;
  const AgentTrack& a = scene.agents[ego];
  gt.values.assign(static_cast<std::size_t>(scene.t_pred) * kPoseJointCount,
                   {0.0, 0.0, 0.0});
  gt.valid.assign(gt.values.size(), 0);
  if (!a.pose3d) return gt;
  const ModalityTensor& p = *a.pose3d;
  for (int j = 0; j < scene.t_pred; ++j) {
    const int t = scene.t_obs + j;
    if (!p.is_valid(t, 0)) continue;  // local pose needs the pelvis
    const double px = p.value(t, 0, 0), py = p.value(t, 0, 1),
                 pz = p.value(t, 0, 2);
    for (int e = 0; e < kPoseJointCount; ++e) {
      if (!p.is_valid(t, e)) continue;
      const std::size_t r = static_cast<std::size_t>(j) * kPoseJointCount + e;
      gt.values[r] = {p.value(t, e, 0) - px, p.value(t, e, 1) - py,
                      p.value(t, e, 2) - pz};
      gt.valid[r] = 1;
      ++gt.n_valid;
    }
  }
  return gt;
}

}  // namespace

MetricReport evaluate(const ModelState& state,
                      const std::vector<SceneRecord>& scenes,
                      const EvalTask& task) {
  MetricReport report;
  report.k = state.config.num_modes;
  double sum_ade = 0, sum_fde = 0, sum_min_ade = 0, sum_min_fde = 0;
  std::map<int, double> mpjpe_sums;
  std::map<int, int> mpjpe_counts;

  for (const SceneRecord& scene : scenes) {
    const std::vector<int> egos = ego_candidates(scene);
    int used = 0;
    for (int ego : egos) {
      if (used >= task.max_egos_per_scene) break;
      ++used;

      const SceneRecord* input = &scene;
      SceneRecord corrupted;
      if (task.corruption) {
        CorruptionSpec per_sample = *task.corruption;
        per_sample.seed =
            mix_seed(task.corruption->seed, std::hash<std::string>{}(scene.scene_id),
                     static_cast<std::uint64_t>(ego));
        corrupted = corrupt_pose(scene, per_sample);
        input = &corrupted;
      }

      // inputs the scene actually carries
      std::vector<Modality> subset;
      for (Modality m : task.input_modalities) {
        if (m == Modality::kTraj || scene.agents[ego].get(m)) subset.push_back(m);
      }

      PredictionOutput pred =
          predict(*input, ego, state, subset, task.output_modalities);

      const Path2 gt = gt_future_path(scene, ego);
      sum_ade += ade(pred.traj_modes[0], gt);
      sum_fde += fde(pred.traj_modes[0], gt);
      sum_min_ade += min_ade_k(pred.traj_modes, gt);
      sum_min_fde += min_fde_k(pred.traj_modes, gt);
      ++report.sample_count;

      if (!pred.pose.empty() && !task.mpjpe_ms.empty()) {
        const PoseGt pose_gt = gt_future_pose(scene, ego);
        if (pose_gt.n_valid > 0) {
          ++report.pose_sample_count;
          for (int ms : task.mpjpe_ms) {
            const double v = mpjpe_at(pred.pose, pose_gt.values, pose_gt.valid,
                                      scene.t_pred, ms, scene.fps);
            if (!std::isnan(v)) {
              mpjpe_sums[ms] += v;
              mpjpe_counts[ms] += 1;
            }
          }
        }
      }
    }
  }

  if (report.sample_count > 0) {
    report.ade = sum_ade / report.sample_count;
    report.fde = sum_fde / report.sample_count;
    report.min_ade_k = sum_min_ade / report.sample_count;
    report.min_fde_k = sum_min_fde / report.sample_count;
  }
  for (const auto& [ms, total] : mpjpe_sums) {
    report.mpjpe_at_ms[ms] = total / mpjpe_counts[ms];
  }
  return report;
}

PredictionOutput cv_reference_predict(const SceneRecord& scene, int ego_index,
                                      int k_modes) {
  const AgentTrack& a = scene.agents.at(ego_index);
  const int last = scene.t_obs - 1;
  if (!a.traj.is_valid(last, 0)) {
    throw std::runtime_error("cv_reference_predict: missing anchor frame");
  }
  double vx = 0.0, vy = 0.0;
  if (last >= 1 && a.traj.is_valid(last - 1, 0)) {
    vx = (a.traj.value(last, 0, 0) - a.traj.value(last - 1, 0, 0)) * scene.fps;
    vy = (a.traj.value(last, 0, 1) - a.traj.value(last - 1, 0, 1)) * scene.fps;
  }
  PredictionOutput out;
  out.t_pred = scene.t_pred;
  std::vector<std::array<double, 2>> path(scene.t_pred);
  for (int j = 0; j < scene.t_pred; ++j) {
    const double dt = (j + 1) / scene.fps;
    path[j] = {a.traj.value(last, 0, 0) + vx * dt,
               a.traj.value(last, 0, 1) + vy * dt};
  }
  out.traj_modes.assign(k_modes, path);
  return out;
}

MetricReport evaluate_cv_reference(const std::vector<SceneRecord>& scenes,
                                   int k_modes, int max_egos_per_scene) {
  MetricReport report;
  report.k = k_modes;
  double sum_ade = 0, sum_fde = 0, sum_min_ade = 0, sum_min_fde = 0;
  for (const SceneRecord& scene : scenes) {
    int used = 0;
    for (int ego : ego_candidates(scene)) {
      if (used >= max_egos_per_scene) break;
      ++used;
      PredictionOutput pred = cv_reference_predict(scene, ego, k_modes);
      const Path2 gt = gt_future_path(scene, ego);
      sum_ade += ade(pred.traj_modes[0], gt);
      sum_fde += fde(pred.traj_modes[0], gt);
      sum_min_ade += min_ade_k(pred.traj_modes, gt);
      sum_min_fde += min_fde_k(pred.traj_modes, gt);
      ++report.sample_count;
    }
  }
  if (report.sample_count > 0) {
    report.ade = sum_ade / report.sample_count;
    report.fde = sum_fde / report.sample_count;
    report.min_ade_k = sum_min_ade / report.sample_count;
    report.min_fde_k = sum_min_fde / report.sample_count;
  }
  return report;
}

void check_split_disjoint(const std::vector<std::string>& train_splits,
                          const std::string& eval_split) {
  if (eval_split.empty()) return;
  for (const std::string& t : train_splits) {
    if (!t.empty() && t == eval_split) {
      throw std::runtime_error(
          "split overlap: evaluation data is tagged '" + eval_split +
          "', which the checkpoint was trained on");
    }
  }
}

// --- navigation adapter ------------------------------------------------------------

std::vector<std::vector<Vec2>> CheckpointPredictor::predict(
    const std::vector<std::vector<Vec2>>& histories, int horizon) {
  const int n = static_cast<int>(histories.size());
  std::vector<std::vector<Vec2>> out(n);
  if (n == 0) return out;

  // one shared scene; each pedestrian takes a turn as the ego
  SceneRecord scene;
  scene.scene_id = "nav";
  scene.fps = fps_;
  scene.t_obs = t_obs_;
  scene.t_pred = horizon;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(histories[i].size()) < t_obs_) {
      throw std::invalid_argument("CheckpointPredictor: history too short");
    }
    AgentTrack a;
    a.agent_id = "p" + std::to_string(i);
    a.traj = ModalityTensor::make(Modality::kTraj, t_obs_ + horizon);
    const std::size_t off = histories[i].size() - t_obs_;
    for (int t = 0; t < t_obs_; ++t) {
      a.traj.set_valid(t, 0, true);
      a.traj.value(t, 0, 0) = histories[i][off + t].x;
      a.traj.value(t, 0, 1) = histories[i][off + t].y;
    }
    scene.agents.push_back(std::move(a));
  }

  for (int i = 0; i < n; ++i) {
    PredictionOutput pred =
        motioncast::predict(scene, i, *state_, {Modality::kTraj}, {Modality::kTraj});
    out[i].resize(horizon);
    for (int t = 0; t < horizon; ++t) {
      out[i][t] = {pred.traj_modes[0][t][0], pred.traj_modes[0][t][1]};
    }
  }
  return out;
}

}  // namespace motioncast
