#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace motioncast {

// --- modalities -----------------------------------------------------------

enum class Modality { kTraj = 0, kBox3d, kBox2d, kPose3d, kPose2d };
constexpr int kModalityCount = 5;
constexpr int kPoseJointCount = 39;

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);
int modality_feature_width(Modality m);  // 2 for planar, 3 for 3-D cues
std::vector<Modality> all_modalities();

// --- unified joint vocabulary ----------------------------------------------

enum class PoseSource { kJta = 0, kH36m, kJrdb, kAmass, k3dpw };
constexpr int kPoseSourceCount = 5;

const char* pose_source_name(PoseSource s);
PoseSource pose_source_from_name(const std::string& name);
int pose_source_joint_count(PoseSource s);

struct JointEntry {
  int unified_id;
  const char* name;
  // old id per source; -1 means the source has no such joint
  std::array<int, kPoseSourceCount> old_id;
};

/// The 39-entry unified joint vocabulary, indexed by unified id.
const std::array<JointEntry, kPoseJointCount>& joint_vocabulary();

/// -1 when the source does not annotate this unified joint.
int joint_old_id(PoseSource source, int unified_id);

// --- tensors and scenes -----------------------------------------------------

/// One modality stream of one agent: frames x elements x features, with a
/// per-(frame, element) validity mask. Invalid entries hold quiet NaN and
/// must never reach downstream math.
struct ModalityTensor {
  Modality modality = Modality::kTraj;
  int frames = 0;
  int elements = 0;
  int features = 0;
  std::vector<double> values;   // frames * elements * features, row-major
  std::vector<std::uint8_t> valid;  // frames * elements

  static ModalityTensor make(Modality m, int frames);

  double& value(int t, int e, int f) {
    return values[(static_cast<std::size_t>(t) * elements + e) * features + f];
  }
  double value(int t, int e, int f) const {
    return values[(static_cast<std::size_t>(t) * elements + e) * features + f];
  }
  bool is_valid(int t, int e) const {
    return valid[static_cast<std::size_t>(t) * elements + e] != 0;
  }
  void set_valid(int t, int e, bool v) {
    valid[static_cast<std::size_t>(t) * elements + e] = v ? 1 : 0;
  }
  void invalidate(int t, int e);

  int valid_count() const;
  /// Elements with at least one valid frame.
  std::vector<int> valid_elements() const;
};

struct AgentTrack {
  std::string agent_id;
  ModalityTensor traj;  // always present
  std::optional<ModalityTensor> box3d;
  std::optional<ModalityTensor> box2d;
  std::optional<ModalityTensor> pose3d;
  std::optional<ModalityTensor> pose2d;
  std::optional<std::array<int, 2>> img_wh;

  const ModalityTensor* get(Modality m) const;
  ModalityTensor* get(Modality m);
  ModalityTensor* get_or_create(Modality m);
};

struct SceneRecord {
  std::string scene_id;
  double fps = 0;  // fractional rates (2.5) are valid
  int t_obs = 0;
  int t_pred = 0;
  std::vector<AgentTrack> agents;

  int total_frames() const { return t_obs + t_pred; }
};

struct FrameSettings {
  double obs_seconds = 2.0;
  double pred_seconds = 4.0;
  double fps = 5;

  int t_obs() const;
  int t_pred() const;
  void validate() const;
};

/// Whole-number frame stride between two rates; throws on fractional ratios.
int fps_stride(double src_fps, double dst_fps);

// --- operations -------------------------------------------------------------

/// Places raw source-indexed pose joints into the 39-slot unified order.
/// raw_pose must be a kPose3d/kPose2d tensor whose element axis uses the
/// source dataset's native joint ids.
ModalityTensor remap_joints(PoseSource source, const ModalityTensor& raw_pose);

/// Integer-stride downsampling that always retains the last frame.
ModalityTensor resample(const ModalityTensor& track, double src_fps,
                        double dst_fps);
SceneRecord resample_scene(const SceneRecord& scene, double dst_fps);

/// Sliding windows of exactly settings.t_obs()+t_pred() frames.
std::vector<SceneRecord> window(const SceneRecord& scene,
                                const FrameSettings& settings,
                                int stride_frames);

/// Agents whose trajectory is valid on every frame of the window.
std::vector<int> ego_candidates(const SceneRecord& scene);

/// Translates trajectories (and 3-D boxes) so the ego's last observed
/// position is the origin, rewrites 3-D poses pelvis-relative, and scales
/// 2-D cues into [0,1] by the declared image size. Idempotent.
SceneRecord normalize_sample(const SceneRecord& sample, int ego_index);

// --- canonical NDJSON --------------------------------------------------------

struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& field, const std::string& what);
  int line;
  std::string field;
};

struct CanonicalFile {
  std::string split;  // empty when the file carries no split tag
  std::vector<SceneRecord> scenes;
};

CanonicalFile read_canonical(const std::string& path);
void write_canonical(const std::string& path, const std::vector<SceneRecord>& scenes,
                     const std::string& split = "");

// --- synthetic data -----------------------------------------------------------

struct SynthConfig {
  int min_agents = 2;
  int max_agents = 4;
  double arena_half = 8.0;  // walkers spawn in [-arena_half, arena_half]^2
  double speed_min = 0.8;   // m/s
  double speed_max = 1.5;   // m/s
  FrameSettings settings;   // 2 s / 4 s @ 5 fps default
  bool with_pose = true;
  bool with_boxes = true;
  bool with_2d = false;
  /// Walkers re-target at the observation/prediction boundary and telegraph
  /// the turn with torso yaw over the preceding anticipation window, so the
  /// pose carries predictive signal the past trajectory does not.
  bool goal_switch = true;
  double switch_prob = 0.65;
  double turn_min = 0.4;  // |turn| radians
  double turn_max = 1.1;
  double turn_anticipation_seconds = 0.6;
  std::string scene_prefix = "synth";
};

std::vector<SceneRecord> synth_generate(std::uint64_t seed, int n_scenes,
                                        const SynthConfig& cfg);

// --- misc ---------------------------------------------------------------------

/// Stable seed derivation for independent random streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index = 0);

}  // namespace motioncast
