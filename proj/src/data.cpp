#include "motioncast/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace motioncast {

namespace {

using json = nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const char* kModalityNames[kModalityCount] = {"traj", "bbox3d", "bbox2d",
                                              "pose3d", "pose2d"};
const char* kSourceNames[kPoseSourceCount] = {"jta", "h36m", "jrdb", "amass",
                                              "3dpw"};
// Native skeleton sizes of the source datasets.
const int kSourceJointCounts[kPoseSourceCount] = {22, 32, 17, 22, 24};

constexpr int X = -1;  // source has no such joint

const std::array<JointEntry, kPoseJointCount> kJointTable = {{
    // unified id, name,            {JTA, H36M, JRDB, AMASS, 3DPW}
    {0, "pelvis", {15, 0, 8, 0, 0}},
    {1, "right_hip", {16, 1, 10, 2, 2}},
    {2, "right_knee", {17, 2, 13, 5, 5}},
    {3, "right_ankle", {18, 3, 15, 8, 8}},
    {4, "right_foot_arch", {X, 4, X, 11, 11}},
    {5, "right_toes", {X, 5, X, X, X}},
    {6, "left_hip", {19, 6, 11, 1, 1}},
    {7, "left_knee", {20, 7, 14, 4, 4}},
    {8, "left_ankle", {21, 8, 16, 7, 7}},
    {9, "left_foot_arch", {X, 9, X, 10, 10}},
    {10, "left_toes", {X, 10, X, X, X}},
    {11, "spine_h36m", {X, 12, X, X, X}},
    {12, "thorax_chest", {X, 13, X, X, X}},
    {13, "neck", {2, 14, 4, 12, 12}},
    {14, "head_center", {1, 15, X, 15, 15}},
    {15, "left_shoulder", {8, 17, 5, 16, 16}},
    {16, "left_elbow", {9, 18, 7, 18, 18}},
    {17, "left_wrist", {10, 19, X, 20, 20}},
    {18, "left_outer_thigh", {X, 21, X, X, X}},
    {19, "left_hand", {X, 22, 12, X, 22}},
    {20, "right_shoulder", {4, 25, 3, 17, 17}},
    {21, "right_elbow", {5, 26, 6, 19, 19}},
    {22, "right_wrist", {6, 27, X, 21, 21}},
    {23, "right_outer_thigh", {X, 29, X, X, X}},
    {24, "right_hand", {X, 30, 9, X, 23}},
    {25, "head_top", {0, X, 0, X, X}},
    {26, "right_clavicle", {3, X, X, 14, 14}},
    {27, "left_clavicle", {7, X, X, 13, 13}},
    {28, "spine0_jta", {11, X, X, X, X}},
    {29, "spine1_jta", {12, X, X, X, X}},
    {30, "spine2_jta", {13, X, X, X, X}},
    {31, "spine3_jta", {14, X, X, X, X}},
    {32, "right_eye_jrdb", {X, X, 1, X, X}},
    {33, "left_eye_jrdb", {X, X, 2, X, X}},
    {34, "spine1_amass_3dpw", {X, X, X, 3, 3}},
    {35, "spine2_amass_3dpw", {X, X, X, 6, 6}},
    {36, "spine3_amass_3dpw", {X, X, X, 9, 9}},
    {37, "nose", {X, X, X, X, X}},
    {38, "forehead", {X, X, X, X, X}},
}};

}  // namespace

// --- modality / source naming ------------------------------------------------

const char* modality_name(Modality m) {
  return kModalityNames[static_cast<int>(m)];
}

Modality modality_from_name(const std::string& name) {
  for (int i = 0; i < kModalityCount; ++i) {
    if (name == kModalityNames[i]) return static_cast<Modality>(i);
  }
  throw std::invalid_argument("unknown modality: " + name);
}

int modality_feature_width(Modality m) {
  switch (m) {
    case Modality::kTraj:
    case Modality::kBox2d:
    case Modality::kPose2d:
      return 2;
    case Modality::kBox3d:
    case Modality::kPose3d:
      return 3;
  }
  throw std::logic_error("bad modality");
}

std::vector<Modality> all_modalities() {
  return {Modality::kTraj, Modality::kBox3d, Modality::kBox2d,
          Modality::kPose3d, Modality::kPose2d};
}

const char* pose_source_name(PoseSource s) {
  return kSourceNames[static_cast<int>(s)];
}

PoseSource pose_source_from_name(const std::string& name) {
  for (int i = 0; i < kPoseSourceCount; ++i) {
    if (name == kSourceNames[i]) return static_cast<PoseSource>(i);
  }
  throw std::invalid_argument("unknown pose source: " + name);
}

int pose_source_joint_count(PoseSource s) {
  return kSourceJointCounts[static_cast<int>(s)];
}

const std::array<JointEntry, kPoseJointCount>& joint_vocabulary() {
  return kJointTable;
}

int joint_old_id(PoseSource source, int unified_id) {
  return kJointTable[unified_id].old_id[static_cast<int>(source)];
}

// --- ModalityTensor -----------------------------------------------------------

ModalityTensor ModalityTensor::make(Modality m, int frames) {
  ModalityTensor t;
  t.modality = m;
  t.frames = frames;
  t.features = modality_feature_width(m);
  switch (m) {
    case Modality::kTraj:
      t.elements = 1;
      break;
    case Modality::kBox3d:
    case Modality::kBox2d:
      t.elements = 2;
      break;
    case Modality::kPose3d:
    case Modality::kPose2d:
      t.elements = kPoseJointCount;
      break;
  }
  t.values.assign(
      static_cast<std::size_t>(frames) * t.elements * t.features, kNan);
  t.valid.assign(static_cast<std::size_t>(frames) * t.elements, 0);
  return t;
}

void ModalityTensor::invalidate(int t, int e) {
  set_valid(t, e, false);
  for (int f = 0; f < features; ++f) value(t, e, f) = kNan;
}

int ModalityTensor::valid_count() const {
  int n = 0;
  for (std::uint8_t v : valid) n += v ? 1 : 0;
  return n;
}

std::vector<int> ModalityTensor::valid_elements() const {
  std::vector<int> out;
  for (int e = 0; e < elements; ++e) {
    for (int t = 0; t < frames; ++t) {
      if (is_valid(t, e)) {
        out.push_back(e);
        break;
      }
    }
  }
  return out;
}

const ModalityTensor* AgentTrack::get(Modality m) const {
  switch (m) {
    case Modality::kTraj:
      return &traj;
    case Modality::kBox3d:
      return box3d ? &*box3d : nullptr;
    case Modality::kBox2d:
      return box2d ? &*box2d : nullptr;
    case Modality::kPose3d:
      return pose3d ? &*pose3d : nullptr;
    case Modality::kPose2d:
      return pose2d ? &*pose2d : nullptr;
  }
  return nullptr;
}

ModalityTensor* AgentTrack::get(Modality m) {
  return const_cast<ModalityTensor*>(
      static_cast<const AgentTrack*>(this)->get(m));
}

ModalityTensor* AgentTrack::get_or_create(Modality m) {
  switch (m) {
    case Modality::kTraj:
      return &traj;
    case Modality::kBox3d:
      if (!box3d) box3d.emplace();
      return &*box3d;
    case Modality::kBox2d:
      if (!box2d) box2d.emplace();
      return &*box2d;
    case Modality::kPose3d:
      if (!pose3d) pose3d.emplace();
      return &*pose3d;
    case Modality::kPose2d:
      if (!pose2d) pose2d.emplace();
      return &*pose2d;
  }
  return nullptr;
}

// --- FrameSettings --------------------------------------------------------------

int FrameSettings::t_obs() const {
  return static_cast<int>(std::llround(obs_seconds * fps));
}

int FrameSettings::t_pred() const {
  return static_cast<int>(std::llround(pred_seconds * fps));
}

void FrameSettings::validate() const {
  if (fps <= 0) throw std::invalid_argument("frame settings: fps must be > 0");
  auto near_integer = [](double x) {
    return std::abs(x - std::llround(x)) < 1e-9 && std::llround(x) > 0;
  };
  if (!near_integer(obs_seconds * fps) || !near_integer(pred_seconds * fps)) {
    throw std::invalid_argument(
        "frame settings: horizons must be positive whole frame counts");
  }
}

int fps_stride(double src_fps, double dst_fps) {
  if (src_fps <= 0 || dst_fps <= 0) {
    throw std::invalid_argument("fps_stride: rates must be positive");
  }
  const double ratio = src_fps / dst_fps;
  const long long stride = std::llround(ratio);
  if (stride < 1 || std::abs(ratio - stride) > 1e-9) {
    std::ostringstream os;
    os << "unsupported rate " << src_fps << " -> " << dst_fps
       << " (stride must be a whole number)";
    throw std::invalid_argument(os.str());
  }
  return static_cast<int>(stride);
}

// --- remap_joints -----------------------------------------------------------------

ModalityTensor remap_joints(PoseSource source, const ModalityTensor& raw_pose) {
  if (raw_pose.modality != Modality::kPose3d &&
      raw_pose.modality != Modality::kPose2d) {
    throw std::invalid_argument("remap_joints: input must be a pose tensor");
  }
  const int expected = pose_source_joint_count(source);
  if (raw_pose.elements != expected) {
    throw std::runtime_error(
        "remap_joints: " + std::string(pose_source_name(source)) + " expects " +
        std::to_string(expected) + " joints, got " +
        std::to_string(raw_pose.elements));
  }

  ModalityTensor out = ModalityTensor::make(raw_pose.modality, raw_pose.frames);
  for (int u = 0; u < kPoseJointCount; ++u) {
    const int old_id = joint_old_id(source, u);
    if (old_id < 0) continue;
    for (int t = 0; t < raw_pose.frames; ++t) {
      if (!raw_pose.is_valid(t, old_id)) continue;
      out.set_valid(t, u, true);
      for (int f = 0; f < out.features; ++f) {
        out.value(t, u, f) = raw_pose.value(t, old_id, f);
      }
    }
  }
  return out;
}

// --- resample ----------------------------------------------------------------------

namespace {

std::vector<int> kept_indices_from_end(int frames, int stride) {
  std::vector<int> idx;
  for (int i = frames - 1; i >= 0; i -= stride) idx.push_back(i);
  std::reverse(idx.begin(), idx.end());
  return idx;
}

ModalityTensor select_frames(const ModalityTensor& t,
                             const std::vector<int>& idx) {
  ModalityTensor out = ModalityTensor::make(t.modality, static_cast<int>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int src = idx[k];
    for (int e = 0; e < t.elements; ++e) {
      out.set_valid(static_cast<int>(k), e, t.is_valid(src, e));
      for (int f = 0; f < t.features; ++f) {
        out.value(static_cast<int>(k), e, f) = t.value(src, e, f);
      }
    }
  }
  return out;
}

}  // namespace

ModalityTensor resample(const ModalityTensor& track, double src_fps,
                        double dst_fps) {
  const int stride = fps_stride(src_fps, dst_fps);
  return select_frames(track, kept_indices_from_end(track.frames, stride));
}

SceneRecord resample_scene(const SceneRecord& scene, double dst_fps) {
  const int stride = fps_stride(scene.fps, dst_fps);
  const auto idx = kept_indices_from_end(scene.total_frames(), stride);

  SceneRecord out;
  out.scene_id = scene.scene_id;
  out.fps = dst_fps;
  int pred = 0;
  for (int i : idx) {
    if (i >= scene.t_obs) ++pred;
  }
  out.t_pred = pred;
  out.t_obs = static_cast<int>(idx.size()) - pred;
  for (const AgentTrack& a : scene.agents) {
    AgentTrack na;
    na.agent_id = a.agent_id;
    na.img_wh = a.img_wh;
    na.traj = select_frames(a.traj, idx);
    for (Modality m :
         {Modality::kBox3d, Modality::kBox2d, Modality::kPose3d, Modality::kPose2d}) {
      if (const ModalityTensor* t = a.get(m)) {
        *na.get_or_create(m) = select_frames(*t, idx);
      }
    }
    out.agents.push_back(std::move(na));
  }
  return out;
}

// --- window ----------------------------------------------------------------------------

std::vector<SceneRecord> window(const SceneRecord& scene,
                                const FrameSettings& settings,
                                int stride_frames) {
  settings.validate();
  if (std::abs(scene.fps - settings.fps) > 1e-9) {
    throw std::invalid_argument("window: scene fps " + std::to_string(scene.fps) +
                                " does not match settings fps " +
                                std::to_string(settings.fps));
  }
  if (stride_frames <= 0) throw std::invalid_argument("window: stride must be > 0");

  const int w = settings.t_obs() + settings.t_pred();
  const int total = scene.total_frames();
  std::vector<SceneRecord> out;
  int win = 0;
  for (int start = 0; start + w <= total; start += stride_frames, ++win) {
    SceneRecord s;
    s.scene_id = scene.scene_id + "#w" + std::to_string(win);
    s.fps = scene.fps;
    s.t_obs = settings.t_obs();
    s.t_pred = settings.t_pred();
    std::vector<int> idx(w);
    for (int i = 0; i < w; ++i) idx[i] = start + i;
    for (const AgentTrack& a : scene.agents) {
      AgentTrack na;
      na.agent_id = a.agent_id;
      na.img_wh = a.img_wh;
      na.traj = select_frames(a.traj, idx);
      for (Modality m : {Modality::kBox3d, Modality::kBox2d, Modality::kPose3d,
                         Modality::kPose2d}) {
        if (const ModalityTensor* t = a.get(m)) {
          *na.get_or_create(m) = select_frames(*t, idx);
        }
      }
      s.agents.push_back(std::move(na));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<int> ego_candidates(const SceneRecord& scene) {
  std::vector<int> out;
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    const ModalityTensor& traj = scene.agents[i].traj;
    bool ok = traj.frames == scene.total_frames();
    for (int t = 0; ok && t < traj.frames; ++t) ok = traj.is_valid(t, 0);
    if (ok) out.push_back(static_cast<int>(i));
  }
  return out;
}

// --- normalize -----------------------------------------------------------------------------

SceneRecord normalize_sample(const SceneRecord& sample, int ego_index) {
  if (ego_index < 0 || ego_index >= static_cast<int>(sample.agents.size())) {
    throw std::invalid_argument("normalize_sample: ego index out of range");
  }
  const AgentTrack& ego = sample.agents[ego_index];
  const int anchor_frame = sample.t_obs - 1;
  if (anchor_frame < 0 || !ego.traj.is_valid(anchor_frame, 0)) {
    throw std::runtime_error(
        "normalize_sample: ego '" + ego.agent_id +
        "' has no valid trajectory at the last observed frame");
  }
  const double ax = ego.traj.value(anchor_frame, 0, 0);
  const double ay = ego.traj.value(anchor_frame, 0, 1);

  SceneRecord out = sample;
  for (AgentTrack& a : out.agents) {
    for (int t = 0; t < a.traj.frames; ++t) {
      if (!a.traj.is_valid(t, 0)) continue;
      a.traj.value(t, 0, 0) -= ax;
      a.traj.value(t, 0, 1) -= ay;
    }
    if (a.box3d) {
      ModalityTensor& b = *a.box3d;
      for (int t = 0; t < b.frames; ++t) {
        for (int e = 0; e < b.elements; ++e) {
          if (!b.is_valid(t, e)) continue;
          b.value(t, e, 0) -= ax;
          b.value(t, e, 1) -= ay;
        }
      }
    }
    if (a.pose3d) {
      ModalityTensor& p = *a.pose3d;
      for (int t = 0; t < p.frames; ++t) {
        if (!p.is_valid(t, 0)) {
          // pelvis unknown: the local pose of this frame is undefined
          for (int e = 0; e < p.elements; ++e) p.invalidate(t, e);
          continue;
        }
        const double px = p.value(t, 0, 0);
        const double py = p.value(t, 0, 1);
        const double pz = p.value(t, 0, 2);
        for (int e = 0; e < p.elements; ++e) {
          if (!p.is_valid(t, e)) continue;
          p.value(t, e, 0) -= px;
          p.value(t, e, 1) -= py;
          p.value(t, e, 2) -= pz;
        }
      }
    }
    if (a.img_wh) {
      const double w = (*a.img_wh)[0];
      const double h = (*a.img_wh)[1];
      for (Modality m : {Modality::kBox2d, Modality::kPose2d}) {
        ModalityTensor* t2 = a.get(m);
        if (!t2) continue;
        for (int t = 0; t < t2->frames; ++t) {
          for (int e = 0; e < t2->elements; ++e) {
            if (!t2->is_valid(t, e)) continue;
            t2->value(t, e, 0) /= w;
            t2->value(t, e, 1) /= h;
          }
        }
      }
      a.img_wh = {{1, 1}};
    }
  }
  return out;
}

// --- canonical NDJSON -------------------------------------------------------------------------

ParseError::ParseError(int line_no, const std::string& field_path,
                       const std::string& what)
    : std::runtime_error("canonical parse error at line " +
                         std::to_string(line_no) + ", field '" + field_path +
                         "': " + what),
      line(line_no),
      field(field_path) {}

namespace {

json entry_or_null(const ModalityTensor& t, int frame, int element) {
  if (!t.is_valid(frame, element)) return nullptr;
  json arr = json::array();
  for (int f = 0; f < t.features; ++f) arr.push_back(t.value(frame, element, f));
  return arr;
}

json traj_to_json(const ModalityTensor& t) {
  json frames = json::array();
  for (int k = 0; k < t.frames; ++k) frames.push_back(entry_or_null(t, k, 0));
  return frames;
}

json pose_to_json(const ModalityTensor& t) {
  json frames = json::array();
  for (int k = 0; k < t.frames; ++k) {
    json joints = json::array();
    for (int e = 0; e < t.elements; ++e) joints.push_back(entry_or_null(t, k, e));
    frames.push_back(std::move(joints));
  }
  return frames;
}

json box_to_json(const ModalityTensor& t) {
  json frames = json::array();
  for (int k = 0; k < t.frames; ++k) {
    if (!t.is_valid(k, 0) || !t.is_valid(k, 1)) {
      frames.push_back(nullptr);
      continue;
    }
    json corners = json::array();
    for (int e = 0; e < 2; ++e) {
      json c = json::array();
      for (int f = 0; f < t.features; ++f) c.push_back(t.value(k, e, f));
      corners.push_back(std::move(c));
    }
    frames.push_back(std::move(corners));
  }
  return frames;
}

struct FieldContext {
  int line;
  std::string path;
  const json& get(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) {
      throw ParseError(line, path.empty() ? key : path + "." + key, "missing");
    }
    return *it;
  }
  FieldContext sub(const std::string& p) const { return {line, path + "." + p}; }
};

void read_entry(const json& j, ModalityTensor& t, int frame, int element,
                const FieldContext& ctx) {
  if (j.is_null()) return;
  if (!j.is_array() || static_cast<int>(j.size()) != t.features) {
    throw ParseError(ctx.line, ctx.path,
                     "expected " + std::to_string(t.features) +
                         "-element coordinate array or null");
  }
  t.set_valid(frame, element, true);
  for (int f = 0; f < t.features; ++f) {
    if (!j[f].is_number()) {
      throw ParseError(ctx.line, ctx.path, "coordinate must be a number");
    }
    t.value(frame, element, f) = j[f].get<double>();
  }
}

ModalityTensor traj_from_json(const json& j, int frames, const FieldContext& ctx) {
  if (!j.is_array() || static_cast<int>(j.size()) != frames) {
    throw ParseError(ctx.line, ctx.path,
                     "expected " + std::to_string(frames) + " frames");
  }
  ModalityTensor t = ModalityTensor::make(Modality::kTraj, frames);
  for (int k = 0; k < frames; ++k) {
    read_entry(j[k], t, k, 0, ctx.sub("[" + std::to_string(k) + "]"));
  }
  return t;
}

ModalityTensor pose_from_json(const json& j, Modality m, int frames,
                              const FieldContext& ctx) {
  if (!j.is_array() || static_cast<int>(j.size()) != frames) {
    throw ParseError(ctx.line, ctx.path,
                     "expected " + std::to_string(frames) + " frames");
  }
  ModalityTensor t = ModalityTensor::make(m, frames);
  for (int k = 0; k < frames; ++k) {
    const json& joints = j[k];
    if (!joints.is_array() || static_cast<int>(joints.size()) != kPoseJointCount) {
      throw ParseError(ctx.line, ctx.path + "[" + std::to_string(k) + "]",
                       "expected 39 joints");
    }
    for (int e = 0; e < kPoseJointCount; ++e) {
      read_entry(joints[e], t, k, e,
                 ctx.sub("[" + std::to_string(k) + "][" + std::to_string(e) + "]"));
    }
  }
  return t;
}

ModalityTensor box_from_json(const json& j, Modality m, int frames,
                             const FieldContext& ctx) {
  if (!j.is_array() || static_cast<int>(j.size()) != frames) {
    throw ParseError(ctx.line, ctx.path,
                     "expected " + std::to_string(frames) + " frames");
  }
  ModalityTensor t = ModalityTensor::make(m, frames);
  for (int k = 0; k < frames; ++k) {
    const json& corners = j[k];
    if (corners.is_null()) continue;
    if (!corners.is_array() || corners.size() != 2) {
      throw ParseError(ctx.line, ctx.path + "[" + std::to_string(k) + "]",
                       "expected 2 corners or null");
    }
    for (int e = 0; e < 2; ++e) {
      read_entry(corners[e], t, k, e,
                 ctx.sub("[" + std::to_string(k) + "][" + std::to_string(e) + "]"));
    }
  }
  return t;
}

}  // namespace

void write_canonical(const std::string& path,
                     const std::vector<SceneRecord>& scenes,
                     const std::string& split) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json header;
  header["canonical_version"] = 1;
  if (split.empty()) {
    header["split"] = nullptr;
  } else {
    header["split"] = split;
  }
  out << header.dump() << "\n";

  for (const SceneRecord& s : scenes) {
    json js;
    js["scene_id"] = s.scene_id;
    if (std::abs(s.fps - std::llround(s.fps)) < 1e-12) {
      js["fps"] = static_cast<std::int64_t>(std::llround(s.fps));
    } else {
      js["fps"] = s.fps;
    }
    js["t_obs"] = s.t_obs;
    js["t_pred"] = s.t_pred;
    json agents = json::array();
    for (const AgentTrack& a : s.agents) {
      json ja;
      ja["agent_id"] = a.agent_id;
      ja["traj"] = traj_to_json(a.traj);
      ja["pose3d"] = a.pose3d ? pose_to_json(*a.pose3d) : json(nullptr);
      ja["bbox3d"] = a.box3d ? box_to_json(*a.box3d) : json(nullptr);
      ja["bbox2d"] = a.box2d ? box_to_json(*a.box2d) : json(nullptr);
      ja["pose2d"] = a.pose2d ? pose_to_json(*a.pose2d) : json(nullptr);
      ja["img_wh"] =
          a.img_wh ? json::array({(*a.img_wh)[0], (*a.img_wh)[1]}) : json(nullptr);
      agents.push_back(std::move(ja));
    }
    js["agents"] = std::move(agents);
    out << js.dump() << "\n";
  }
}

CanonicalFile read_canonical(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);

  CanonicalFile file;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
    }
    if (first) {
      first = false;
      if (j.is_object() && j.contains("canonical_version")) {
        if (j.contains("split") && j["split"].is_string()) {
          file.split = j["split"].get<std::string>();
        }
        continue;
      }
    }

    FieldContext ctx{line_no, ""};
    SceneRecord s;
    const json& jid = ctx.get(j, "scene_id");
    if (!jid.is_string()) throw ParseError(line_no, "scene_id", "must be a string");
    s.scene_id = jid.get<std::string>();
    const json& jfps = ctx.get(j, "fps");
    if (!jfps.is_number()) throw ParseError(line_no, "fps", "must be a number");
    s.fps = jfps.get<double>();
    const json& jto = ctx.get(j, "t_obs");
    const json& jtp = ctx.get(j, "t_pred");
    if (!jto.is_number_integer() || !jtp.is_number_integer()) {
      throw ParseError(line_no, "t_obs/t_pred", "must be integers");
    }
    s.t_obs = jto.get<int>();
    s.t_pred = jtp.get<int>();
    if (s.fps <= 0 || s.t_obs < 0 || s.t_pred < 0 || s.total_frames() == 0) {
      throw ParseError(line_no, "fps/t_obs/t_pred", "invalid frame settings");
    }

    const json& jagents = ctx.get(j, "agents");
    if (!jagents.is_array()) throw ParseError(line_no, "agents", "must be an array");
    const int frames = s.total_frames();
    int ai = 0;
    for (const json& ja : jagents) {
      const std::string apath = "agents[" + std::to_string(ai) + "]";
      FieldContext actx{line_no, apath};
      AgentTrack a;
      const json& aid = actx.get(ja, "agent_id");
      if (!aid.is_string())
        throw ParseError(line_no, apath + ".agent_id", "must be a string");
      a.agent_id = aid.get<std::string>();
      a.traj = traj_from_json(actx.get(ja, "traj"), frames,
                              {line_no, apath + ".traj"});
      if (ja.contains("pose3d") && !ja["pose3d"].is_null()) {
        a.pose3d = pose_from_json(ja["pose3d"], Modality::kPose3d, frames,
                                  {line_no, apath + ".pose3d"});
      }
      if (ja.contains("bbox3d") && !ja["bbox3d"].is_null()) {
        a.box3d = box_from_json(ja["bbox3d"], Modality::kBox3d, frames,
                                {line_no, apath + ".bbox3d"});
      }
      if (ja.contains("bbox2d") && !ja["bbox2d"].is_null()) {
        a.box2d = box_from_json(ja["bbox2d"], Modality::kBox2d, frames,
                                {line_no, apath + ".bbox2d"});
      }
      if (ja.contains("pose2d") && !ja["pose2d"].is_null()) {
        a.pose2d = pose_from_json(ja["pose2d"], Modality::kPose2d, frames,
                                  {line_no, apath + ".pose2d"});
      }
      if (ja.contains("img_wh") && !ja["img_wh"].is_null()) {
        const json& wh = ja["img_wh"];
        if (!wh.is_array() || wh.size() != 2) {
          throw ParseError(line_no, apath + ".img_wh", "expected [w,h] or null");
        }
        a.img_wh = {{wh[0].get<int>(), wh[1].get<int>()}};
      }
      s.agents.push_back(std::move(a));
      ++ai;
    }
    file.scenes.push_back(std::move(s));
  }
  return file;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  // splitmix64 over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) +
                    0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace motioncast
