#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motioncast/data.hpp"
#include "motioncast/navsim.hpp"

namespace motioncast {

namespace {

constexpr double kSimFps = 50.0;
constexpr double kSimDt = 1.0 / kSimFps;

// Unified joint ids produced by the gait model (the JTA-mapped subset).
constexpr int kPelvis = 0, kRHip = 1, kRKnee = 2, kRAnkle = 3;
constexpr int kLHip = 6, kLKnee = 7, kLAnkle = 8;
constexpr int kNeck = 13, kHeadCenter = 14;
constexpr int kLShoulder = 15, kLElbow = 16, kLWrist = 17;
constexpr int kRShoulder = 20, kRElbow = 21, kRWrist = 22;
constexpr int kHeadTop = 25, kRClav = 26, kLClav = 27;
constexpr int kSpine0 = 28, kSpine1 = 29, kSpine2 = 30, kSpine3 = 31;

const int kGaitJoints[] = {kPelvis, kRHip,      kRKnee,  kRAnkle, kLHip,
                           kLKnee,  kLAnkle,    kNeck,   kHeadCenter,
                           kLShoulder, kLElbow, kLWrist, kRShoulder,
                           kRElbow, kRWrist,    kHeadTop, kRClav, kLClav,
                           kSpine0, kSpine1,    kSpine2, kSpine3};

struct Joint3 {
  double x, y, z;
};

struct WalkerState {
  double heading = 0.0;   // walking direction, radians
  double phase = 0.0;     // gait cycle phase
  double yaw_offset = 0.0;  // torso yaw relative to heading
};

/// Skeleton for one frame. Legs follow the walking direction; the torso,
/// arms and head follow heading + yaw_offset.
void build_pose(const Vec2& pos, double speed, const WalkerState& w,
                std::array<Joint3, kPoseJointCount>& joints) {
  const double hx = std::cos(w.heading), hy = std::sin(w.heading);
  const double lx = -hy, ly = hx;  // left-hand lateral axis
  const double ty = w.heading + w.yaw_offset;
  const double thx = std::cos(ty), thy = std::sin(ty);
  const double tlx = -thy, tly = thx;

  const double amp = std::clamp(0.45 * speed, 0.0, 0.55);
  const double arm_amp = 0.5 * amp;
  const double phase = w.phase;

  const double pelvis_z = 0.93 + 0.015 * std::sin(2.0 * phase);
  auto at = [&](double fwd, double lat, double z, bool torso) {
    if (torso) {
      return Joint3{pos.x + fwd * thx + lat * tlx, pos.y + fwd * thy + lat * tly, z};
    }
    return Joint3{pos.x + fwd * hx + lat * lx, pos.y + fwd * hy + lat * ly, z};
  };

  joints[kPelvis] = at(0.0, 0.0, pelvis_z, true);

  // legs
  const double a_r = amp * std::sin(phase);
  const double a_l = amp * std::sin(phase + M_PI);
  auto leg = [&](int hip_id, int knee_id, int ankle_id, double side,
                 double ang) {
    const double hip_z = pelvis_z - 0.05;
    joints[hip_id] = at(0.0, side * 0.10, hip_z, true);
    const double thigh = 0.40, shin = 0.42;
    joints[knee_id] = at(thigh * std::sin(ang), side * 0.10,
                         hip_z - thigh * std::cos(ang), false);
    const double a2 = 0.7 * ang;
    joints[ankle_id] =
        at(thigh * std::sin(ang) + shin * std::sin(a2), side * 0.10,
           hip_z - thigh * std::cos(ang) - shin * std::cos(a2), false);
  };
  leg(kRHip, kRKnee, kRAnkle, -1.0, a_r);
  leg(kLHip, kLKnee, kLAnkle, +1.0, a_l);

  // spine chain and head
  joints[kSpine0] = at(0.0, 0.0, pelvis_z + 0.10, true);
  joints[kSpine1] = at(0.0, 0.0, pelvis_z + 0.20, true);
  joints[kSpine2] = at(0.0, 0.0, pelvis_z + 0.30, true);
  joints[kSpine3] = at(0.0, 0.0, pelvis_z + 0.40, true);
  const double neck_z = pelvis_z + 0.50;
  joints[kNeck] = at(0.0, 0.0, neck_z, true);
  joints[kHeadCenter] = at(0.0, 0.0, neck_z + 0.12, true);
  joints[kHeadTop] = at(0.0, 0.0, neck_z + 0.24, true);

  // arms counter-swing the legs
  joints[kLClav] = at(0.0, +0.09, neck_z - 0.02, true);
  joints[kRClav] = at(0.0, -0.09, neck_z - 0.02, true);
  const double b_l = arm_amp * std::sin(phase);        // left arm with right leg
  const double b_r = arm_amp * std::sin(phase + M_PI);
  auto arm = [&](int sh_id, int el_id, int wr_id, double side, double ang) {
    const double sh_z = neck_z - 0.03;
    joints[sh_id] = at(0.0, side * 0.19, sh_z, true);
    const double upper = 0.28, fore = 0.26;
    joints[el_id] = at(upper * std::sin(ang), side * 0.19,
                       sh_z - upper * std::cos(ang), true);
    const double a2 = 1.2 * ang;
    joints[wr_id] = at(upper * std::sin(ang) + fore * std::sin(a2),
                       side * 0.19, sh_z - upper * std::cos(ang) - fore * std::cos(a2),
                       true);
  };
  arm(kLShoulder, kLElbow, kLWrist, +1.0, b_l);
  arm(kRShoulder, kRElbow, kRWrist, -1.0, b_r);
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace

std::vector<SceneRecord> synth_generate(std::uint64_t seed, int n_scenes,
                                        const SynthConfig& cfg) {
  cfg.settings.validate();
  const int stride = fps_stride(kSimFps, cfg.settings.fps);
  const int t_obs = cfg.settings.t_obs();
  const int t_pred = cfg.settings.t_pred();
  const int frames = t_obs + t_pred;
  const int sim_steps = (frames - 1) * stride + 1;
  const int switch_step = (t_obs - 1) * stride;  // the last observed instant
  const int antic_steps =
      static_cast<int>(std::llround(cfg.turn_anticipation_seconds * kSimFps));

  SFParams sf;
  sf.dt = kSimDt;

  std::vector<SceneRecord> scenes;
  scenes.reserve(n_scenes);

  for (int si = 0; si < n_scenes; ++si) {
    std::mt19937_64 rng(mix_seed(seed, 0x5ce7e, si));
    std::uniform_int_distribution<int> count_dist(cfg.min_agents, cfg.max_agents);
    std::uniform_real_distribution<double> pos_dist(-cfg.arena_half, cfg.arena_half);
    std::uniform_real_distribution<double> speed_dist(cfg.speed_min, cfg.speed_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle_dist(-M_PI, M_PI);
    std::uniform_real_distribution<double> turn_dist(cfg.turn_min, cfg.turn_max);

    const int n = count_dist(rng);
    std::vector<SimAgent> walkers;
    std::vector<WalkerState> states;
    std::vector<double> turn_of(n, 0.0);  // 0 = walks straight

    for (int i = 0; i < n; ++i) {
      SimAgent a;
      for (int attempt = 0; attempt < 100; ++attempt) {
        a.position = {pos_dist(rng), pos_dist(rng)};
        bool ok = true;
        for (const SimAgent& other : walkers) {
          if ((a.position - other.position).norm() < 1.5) {
            ok = false;
            break;
          }
        }
        if (ok) break;
      }
      a.desired_speed = speed_dist(rng);
      const double dir = angle_dist(rng);
      const double dist = cfg.settings.obs_seconds * a.desired_speed + 8.0;
      a.goal = {a.position.x + dist * std::cos(dir),
                a.position.y + dist * std::sin(dir)};
      a.velocity = {a.desired_speed * std::cos(dir),
                    a.desired_speed * std::sin(dir)};
      walkers.push_back(a);

      WalkerState w;
      w.heading = dir;
      w.phase = 2.0 * M_PI * unit(rng);
      states.push_back(w);

      if (cfg.goal_switch && unit(rng) < cfg.switch_prob) {
        const double mag = turn_dist(rng);
        turn_of[i] = unit(rng) < 0.5 ? mag : -mag;
      }
    }

    // simulate, sampling every `stride` steps
    std::vector<std::vector<Vec2>> traj(n);
    std::vector<std::vector<std::array<Joint3, kPoseJointCount>>> poses(n);
    for (int i = 0; i < n; ++i) {
      traj[i].reserve(frames);
      poses[i].reserve(frames);
    }

    for (int step = 0; step < sim_steps; ++step) {
      if (step == switch_step) {
        for (int i = 0; i < n; ++i) {
          if (turn_of[i] == 0.0) continue;
          const double new_dir = states[i].heading + turn_of[i];
          walkers[i].goal = {walkers[i].position.x + 12.0 * std::cos(new_dir),
                             walkers[i].position.y + 12.0 * std::sin(new_dir)};
        }
      }

      for (int i = 0; i < n; ++i) {
        WalkerState& w = states[i];
        const double speed = walkers[i].velocity.norm();
        if (speed > 0.1) {
          w.heading = std::atan2(walkers[i].velocity.y, walkers[i].velocity.x);
        }
        w.phase += 2.0 * M_PI * (speed / 1.4) * kSimDt;

        // anticipatory torso yaw toward the upcoming turn, relaxing afterward
        double target = 0.0;
        if (turn_of[i] != 0.0 && step >= switch_step - antic_steps &&
            step < switch_step) {
          const double ramp =
              1.0 - static_cast<double>(switch_step - step) / antic_steps;
          target = std::clamp(0.5 * turn_of[i], -0.21, 0.21) * ramp;
        }
        w.yaw_offset += 0.25 * wrap_angle(target - w.yaw_offset);
      }

      if (step % stride == 0) {
        for (int i = 0; i < n; ++i) {
          traj[i].push_back(walkers[i].position);
          if (cfg.with_pose || cfg.with_boxes || cfg.with_2d) {
            std::array<Joint3, kPoseJointCount> joints{};
            build_pose(walkers[i].position, walkers[i].velocity.norm(),
                       states[i], joints);
            poses[i].push_back(joints);
          }
        }
      }
      sf_step(walkers, sf, kSimDt, &rng);
    }

    SceneRecord scene;
    scene.scene_id = cfg.scene_prefix + "-" + std::to_string(si);
    scene.fps = cfg.settings.fps;
    scene.t_obs = t_obs;
    scene.t_pred = t_pred;

    for (int i = 0; i < n; ++i) {
      AgentTrack agent;
      agent.agent_id = "a" + std::to_string(i);
      agent.traj = ModalityTensor::make(Modality::kTraj, frames);
      for (int t = 0; t < frames; ++t) {
        agent.traj.set_valid(t, 0, true);
        agent.traj.value(t, 0, 0) = traj[i][t].x;
        agent.traj.value(t, 0, 1) = traj[i][t].y;
      }

      if (cfg.with_pose) {
        ModalityTensor pose = ModalityTensor::make(Modality::kPose3d, frames);
        for (int t = 0; t < frames; ++t) {
          for (int j : kGaitJoints) {
            pose.set_valid(t, j, true);
            pose.value(t, j, 0) = poses[i][t][j].x;
            pose.value(t, j, 1) = poses[i][t][j].y;
            pose.value(t, j, 2) = poses[i][t][j].z;
          }
        }
        agent.pose3d = std::move(pose);
      }
      if (cfg.with_boxes) {
        ModalityTensor box = ModalityTensor::make(Modality::kBox3d, frames);
        for (int t = 0; t < frames; ++t) {
          double lo[3] = {1e18, 1e18, 1e18}, hi[3] = {-1e18, -1e18, -1e18};
          for (int j : kGaitJoints) {
            const Joint3& p = poses[i][t][j];
            const double c[3] = {p.x, p.y, p.z};
            for (int f = 0; f < 3; ++f) {
              lo[f] = std::min(lo[f], c[f]);
              hi[f] = std::max(hi[f], c[f]);
            }
          }
          for (int e = 0; e < 2; ++e) box.set_valid(t, e, true);
          for (int f = 0; f < 3; ++f) {
            box.value(t, 0, f) = lo[f] - 0.02;
            box.value(t, 1, f) = hi[f] + 0.02;
          }
        }
        agent.box3d = std::move(box);
      }
      if (cfg.with_2d) {
        // fixed oblique camera shared by the whole scene
        auto project = [](const Joint3& p) {
          const double u = 60.0 * p.x + 24.0 * p.y + 960.0;
          const double v = 540.0 - (60.0 * p.z + 12.0 * p.y);
          return std::array<double, 2>{u, v};
        };
        ModalityTensor p2 = ModalityTensor::make(Modality::kPose2d, frames);
        ModalityTensor b2 = ModalityTensor::make(Modality::kBox2d, frames);
        for (int t = 0; t < frames; ++t) {
          double lo[2] = {1e18, 1e18}, hi[2] = {-1e18, -1e18};
          for (int j : kGaitJoints) {
            const auto uv = project(poses[i][t][j]);
            p2.set_valid(t, j, true);
            p2.value(t, j, 0) = uv[0];
            p2.value(t, j, 1) = uv[1];
            for (int f = 0; f < 2; ++f) {
              lo[f] = std::min(lo[f], uv[f]);
              hi[f] = std::max(hi[f], uv[f]);
            }
          }
          for (int e = 0; e < 2; ++e) b2.set_valid(t, e, true);
          for (int f = 0; f < 2; ++f) {
            b2.value(t, 0, f) = lo[f] - 2.0;
            b2.value(t, 1, f) = hi[f] + 2.0;
          }
        }
        agent.pose2d = std::move(p2);
        agent.box2d = std::move(b2);
        agent.img_wh = {{1920, 1080}};
      }
      scene.agents.push_back(std::move(agent));
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace motioncast
