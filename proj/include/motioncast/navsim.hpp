#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace motioncast {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double c) const { return {x * c, y * c}; }
  double norm() const;
  Vec2 normalized() const;  // zero vector stays zero
};

struct SimAgent {
  Vec2 position;
  Vec2 velocity;
  Vec2 goal;
  double radius = 0.3;
  double desired_speed = 1.3;
};

struct SFParams {
  double relaxation_time = 0.5;  // s
  double repulsion_strength = 2.0;
  double repulsion_range = 0.3;  // m
  double predictor_gain = 1.0;   // weight on prediction-derived forces
  double prediction_discount = 0.9;  // per-future-step decay
  double dt = 0.04;              // s
  double goal_tolerance = 0.3;   // m
  double speed_cap_factor = 1.5; // of desired_speed
};

/// Goal attraction plus exponential repulsion from the other agents.
/// Coincident agents repel along a random unit vector drawn from rng
/// ((1,0) when rng is null).
Vec2 social_force(const SimAgent& self, const std::vector<SimAgent>& others,
                  const SFParams& params, std::mt19937_64* rng);

/// Advances every agent one step of symplectic Euler under mutual social
/// forces. All accelerations are computed from the pre-step state.
void sf_step(std::vector<SimAgent>& agents, const SFParams& params, double dt,
             std::mt19937_64* rng = nullptr);

/// Repulsion from each neighbor's predicted future positions, discounted
/// per step and scaled by predictor_gain.
Vec2 predictor_force(const SimAgent& robot,
                     const std::vector<std::vector<Vec2>>& neighbor_predictions,
                     const SFParams& params);

// --- predictors -----------------------------------------------------------

/// Forecasts neighbor positions from position histories sampled at a fixed
/// rate. histories[i] is oldest-first; every history has the same length.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int required_history() const = 0;  // frames, at predictor fps
  virtual std::vector<std::vector<Vec2>> predict(
      const std::vector<std::vector<Vec2>>& histories, int horizon) = 0;
};

/// Constant-velocity extrapolation from the mean of the last few steps.
class CvPredictor : public Predictor {
 public:
  explicit CvPredictor(double fps, int history = 10) : fps_(fps), history_(history) {}
  int required_history() const override { return history_; }
  std::vector<std::vector<Vec2>> predict(
      const std::vector<std::vector<Vec2>>& histories, int horizon) override;

 private:
  double fps_;
  int history_;
};

// --- episodes ----------------------------------------------------------------

struct Scenario {
  double arena_half = 10.0;
  SimAgent robot;
  std::vector<SimAgent> agents;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& s);

/// Randomized corridor-crossing scene: the robot drives up the y axis while
/// pedestrians stream across it.
Scenario crossing_scenario(std::uint64_t seed);

struct NavigatorConfig {
  SFParams params;
  /// null = baseline social-force navigator; otherwise predictions feed
  /// extra repulsive forces once enough history has accumulated.
  Predictor* predictor = nullptr;
  double predictor_fps = 5.0;
  int prediction_horizon = 20;  // frames at predictor_fps
};

struct EpisodeResult {
  double completion_time = 0.0;  // valid when goal_reached
  bool goal_reached = false;
  bool collided = false;
  bool timed_out = false;
  std::vector<Vec2> robot_log;
};

EpisodeResult run_episode(const Scenario& scenario, const NavigatorConfig& nav,
                          double timeout_seconds, std::uint64_t seed);

struct BenchmarkStats {
  int episodes = 0;
  int collisions = 0;
  int timeouts = 0;
  int completed = 0;
  double mean_completion_time = 0.0;  // over goal-reaching episodes
  double collision_rate = 0.0;
};

BenchmarkStats summarize(const std::vector<EpisodeResult>& results);

}  // namespace motioncast
