#include "motioncast/navsim.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "motioncast/data.hpp"

namespace motioncast {

namespace {
using json = nlohmann::json;
}

double Vec2::norm() const { return std::sqrt(x * x + y * y); }

Vec2 Vec2::normalized() const {
  const double n = norm();
  if (n == 0.0) return {0.0, 0.0};
  return {x / n, y / n};
}

Vec2 social_force(const SimAgent& self, const std::vector<SimAgent>& others,
                  const SFParams& params, std::mt19937_64* rng) {
  Vec2 to_goal = self.goal - self.position;
  Vec2 desired{0.0, 0.0};
  if (to_goal.norm() > params.goal_tolerance) {
    desired = to_goal.normalized() * self.desired_speed;
  }
  Vec2 acc = (desired - self.velocity) * (1.0 / params.relaxation_time);

  for (const SimAgent& other : others) {
    if (&other == &self) continue;
    Vec2 diff = self.position - other.position;
    double d = diff.norm();
    Vec2 n;
    if (d == 0.0) {
      if (rng) {
        std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
        const double a = ang(*rng);
        n = {std::cos(a), std::sin(a)};
      } else {
        n = {1.0, 0.0};
      }
    } else {
      n = diff * (1.0 / d);
    }
    const double mag = params.repulsion_strength *
                       std::exp((self.radius + other.radius - d) /
                                params.repulsion_range);
    acc = acc + n * mag;
  }
  return acc;
}

namespace {

void integrate(SimAgent& a, Vec2 acc, const SFParams& params, double dt) {
  a.velocity = a.velocity + acc * dt;
  const double cap = params.speed_cap_factor * a.desired_speed;
  const double sp = a.velocity.norm();
  if (sp > cap) a.velocity = a.velocity * (cap / sp);
  a.position = a.position + a.velocity * dt;
}

}  // namespace

void sf_step(std::vector<SimAgent>& agents, const SFParams& params, double dt,
             std::mt19937_64* rng) {
  if (dt > 0.1) throw std::invalid_argument("sf_step: dt must be <= 0.1 s");
  std::vector<Vec2> accs(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    accs[i] = social_force(agents[i], agents, params, rng);
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    integrate(agents[i], accs[i], params, dt);
  }
}

Vec2 predictor_force(const SimAgent& robot,
                     const std::vector<std::vector<Vec2>>& neighbor_predictions,
                     const SFParams& params) {
  Vec2 force{0.0, 0.0};
  for (const auto& pred : neighbor_predictions) {
    double discount = 1.0;
    for (const Vec2& p : pred) {
      Vec2 diff = robot.position - p;
      const double d = diff.norm();
      Vec2 n = d == 0.0 ? Vec2{1.0, 0.0} : diff * (1.0 / d);
      const double mag = params.repulsion_strength *
                         std::exp((2.0 * robot.radius - d) /
                                  params.repulsion_range);
      force = force + n * (discount * mag);
      discount *= params.prediction_discount;
    }
  }
  return force * params.predictor_gain;
}

// --- CvPredictor ---------------------------------------------------------------

std::vector<std::vector<Vec2>> CvPredictor::predict(
    const std::vector<std::vector<Vec2>>& histories, int horizon) {
  std::vector<std::vector<Vec2>> out;
  out.reserve(histories.size());
  for (const auto& h : histories) {
    Vec2 v{0.0, 0.0};
    const int span = std::min<int>(3, static_cast<int>(h.size()) - 1);
    if (span > 0) {
      Vec2 delta = h.back() - h[h.size() - 1 - span];
      v = delta * (fps_ / span);
    }
    std::vector<Vec2> future(horizon);
    for (int t = 0; t < horizon; ++t) {
      future[t] = h.back() + v * ((t + 1) / fps_);
    }
    out.push_back(std::move(future));
  }
  return out;
}

// --- scenario io ------------------------------------------------------------------

namespace {

json agent_to_json(const SimAgent& a) {
  json j;
  j["start"] = {a.position.x, a.position.y};
  j["goal"] = {a.goal.x, a.goal.y};
  j["radius"] = a.radius;
  j["desired_speed"] = a.desired_speed;
  return j;
}

SimAgent agent_from_json(const json& j) {
  SimAgent a;
  a.position = {j.at("start")[0].get<double>(), j.at("start")[1].get<double>()};
  a.goal = {j.at("goal")[0].get<double>(), j.at("goal")[1].get<double>()};
  if (j.contains("radius")) a.radius = j["radius"].get<double>();
  if (j.contains("desired_speed")) a.desired_speed = j["desired_speed"].get<double>();
  return a;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path);
  json j;
  in >> j;
  Scenario s;
  s.arena_half = j.at("arena_half").get<double>();
  s.robot = agent_from_json(j.at("robot"));
  for (const json& ja : j.at("agents")) s.agents.push_back(agent_from_json(ja));
  return s;
}

void save_scenario(const std::string& path, const Scenario& s) {
  json j;
  j["arena_half"] = s.arena_half;
  j["robot"] = agent_to_json(s.robot);
  json agents = json::array();
  for (const SimAgent& a : s.agents) agents.push_back(agent_to_json(a));
  j["agents"] = std::move(agents);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario: " + path);
  out << j.dump(2) << "\n";
}

Scenario crossing_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0xc705517));
  std::uniform_int_distribution<int> count_dist(4, 7);
  std::uniform_real_distribution<double> y_dist(-2.5, 2.5);
  std::uniform_real_distribution<double> x_off(0.0, 3.5);
  std::uniform_real_distribution<double> speed_dist(0.8, 1.3);
  std::uniform_int_distribution<int> side_dist(0, 1);

  Scenario s;
  s.arena_half = 10.0;
  s.robot.position = {0.0, -7.0};
  s.robot.goal = {0.0, 7.0};
  s.robot.radius = 0.3;
  s.robot.desired_speed = 1.0;

  const int n = count_dist(rng);
  for (int i = 0; i < n; ++i) {
    SimAgent a;
    const int side = side_dist(rng);
    const double sx = (side == 0 ? -1.0 : 1.0) * (2.5 + x_off(rng));
    const double sy = y_dist(rng);
    a.position = {sx, sy};
    a.goal = {-sx, y_dist(rng)};
    a.radius = 0.3;
    a.desired_speed = speed_dist(rng);
    s.agents.push_back(a);
  }
  return s;
}

// --- episode -----------------------------------------------------------------------

EpisodeResult run_episode(const Scenario& scenario, const NavigatorConfig& nav,
                          double timeout_seconds, std::uint64_t seed) {
  const SFParams& params = nav.params;
  const double bound = scenario.arena_half;
  auto inside = [bound](Vec2 p) {
    return std::abs(p.x) <= bound && std::abs(p.y) <= bound;
  };
  if (!inside(scenario.robot.position) || !inside(scenario.robot.goal)) {
    throw std::invalid_argument("run_episode: robot outside the arena");
  }
  for (const SimAgent& a : scenario.agents) {
    if (!inside(a.position)) {
      throw std::invalid_argument("run_episode: agent outside the arena");
    }
  }

  std::mt19937_64 rng(mix_seed(seed, 0xe915c0de));
  SimAgent robot = scenario.robot;
  std::vector<SimAgent> peds = scenario.agents;

  const int history_stride =
      std::max(1, static_cast<int>(std::llround(1.0 / (params.dt * nav.predictor_fps))));
  const int needed_history =
      nav.predictor ? nav.predictor->required_history() : 0;

  std::vector<std::vector<Vec2>> histories(peds.size());
  std::vector<std::vector<Vec2>> predictions;

  EpisodeResult res;
  const int max_steps = static_cast<int>(std::ceil(timeout_seconds / params.dt));
  res.robot_log.push_back(robot.position);

  for (int step = 0; step < max_steps; ++step) {
    // pedestrians are blind to the robot; they avoid each other only
    if (step % history_stride == 0) {
      for (std::size_t i = 0; i < peds.size(); ++i) {
        histories[i].push_back(peds[i].position);
      }
      if (nav.predictor && !peds.empty() &&
          static_cast<int>(histories[0].size()) >= needed_history) {
        std::vector<std::vector<Vec2>> trimmed(peds.size());
        for (std::size_t i = 0; i < peds.size(); ++i) {
          trimmed[i].assign(histories[i].end() - needed_history,
                            histories[i].end());
        }
        predictions = nav.predictor->predict(trimmed, nav.prediction_horizon);
      }
    }

    std::vector<Vec2> ped_acc(peds.size());
    for (std::size_t i = 0; i < peds.size(); ++i) {
      ped_acc[i] = social_force(peds[i], peds, params, &rng);
    }
    Vec2 robot_acc = social_force(robot, peds, params, &rng);
    if (!predictions.empty()) {
      robot_acc = robot_acc + predictor_force(robot, predictions, params);
    }

    for (std::size_t i = 0; i < peds.size(); ++i) {
      integrate(peds[i], ped_acc[i], params, params.dt);
    }
    integrate(robot, robot_acc, params, params.dt);
    res.robot_log.push_back(robot.position);

    for (const SimAgent& p : peds) {
      if ((robot.position - p.position).norm() < robot.radius + p.radius) {
        res.collided = true;
        res.completion_time = (step + 1) * params.dt;
        return res;
      }
    }
    if ((robot.position - robot.goal).norm() < params.goal_tolerance) {
      res.goal_reached = true;
      res.completion_time = (step + 1) * params.dt;
      return res;
    }
  }
  res.timed_out = true;
  res.completion_time = timeout_seconds;
  return res;
}

BenchmarkStats summarize(const std::vector<EpisodeResult>& results) {
  BenchmarkStats s;
  s.episodes = static_cast<int>(results.size());
  double total_time = 0.0;
  for (const EpisodeResult& r : results) {
    if (r.collided) ++s.collisions;
    if (r.timed_out) ++s.timeouts;
    if (r.goal_reached) {
      ++s.completed;
      total_time += r.completion_time;
    }
  }
  if (s.completed > 0) s.mean_completion_time = total_time / s.completed;
  if (s.episodes > 0) {
    s.collision_rate = static_cast<double>(s.collisions) / s.episodes;
  }
  return s;
}

}  // namespace motioncast
