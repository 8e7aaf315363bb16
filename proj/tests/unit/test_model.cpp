#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "motioncast/checkpoint.hpp"
#include "motioncast/model.hpp"

using namespace motioncast;

namespace {

ModelConfig tiny_config(int d = 16, int k = 2) {
  ModelConfig cfg;
  cfg.hidden_dim = d;
  cfg.heads = 4;
  cfg.layers_stage1 = 2;
  cfg.layers_stage2 = 1;
  cfg.ff_mult = 2;
  cfg.num_modes = k;
  return cfg;
}

SceneRecord synth_window(std::uint64_t seed, int agents = 3, bool pose = true,
                         double obs_s = 2.0, double pred_s = 4.0, double fps = 5) {
  SynthConfig cfg;
  cfg.min_agents = agents;
  cfg.max_agents = agents;
  cfg.settings = {obs_s, pred_s, fps};
  cfg.with_pose = pose;
  cfg.with_boxes = false;
  return synth_generate(seed, 1, cfg)[0];
}

MaskSpec no_mask() {
  MaskSpec spec;
  spec.mode = MaskMode::kNone;
  return spec;
}

}  // namespace

TEST_CASE("forward output shapes follow the contract") {
  ModelConfig cfg = tiny_config(16, 20);
  ModelState state(cfg, 1);
  SceneRecord scene = synth_window(3, 3);
  SceneRecord norm = normalize_sample(scene, 0);

  std::mt19937_64 rng(0);
  TokenizedSample sample =
      tokenize_sample(norm, 0, {Modality::kTraj, Modality::kPose3d},
                      {Modality::kTraj, Modality::kPose3d}, state, no_mask(), rng);
  ForwardOutput out = model_forward(sample, state);

  REQUIRE(out.traj_modes.size() == 20);
  for (const Tensor& mode : out.traj_modes) {
    CHECK(mode.shape() == std::vector<int>{20, 2});
  }
  REQUIRE(out.pose.defined());
  CHECK(out.pose.shape() == std::vector<int>{20 * 39, 3});
}

TEST_CASE("trajectory-only input runs and stays finite") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 2);
  SceneRecord scene = synth_window(5, 2, /*pose=*/false);

  PredictionOutput out =
      predict(scene, 0, state, {Modality::kTraj}, {Modality::kTraj});
  REQUIRE(out.traj_modes.size() == 2);
  for (const auto& mode : out.traj_modes) {
    for (const auto& pt : mode) {
      CHECK(std::isfinite(pt[0]));
      CHECK(std::isfinite(pt[1]));
    }
  }
}

TEST_CASE("outputs stay finite under every modality subset and mask draw") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 3);
  SynthConfig scfg;
  scfg.min_agents = 2;
  scfg.max_agents = 2;
  scfg.with_2d = true;
  SceneRecord scene = synth_generate(17, 1, scfg)[0];
  SceneRecord norm = normalize_sample(scene, 0);

  const std::vector<std::vector<Modality>> subsets = {
      {Modality::kTraj},
      {Modality::kTraj, Modality::kPose3d},
      {Modality::kTraj, Modality::kBox3d, Modality::kBox2d},
      {Modality::kTraj, Modality::kBox3d, Modality::kBox2d, Modality::kPose3d,
       Modality::kPose2d}};
  for (const auto& subset : subsets) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      std::mt19937_64 rng(s);
      MaskSpec spec;
      spec.mode = MaskMode::kDynamic;
      TokenizedSample sample = tokenize_sample(norm, 0, subset,
                                               {Modality::kTraj}, state, spec, rng);
      ForwardOutput out = model_forward(sample, state);
      for (const Tensor& mode : out.traj_modes) {
        for (int i = 0; i < mode.size(); ++i) CHECK(std::isfinite(mode.at(i)));
      }
    }
  }
}

TEST_CASE("ego outputs are bit-identical under neighbor permutations") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 4);
  SceneRecord scene = synth_window(7, 4);

  PredictionOutput base =
      predict(scene, 0, state, {Modality::kTraj, Modality::kPose3d},
              {Modality::kTraj});

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    SceneRecord permuted = scene;
    std::vector<AgentTrack> neighbors(permuted.agents.begin() + 1,
                                      permuted.agents.end());
    std::shuffle(neighbors.begin(), neighbors.end(), rng);
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      permuted.agents[i + 1] = neighbors[i];
    }
    PredictionOutput out =
        predict(permuted, 0, state, {Modality::kTraj, Modality::kPose3d},
                {Modality::kTraj});
    REQUIRE(out.traj_modes.size() == base.traj_modes.size());
    for (std::size_t k = 0; k < base.traj_modes.size(); ++k) {
      for (int t = 0; t < base.t_pred; ++t) {
        CHECK(out.traj_modes[k][t][0] == base.traj_modes[k][t][0]);
        CHECK(out.traj_modes[k][t][1] == base.traj_modes[k][t][1]);
      }
    }
  }
}

TEST_CASE("extra padding-only grid slots never change outputs") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 5);
  SceneRecord scene = synth_window(9, 2);
  SceneRecord norm = normalize_sample(scene, 0);

  auto run = [&](bool pad_extra) {
    std::mt19937_64 rng(0);
    TokenizedSample sample;
    std::vector<TokenSequence> seqs;
    for (int i = 0; i < static_cast<int>(norm.agents.size()); ++i) {
      TokenSequence seq = project(norm.agents[i], norm.t_obs, norm.t_pred,
                                  {Modality::kTraj, Modality::kPose3d});
      upsample_pad(seq, norm.fps);
      if (pad_extra) {
        // double the observation grid with older, data-free slots
        const int len = static_cast<int>(seq.active_obs_slots.size());
        for (int s = 1; s <= len; ++s) {
          seq.active_obs_slots.push_back(-len - s + 1);
          TokenMeta tok;
          tok.modality = Modality::kTraj;
          tok.element = 0;
          tok.grid_slot = -len - s + 1;
          tok.is_padding = true;
          seq.tokens.push_back(tok);
        }
      }
      if (i == 0) append_future_queries(seq, {Modality::kTraj});
      assemble_features(seq, state.projection_params(), state.encoder());
      seqs.push_back(std::move(seq));
    }
    sample.agents = std::move(seqs);
    return model_forward(sample, state);
  };

  ForwardOutput plain = run(false);
  ForwardOutput padded = run(true);
  for (std::size_t k = 0; k < plain.traj_modes.size(); ++k) {
    for (int i = 0; i < plain.traj_modes[k].size(); ++i) {
      CHECK(plain.traj_modes[k].at(i) == padded.traj_modes[k].at(i));
    }
  }
}

TEST_CASE("loss is zero on an exact match and insensitive to invalid joints") {
  ModelConfig cfg = tiny_config(16, 3);
  ModelState state(cfg, 6);
  SceneRecord scene = synth_window(11, 2);
  SceneRecord norm = normalize_sample(scene, 0);

  std::mt19937_64 rng(0);
  TokenizedSample sample =
      tokenize_sample(norm, 0, {Modality::kTraj, Modality::kPose3d},
                      {Modality::kTraj, Modality::kPose3d}, state, no_mask(), rng);
  ForwardOutput out = model_forward(sample, state);
  SupervisionTarget target = make_target(norm, 0, true);

  SUBCASE("one mode equal to the ground truth zeroes the loss") {
    ForwardOutput exact;
    exact.t_pred = out.t_pred;
    exact.traj_modes.push_back(target.traj_gt.clone());
    exact.traj_modes.push_back(Tensor::full(target.traj_gt.shape(), 123.0));
    exact.pose = target.pose_gt.clone();
    CHECK(model_loss(exact, target).item() == doctest::Approx(0.0));
  }

  SUBCASE("perturbing the ground truth at invalid joints changes nothing") {
    const double base = model_loss(out, target).item();
    SupervisionTarget poked = target;
    poked.pose_gt = target.pose_gt.clone();
    int poked_count = 0;
    for (int r = 0; r < poked.pose_gt.rows(); ++r) {
      if (target.pose_mask.at(r, 0) == 0.0) {
        for (int f = 0; f < 3; ++f) poked.pose_gt.at(r, f) = 1e6;
        ++poked_count;
      }
    }
    REQUIRE(poked_count > 0);  // the 17 unmapped joints are unsupervised
    CHECK(model_loss(out, poked).item() == base);
  }

  SUBCASE("a constant half-meter offset on one mode costs 0.25") {
    ForwardOutput offset;
    offset.t_pred = out.t_pred;
    Tensor mode = target.traj_gt.clone();
    for (int t = 0; t < mode.rows(); ++t) mode.at(t, 0) += 0.5;
    offset.traj_modes.push_back(mode);
    offset.pose = target.pose_gt.clone();
    CHECK(model_loss(offset, target).item() == doctest::Approx(0.25));
  }
}

TEST_CASE("winner-takes-all routes gradient to the closest mode only") {
  ModelConfig cfg = tiny_config(16, 2);
  ModelState state(cfg, 7);
  SceneRecord scene = synth_window(13, 2, /*pose=*/false);
  SceneRecord norm = normalize_sample(scene, 0);

  Graph g;
  Graph::Scope scope(g);
  std::mt19937_64 rng(0);
  TokenizedSample sample = tokenize_sample(norm, 0, {Modality::kTraj},
                                           {Modality::kTraj}, state, no_mask(), rng);
  ForwardOutput out = model_forward(sample, state);
  SupervisionTarget target = make_target(norm, 0, false);
  Tensor loss = model_loss(out, target);
  GradientMap grads = g.backward(loss);

  // exactly one trajectory head receives gradient
  int heads_with_grad = 0;
  for (int k = 0; k < cfg.num_modes; ++k) {
    const Tensor& w = state.param("head.traj." + std::to_string(k) + ".2.w");
    if (grads.touched(w)) ++heads_with_grad;
  }
  CHECK(heads_with_grad == 1);
}

TEST_CASE("every parameter tensor passes a sampled finite-difference check") {
  ModelConfig cfg = tiny_config(16, 2);
  ModelState state(cfg, 8);
  SceneRecord scene = synth_window(15, 2, true, 0.6, 0.4, 5);  // 3 obs frames
  SceneRecord norm = normalize_sample(scene, 0);

  auto loss_value = [&](bool with_graph, Graph* g) {
    std::mt19937_64 rng(42);
    std::unique_ptr<Graph::Scope> scope;
    if (with_graph) scope = std::make_unique<Graph::Scope>(*g);
    MaskSpec spec;
    spec.mode = MaskMode::kDynamic;
    spec.r_s_low = spec.r_s_high = 0.3;
    TokenizedSample sample =
        tokenize_sample(norm, 0, {Modality::kTraj, Modality::kPose3d},
                        {Modality::kTraj, Modality::kPose3d}, state, spec, rng);
    ForwardOutput out = model_forward(sample, state);
    SupervisionTarget target = make_target(norm, 0, true);
    return model_loss(out, target);
  };

  Graph g;
  GradientMap grads = [&] {
    Tensor loss = loss_value(true, &g);
    return g.backward(loss);
  }();

  const double h = 1e-5;
  std::mt19937_64 pick(3);
  double max_rel = 0.0;
  for (auto& [name, param] : state.parameters()) {
    Tensor analytic = grads.grad_of(param);
    for (int probe = 0; probe < 2; ++probe) {
      const int i = static_cast<int>(pick() % param.size());
      const double orig = param.at(i);
      param.at(i) = orig + h;
      const double fp = loss_value(false, nullptr).item();
      param.at(i) = orig - h;
      const double fm = loss_value(false, nullptr).item();
      param.at(i) = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double a = analytic.at(i);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("checkpoint round-trip reproduces outputs bit-exactly") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 9);
  SceneRecord scene = synth_window(17, 3);

  const std::string path =
      (std::filesystem::temp_directory_path() / "mc_model.ckpt").string();
  nlohmann::json meta;
  meta["note"] = "unit";
  save_checkpoint(path, state, meta);

  nlohmann::json meta2;
  ModelState loaded = load_checkpoint(path, &meta2);
  CHECK(meta2["note"] == "unit");
  CHECK(loaded.parameter_count() == state.parameter_count());

  PredictionOutput a = predict(scene, 0, state,
                               {Modality::kTraj, Modality::kPose3d},
                               {Modality::kTraj, Modality::kPose3d});
  PredictionOutput b = predict(scene, 0, loaded,
                               {Modality::kTraj, Modality::kPose3d},
                               {Modality::kTraj, Modality::kPose3d});
  for (std::size_t k = 0; k < a.traj_modes.size(); ++k) {
    for (int t = 0; t < a.t_pred; ++t) {
      CHECK(a.traj_modes[k][t][0] == b.traj_modes[k][t][0]);
      CHECK(a.traj_modes[k][t][1] == b.traj_modes[k][t][1]);
    }
  }
  for (std::size_t i = 0; i < a.pose.size(); ++i) {
    for (int f = 0; f < 3; ++f) CHECK(a.pose[i][f] == b.pose[i][f]);
  }
  std::remove(path.c_str());
}

TEST_CASE("contract errors") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 10);
  SceneRecord scene = synth_window(19, 2);

  SUBCASE("zero agents") {
    TokenizedSample empty;
    CHECK_THROWS_AS(model_forward(empty, state), std::invalid_argument);
  }
  SUBCASE("subset without trajectory") {
    CHECK_THROWS_AS(
        predict(scene, 0, state, {Modality::kPose3d}, {Modality::kTraj}),
        std::invalid_argument);
  }
  SUBCASE("parameter count is deterministic in the config") {
    ModelState again(cfg, 999);  // different seed, same layout
    CHECK(again.parameter_count() == state.parameter_count());
  }
}

TEST_CASE("predict is deterministic") {
  ModelConfig cfg = tiny_config();
  ModelState state(cfg, 11);
  SceneRecord scene = synth_window(23, 3);
  PredictionOutput a = predict(scene, 0, state, {Modality::kTraj, Modality::kPose3d},
                               {Modality::kTraj});
  PredictionOutput b = predict(scene, 0, state, {Modality::kTraj, Modality::kPose3d},
                               {Modality::kTraj});
  for (std::size_t k = 0; k < a.traj_modes.size(); ++k) {
    for (int t = 0; t < a.t_pred; ++t) {
      CHECK(a.traj_modes[k][t][0] == b.traj_modes[k][t][0]);
      CHECK(a.traj_modes[k][t][1] == b.traj_modes[k][t][1]);
    }
  }
}
