#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "motioncast/training.hpp"

using namespace motioncast;

namespace {

ModelConfig small_model(int d = 16, int k = 2) {
  ModelConfig cfg;
  cfg.hidden_dim = d;
  cfg.heads = 4;
  cfg.layers_stage1 = 2;
  cfg.layers_stage2 = 1;
  cfg.ff_mult = 2;
  cfg.num_modes = k;
  return cfg;
}

std::vector<SceneRecord> traj_scenes(std::uint64_t seed, int n,
                                     double obs = 2.0, double pred = 4.0,
                                     double fps = 5,
                                     const std::string& prefix = "synth") {
  SynthConfig cfg;
  cfg.min_agents = 2;
  cfg.max_agents = 2;
  cfg.with_pose = false;
  cfg.with_boxes = false;
  cfg.settings = {obs, pred, fps};
  cfg.scene_prefix = prefix;
  return synth_generate(seed, n, cfg);
}

TrainConfig quick_train(int epochs, std::uint64_t seed = 0) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.base_lr = 1e-3;
  cfg.batch_size = 8;
  cfg.seed = seed;
  cfg.mask.mode = MaskMode::kNone;
  return cfg;
}

}  // namespace

TEST_CASE("lr schedule is a single-step function") {
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.base_lr = 1e-4;
  CHECK(lr_schedule(0, cfg) == 1e-4);
  CHECK(lr_schedule(47, cfg) == 1e-4);
  CHECK(lr_schedule(48, cfg) == doctest::Approx(1e-5));  // 0.8 * 60
  CHECK(lr_schedule(59, cfg) == doctest::Approx(1e-5));
  CHECK_THROWS_AS(lr_schedule(60, cfg), std::invalid_argument);
  CHECK_THROWS_AS(lr_schedule(-1, cfg), std::invalid_argument);

  int discontinuities = 0;
  for (int e = 1; e < 60; ++e) {
    if (lr_schedule(e, cfg) != lr_schedule(e - 1, cfg)) ++discontinuities;
  }
  CHECK(discontinuities == 1);
}

TEST_CASE("adam first step and zero-gradient behavior") {
  ModelConfig mcfg = small_model();
  ModelState state(mcfg, 1);
  AdamState opt;

  Tensor& w = state.param("query.traj");
  const double before = w.at(0);

  std::unordered_map<std::string, Tensor> grads;
  Tensor g = Tensor::zeros(w.shape());
  g.at(0) = 10.0;  // |g| >> eps
  grads.emplace("query.traj", g);
  adam_step(state, grads, opt, 0.01);
  // bias-corrected first step moves by about lr
  CHECK(std::abs(std::abs(w.at(0) - before) - 0.01) < 1e-6);

  // zero gradient leaves parameters unchanged while moments decay
  const double m_before = opt.m.at("query.traj").at(0);
  Tensor zero = Tensor::zeros(w.shape());
  std::unordered_map<std::string, Tensor> zgrads;
  zgrads.emplace("query.traj", zero);
  const double after_first = w.at(0);
  adam_step(state, zgrads, opt, 0.01);
  // the first moment decays toward zero but the parameter still moves along
  // the remembered direction; with a zero gradient the update magnitude
  // shrinks but m must decay by beta1 exactly
  CHECK(opt.m.at("query.traj").at(0) == doctest::Approx(0.9 * m_before));
  CHECK(w.at(0) != after_first);  // momentum keeps acting; that is Adam
}

TEST_CASE("adam matches an independent reference recurrence on a quadratic") {
  // reference implementation of the recurrence, kept deliberately separate
  double x_ref = 1.0, m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> ref_path;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * x_ref;  // d/dx of x^2
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    x_ref -= lr * mhat / (std::sqrt(vhat) + eps);
    ref_path.push_back(x_ref);
  }
  CHECK(std::abs(x_ref) < 0.05);

  // the library optimizer on the same problem
  ModelConfig mcfg = small_model();
  ModelState state(mcfg, 2);
  Tensor& w = state.param("query.traj");
  for (double& val : w.data()) val = 0.0;
  w.at(0) = 1.0;
  AdamState opt;
  for (int t = 1; t <= 100; ++t) {
    Tensor g = Tensor::zeros(w.shape());
    g.at(0) = 2.0 * w.at(0);
    std::unordered_map<std::string, Tensor> grads;
    grads.emplace("query.traj", g);
    adam_step(state, grads, opt, lr);
    CHECK(std::abs(w.at(0) - ref_path[t - 1]) < 1e-12);
  }
}

TEST_CASE("a non-finite gradient aborts with the parameter name") {
  ModelConfig mcfg = small_model();
  ModelState state(mcfg, 3);
  AdamState opt;
  Tensor g = Tensor::zeros(state.param("mask_embedding").shape());
  g.at(1) = std::numeric_limits<double>::quiet_NaN();
  std::unordered_map<std::string, Tensor> grads;
  grads.emplace("mask_embedding", g);
  try {
    adam_step(state, grads, opt, 0.01);
    FAIL("expected abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("mask_embedding") != std::string::npos);
  }
}

TEST_CASE("loss on a frozen batch decreases for a seed majority") {
  const auto scenes = traj_scenes(50, 6, 1.0, 1.0);
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ModelConfig mcfg = small_model();
    ModelState state(mcfg, seed);
    TrainConfig cfg = quick_train(10, seed);
    cfg.batch_size = 64;  // whole set in one step: the batch stays frozen
    cfg.settings = {1.0, 1.0, 5};
    const TrainSummary summary = train_model(state, scenes, cfg);
    REQUIRE(summary.log.size() == 10);
    if (summary.log.back().total < summary.log.front().total) ++improved;
  }
  CHECK(improved >= 8);
}

TEST_CASE("identical seeds give identical loss logs") {
  const auto scenes = traj_scenes(51, 5, 1.0, 1.0);
  auto run = [&] {
    ModelState state(small_model(), 7);
    TrainConfig cfg = quick_train(3, 7);
    cfg.settings = {1.0, 1.0, 5};
    cfg.mask.mode = MaskMode::kDynamic;
    return train_model(state, scenes, cfg);
  };
  const TrainSummary a = run();
  const TrainSummary b = run();
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].total == b.log[i].total);
  }
}

TEST_CASE("resuming from a checkpoint matches the uninterrupted run") {
  const auto scenes = traj_scenes(52, 5, 1.0, 1.0);
  ModelConfig mcfg = small_model();

  TrainConfig cfg = quick_train(6, 13);
  cfg.settings = {1.0, 1.0, 5};

  ModelState full(mcfg, 13);
  AdamState full_opt;
  const TrainSummary full_summary = train_model(full, scenes, cfg, &full_opt);

  ModelState half(mcfg, 13);
  AdamState half_opt;
  train_model(half, scenes, cfg, &half_opt, 0, 3);

  const std::string path =
      (std::filesystem::temp_directory_path() / "mc_resume.ckpt").string();
  save_training_checkpoint(path, half, half_opt, 3, cfg, {});

  AdamState resumed_opt;
  int next_epoch = 0;
  ModelState resumed = load_training_checkpoint(path, &resumed_opt, &next_epoch);
  CHECK(next_epoch == 3);
  const TrainSummary tail =
      train_model(resumed, scenes, cfg, &resumed_opt, next_epoch);

  CHECK(std::abs(tail.epoch_losses.back() - full_summary.epoch_losses.back()) <
        1e-9);
  std::remove(path.c_str());
}

TEST_CASE("fine-tuning changes rates without touching parameter shapes") {
  const auto scenes5 = traj_scenes(53, 4, 1.0, 1.0, 5);

  ModelConfig mcfg = small_model();
  ModelState state(mcfg, 4);
  std::vector<std::vector<int>> shapes;
  for (const auto& [name, t] : state.parameters()) shapes.push_back(t.shape());

  TrainConfig cfg = quick_train(2, 4);
  cfg.settings = {1.0, 1.0, 5};
  train_model(state, scenes5, cfg);

  // 2.5 fps and 25 fps reuse every parameter unchanged
  for (double fps : {2.5, 25.0}) {
    const auto scenes = traj_scenes(54, 4, 2.0, 2.0, 50);
    std::vector<SceneRecord> resampled;
    for (const SceneRecord& s : scenes) resampled.push_back(resample_scene(s, fps));
    TrainConfig ft = quick_train(2, 5);
    ft.settings = {2.0, 2.0, fps};
    train_model(state, resampled, ft);

    std::size_t i = 0;
    for (const auto& [name, t] : state.parameters()) {
      CHECK(t.shape() == shapes[i]);
      ++i;
    }
  }
}

TEST_CASE("rates that do not divide the grid are rejected") {
  const std::string data =
      (std::filesystem::temp_directory_path() / "mc_ft_data.ndjson").string();
  const std::string ckpt =
      (std::filesystem::temp_directory_path() / "mc_ft.ckpt").string();
  write_canonical(data, traj_scenes(55, 2, 1.0, 1.0), "ft");

  ModelState state(small_model(), 5);
  save_training_checkpoint(ckpt, state, AdamState{}, 0, quick_train(1), {});

  TrainConfig cfg = quick_train(1);
  FrameSettings bad{1.0, 1.0, 3};  // 50/3 is fractional
  CHECK_THROWS_AS(finetune(ckpt, data, bad, cfg, "/tmp/mc_ft_out"),
                  std::invalid_argument);
  std::remove(data.c_str());
  std::remove(ckpt.c_str());
}

TEST_CASE("pose-only fine-tuning keeps trajectory heads but zero-weights them") {
  SynthConfig scfg;
  scfg.min_agents = 2;
  scfg.max_agents = 2;
  scfg.settings = {0.6, 0.4, 5};
  const auto scenes = synth_generate(56, 3, scfg);

  ModelState state(small_model(), 6);
  const long long params_before = state.parameter_count();

  TrainConfig cfg = quick_train(2, 6);
  cfg.settings = {0.6, 0.4, 5};
  cfg.input_modalities = {Modality::kTraj, Modality::kPose3d};
  cfg.output_modalities = {Modality::kTraj, Modality::kPose3d};
  cfg.traj_loss_weight = 0.0;  // pose-only task
  cfg.pose_loss_weight = 1.0;
  const TrainSummary summary = train_model(state, scenes, cfg);
  CHECK(state.parameter_count() == params_before);
  CHECK(std::isfinite(summary.epoch_losses.back()));
  for (const TrainLogRow& row : summary.log) CHECK(row.pose_term >= 0.0);
}

TEST_CASE("training on an empty dataset is a contract error") {
  ModelState state(small_model(), 7);
  CHECK_THROWS_AS(train_model(state, {}, quick_train(1)), std::invalid_argument);
  CHECK_THROWS_AS(pretrain({}, small_model(), quick_train(1), "/tmp/mc_none"),
                  std::invalid_argument);
}

TEST_CASE("few-shot learning curve") {
  const auto pool = traj_scenes(57, 30, 1.0, 1.0, 5, "pool");
  const auto eval_set = traj_scenes(58, 6, 1.0, 1.0, 5, "eval");

  ModelState pretrained(small_model(), 8);
  TrainConfig cfg = quick_train(1, 8);
  cfg.settings = {1.0, 1.0, 5};

  SUBCASE("rows cover both variants on a clipped grid") {
    const auto rows = few_shot(pretrained, pool, eval_set, cfg, {5, 10, 1000});
    REQUIRE(rows.size() == 6);  // grid {5, 10, 30} x two variants
    CHECK(rows[0].n == 5);
    CHECK(rows[2].n == 30);  // 1000 clamps to the pool size
    CHECK(rows[0].variant == "pretrained");
    CHECK(rows[3].variant == "scratch");
    for (const FewShotRow& r : rows) CHECK(std::isfinite(r.ade));
  }

  SUBCASE("train/eval overlap is rejected") {
    std::vector<SceneRecord> overlapping = eval_set;
    overlapping[0].scene_id = pool[0].scene_id;
    CHECK_THROWS_AS(few_shot(pretrained, pool, overlapping, cfg, {5}),
                    std::invalid_argument);
  }

  SUBCASE("deterministic under a fixed seed") {
    const auto a = few_shot(pretrained, pool, eval_set, cfg, {5});
    const auto b = few_shot(pretrained, pool, eval_set, cfg, {5});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].ade == b[i].ade);
  }
}

TEST_CASE("mask mode none and dynamic both converge on an overfit set") {
  SynthConfig scfg;
  scfg.min_agents = 2;
  scfg.max_agents = 2;
  scfg.settings = {0.6, 0.6, 5};
  const auto scenes = synth_generate(59, 8, scfg);

  auto run = [&](MaskMode mode) {
    ModelState state(small_model(16, 1), 9);
    TrainConfig cfg = quick_train(25, 9);
    cfg.settings = {0.6, 0.6, 5};
    cfg.input_modalities = {Modality::kTraj, Modality::kPose3d};
    cfg.mask.mode = mode;
    const TrainSummary s = train_model(state, scenes, cfg);
    return s.epoch_losses;
  };

  const auto none_losses = run(MaskMode::kNone);
  const auto dyn_losses = run(MaskMode::kDynamic);
  CHECK(none_losses.back() < none_losses.front());
  CHECK(dyn_losses.back() < dyn_losses.front());
  CHECK(dyn_losses.back() <= 2.0 * none_losses.back());
}

TEST_CASE("loss CSV has the documented columns") {
  const auto scenes = traj_scenes(60, 3, 1.0, 1.0);
  ModelState state(small_model(), 10);
  TrainConfig cfg = quick_train(1, 10);
  cfg.settings = {1.0, 1.0, 5};
  const TrainSummary summary = train_model(state, scenes, cfg);
  const std::string path =
      (std::filesystem::temp_directory_path() / "mc_loss.csv").string();
  write_loss_csv(path, summary.log);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,step,lr,total,traj_term,pose_term");
  std::string row;
  CHECK(std::getline(in, row).good());
  std::remove(path.c_str());
}
