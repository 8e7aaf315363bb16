#include "motioncast/training.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace motioncast {

namespace {
using json = nlohmann::json;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (base_lr <= 0.0) throw std::invalid_argument("train config: base_lr must be > 0");
  if (!(decay_at_fraction > 0.0 && decay_at_fraction < 1.0)) {
    throw std::invalid_argument("train config: need 0 < decay_at_fraction < 1");
  }
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  settings.validate();
  mask.validate();
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    throw std::invalid_argument("lr_schedule: epoch out of range");
  }
  const int decay_epoch =
      static_cast<int>(std::floor(cfg.decay_at_fraction * cfg.epochs));
  return epoch < decay_epoch ? cfg.base_lr : cfg.base_lr * cfg.decay_factor;
}

void adam_step(ModelState& state,
               const std::unordered_map<std::string, Tensor>& grads,
               AdamState& opt, double lr) {
  ++opt.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (auto& [name, param] : state.parameters()) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Tensor& g = it->second;
    if (g.shape() != param.shape()) {
      throw std::runtime_error("adam_step: gradient shape mismatch for " + name);
    }
    Tensor& m = opt.m.try_emplace(name, Tensor::zeros(param.shape())).first->second;
    Tensor& v = opt.v.try_emplace(name, Tensor::zeros(param.shape())).first->second;
    for (int i = 0; i < param.size(); ++i) {
      const double gi = g.at(i);
      if (!std::isfinite(gi)) {
        throw std::runtime_error("adam_step: non-finite gradient in " + name);
      }
      m.at(i) = opt.beta1 * m.at(i) + (1.0 - opt.beta1) * gi;
      v.at(i) = opt.beta2 * v.at(i) + (1.0 - opt.beta2) * gi * gi;
      const double mhat = m.at(i) / bc1;
      const double vhat = v.at(i) / bc2;
      param.at(i) -= lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

// --- training loop ------------------------------------------------------------

namespace {

struct SampleRef {
  int scene;
  int ego;
};

std::vector<SampleRef> collect_samples(const std::vector<SceneRecord>& scenes,
                                       int max_egos_per_scene) {
  std::vector<SampleRef> samples;
  for (int i = 0; i < static_cast<int>(scenes.size()); ++i) {
    int used = 0;
    for (int ego : ego_candidates(scenes[i])) {
      if (used >= max_egos_per_scene) break;
      samples.push_back({i, ego});
      ++used;
    }
  }
  return samples;
}

double grad_global_norm(const std::unordered_map<std::string, Tensor>& grads) {
  double total = 0.0;
  for (const auto& [name, g] : grads) {
    for (int i = 0; i < g.size(); ++i) total += g.at(i) * g.at(i);
  }
  return std::sqrt(total);
}

}  // namespace

TrainSummary train_model(ModelState& state,
                         const std::vector<SceneRecord>& scenes,
                         const TrainConfig& cfg, AdamState* opt,
                         int start_epoch, int end_epoch) {
  cfg.validate();
  if (end_epoch < 0) end_epoch = cfg.epochs;
  const std::vector<SampleRef> samples =
      collect_samples(scenes, cfg.max_egos_per_scene);
  if (samples.empty()) {
    throw std::invalid_argument("train_model: no trainable samples in dataset");
  }

  const bool supervise_pose =
      std::find(cfg.output_modalities.begin(), cfg.output_modalities.end(),
                Modality::kPose3d) != cfg.output_modalities.end();

  AdamState local_opt;
  if (!opt) opt = &local_opt;

  TrainSummary summary;
  int global_step = 0;
  for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    std::vector<int> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0xe90c4, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    int epoch_count = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), pos + cfg.batch_size);
      const int batch_n = static_cast<int>(end - pos);

      std::unordered_map<std::string, Tensor> grad_sum;
      double batch_total = 0.0, batch_traj = 0.0, batch_pose = 0.0;
      for (std::size_t bi = pos; bi < end; ++bi) {
        const SampleRef& ref = samples[order[bi]];
        const SceneRecord& scene = scenes[ref.scene];
        SceneRecord normalized = normalize_sample(scene, ref.ego);

        std::mt19937_64 mask_rng(mix_seed(
            cfg.seed, 0x3a5f,
            (static_cast<std::uint64_t>(epoch) << 32) | static_cast<std::uint64_t>(bi)));

        Graph graph;
        Graph::Scope scope(graph);
        TokenizedSample sample = tokenize_sample(
            normalized, ref.ego, cfg.input_modalities, cfg.output_modalities,
            state, cfg.mask, mask_rng);
        ForwardOutput fwd = model_forward(sample, state);
        SupervisionTarget target = make_target(normalized, ref.ego, supervise_pose);
        target.traj_weight = cfg.traj_loss_weight;
        target.pose_weight = cfg.pose_loss_weight;
        double traj_term = 0.0, pose_term = 0.0;
        Tensor loss = model_loss(fwd, target, &traj_term, &pose_term);
        batch_total += loss.item();
        batch_traj += traj_term;
        batch_pose += pose_term;

        GradientMap grads = graph.backward(loss);
        for (auto& [name, param] : state.parameters()) {
          if (!grads.touched(param)) continue;
          Tensor g = grads.grad_of(param);
          auto [it, inserted] = grad_sum.try_emplace(name, std::move(g));
          if (!inserted) {
            Tensor& acc = it->second;
            for (int i = 0; i < acc.size(); ++i) acc.at(i) += g.at(i);
          }
        }
      }

      for (auto& [name, g] : grad_sum) {
        for (int i = 0; i < g.size(); ++i) g.at(i) /= batch_n;
      }
      if (cfg.grad_clip > 0.0) {
        const double norm = grad_global_norm(grad_sum);
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          for (auto& [name, g] : grad_sum) {
            for (int i = 0; i < g.size(); ++i) g.at(i) *= s;
          }
        }
      }
      adam_step(state, grad_sum, *opt, lr);

      summary.log.push_back({epoch, global_step, lr, batch_total / batch_n,
                             batch_traj / batch_n, batch_pose / batch_n});
      epoch_loss += batch_total;
      epoch_count += batch_n;
      ++global_step;
    }
    summary.epoch_losses.push_back(epoch_loss / epoch_count);
  }
  return summary;
}

// --- data preparation ------------------------------------------------------------

std::vector<SceneRecord> prepare_windows(const std::vector<SceneRecord>& raw,
                                         const FrameSettings& settings) {
  settings.validate();
  const int w = settings.t_obs() + settings.t_pred();
  std::vector<SceneRecord> out;
  for (const SceneRecord& scene : raw) {
    SceneRecord resampled;
    const SceneRecord* src = &scene;
    if (std::abs(scene.fps - settings.fps) > 1e-9) {
      resampled = resample_scene(scene, settings.fps);
      src = &resampled;
    }
    if (src->total_frames() == w && src->t_obs == settings.t_obs()) {
      out.push_back(*src);
    } else {
      for (SceneRecord& win : window(*src, settings, w)) {
        out.push_back(std::move(win));
      }
    }
  }
  return out;
}

// --- checkpoint round-trips ---------------------------------------------------------

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["base_lr"] = cfg.base_lr;
  j["decay_factor"] = cfg.decay_factor;
  j["decay_at_fraction"] = cfg.decay_at_fraction;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["mask"] = {{"mode", mask_mode_name(cfg.mask.mode)},
               {"chunk", cfg.mask.chunk},
               {"r_s_low", cfg.mask.r_s_low},
               {"r_s_high", cfg.mask.r_s_high},
               {"r_t", cfg.mask.r_t},
               {"fixed_ratio", cfg.mask.fixed_ratio}};
  j["settings"] = {{"obs_seconds", cfg.settings.obs_seconds},
                   {"pred_seconds", cfg.settings.pred_seconds},
                   {"fps", cfg.settings.fps}};
  json inputs = json::array();
  for (Modality m : cfg.input_modalities) inputs.push_back(modality_name(m));
  j["input_modalities"] = inputs;
  json outputs = json::array();
  for (Modality m : cfg.output_modalities) outputs.push_back(modality_name(m));
  j["output_modalities"] = outputs;
  j["traj_loss_weight"] = cfg.traj_loss_weight;
  j["pose_loss_weight"] = cfg.pose_loss_weight;
  j["grad_clip"] = cfg.grad_clip;
  j["max_egos_per_scene"] = cfg.max_egos_per_scene;
  return j;
}

json frame_settings_to_json(const FrameSettings& s) {
  return {{"obs_seconds", s.obs_seconds},
          {"pred_seconds", s.pred_seconds},
          {"fps", s.fps}};
}

FrameSettings frame_settings_from_json(const json& j) {
  FrameSettings s;
  s.obs_seconds = j.value("obs_seconds", s.obs_seconds);
  s.pred_seconds = j.value("pred_seconds", s.pred_seconds);
  s.fps = j.value("fps", s.fps);
  s.validate();
  return s;
}

std::vector<Modality> parse_modality_list(const std::string& csv) {
  // accepts both the canonical names and the paper-table shorthands
  auto one = [](std::string tok) {
    for (char& c : tok) c = static_cast<char>(std::tolower(c));
    if (tok == "t") return Modality::kTraj;
    if (tok == "3db") return Modality::kBox3d;
    if (tok == "2db") return Modality::kBox2d;
    if (tok == "3dp") return Modality::kPose3d;
    if (tok == "2dp") return Modality::kPose2d;
    return modality_from_name(tok);
  };
  std::vector<Modality> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(one(tok));
  }
  return out;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.base_lr = j.value("base_lr", cfg.base_lr);
  cfg.decay_factor = j.value("decay_factor", cfg.decay_factor);
  cfg.decay_at_fraction = j.value("decay_at_fraction", cfg.decay_at_fraction);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("mask")) {
    const json& m = j["mask"];
    cfg.mask.mode = mask_mode_from_name(m.value("mode", "dynamic"));
    cfg.mask.chunk = m.value("chunk", cfg.mask.chunk);
    cfg.mask.r_s_low = m.value("r_s_low", cfg.mask.r_s_low);
    cfg.mask.r_s_high = m.value("r_s_high", cfg.mask.r_s_high);
    cfg.mask.r_t = m.value("r_t", cfg.mask.r_t);
    cfg.mask.fixed_ratio = m.value("fixed_ratio", cfg.mask.fixed_ratio);
  }
  if (j.contains("settings")) cfg.settings = frame_settings_from_json(j["settings"]);
  if (j.contains("input_modalities")) {
    cfg.input_modalities.clear();
    for (const json& m : j["input_modalities"]) {
      cfg.input_modalities.push_back(modality_from_name(m.get<std::string>()));
    }
  }
  if (j.contains("output_modalities")) {
    cfg.output_modalities.clear();
    for (const json& m : j["output_modalities"]) {
      cfg.output_modalities.push_back(modality_from_name(m.get<std::string>()));
    }
  }
  cfg.traj_loss_weight = j.value("traj_loss_weight", cfg.traj_loss_weight);
  cfg.pose_loss_weight = j.value("pose_loss_weight", cfg.pose_loss_weight);
  cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
  cfg.max_egos_per_scene = j.value("max_egos_per_scene", cfg.max_egos_per_scene);
  return cfg;
}

void save_training_checkpoint(const std::string& path, const ModelState& state,
                              const AdamState& opt, int next_epoch,
                              const TrainConfig& cfg,
                              const std::vector<std::string>& train_splits) {
  json meta;
  meta["next_epoch"] = next_epoch;
  meta["train_config"] = train_config_to_json(cfg);
  meta["train_splits"] = train_splits;
  meta["adam"] = {{"step", opt.step},
                  {"beta1", opt.beta1},
                  {"beta2", opt.beta2},
                  {"eps", opt.eps}};
  std::vector<std::pair<std::string, Tensor>> extra;
  for (const auto& [name, param] : state.parameters()) {
    auto mit = opt.m.find(name);
    auto vit = opt.v.find(name);
    if (mit == opt.m.end() || vit == opt.v.end()) continue;
    extra.emplace_back("adam.m." + name, mit->second);
    extra.emplace_back("adam.v." + name, vit->second);
  }
  save_checkpoint(path, state, meta, extra);
}

ModelState load_training_checkpoint(const std::string& path, AdamState* opt,
                                    int* next_epoch,
                                    std::vector<std::string>* train_splits) {
  json meta;
  std::vector<std::pair<std::string, Tensor>> extra;
  ModelState state = load_checkpoint(path, &meta, &extra);
  if (next_epoch) *next_epoch = meta.value("next_epoch", 0);
  if (train_splits && meta.contains("train_splits")) {
    *train_splits = meta["train_splits"].get<std::vector<std::string>>();
  }
  if (opt && meta.contains("adam")) {
    opt->step = meta["adam"].value("step", 0LL);
    opt->beta1 = meta["adam"].value("beta1", 0.9);
    opt->beta2 = meta["adam"].value("beta2", 0.999);
    opt->eps = meta["adam"].value("eps", 1e-8);
    for (auto& [name, t] : extra) {
      if (name.rfind("adam.m.", 0) == 0) {
        opt->m.emplace(name.substr(7), std::move(t));
      } else if (name.rfind("adam.v.", 0) == 0) {
        opt->v.emplace(name.substr(7), std::move(t));
      }
    }
  }
  return state;
}

// --- file-based entry points ------------------------------------------------------------

PretrainResult pretrain(const std::vector<std::string>& dataset_paths,
                        const ModelConfig& mcfg, const TrainConfig& cfg,
                        const std::string& out_dir) {
  if (dataset_paths.empty()) {
    throw std::invalid_argument("pretrain: no datasets given");
  }
  std::vector<SceneRecord> raw;
  std::vector<std::string> splits;
  for (const std::string& path : dataset_paths) {
    CanonicalFile file = read_canonical(path);
    if (!file.split.empty()) splits.push_back(file.split);
    for (SceneRecord& s : file.scenes) raw.push_back(std::move(s));
  }
  if (raw.empty()) throw std::invalid_argument("pretrain: datasets are empty");
  const std::vector<SceneRecord> windows = prepare_windows(raw, cfg.settings);

  ModelState state(mcfg, cfg.seed);
  AdamState opt;
  TrainSummary summary = train_model(state, windows, cfg, &opt);

  std::filesystem::create_directories(out_dir);
  const std::string ckpt = out_dir + "/model.ckpt";
  save_training_checkpoint(ckpt, state, opt, cfg.epochs, cfg, splits);
  write_loss_csv(out_dir + "/loss.csv", summary.log);
  {
    json resolved;
    resolved["model"] = model_config_to_json(mcfg);
    resolved["train"] = train_config_to_json(cfg);
    resolved["datasets"] = dataset_paths;
    std::ofstream out(out_dir + "/resolved_config.json");
    out << resolved.dump(2) << "\n";
  }
  return {ckpt, std::move(summary)};
}

PretrainResult finetune(const std::string& checkpoint_path,
                        const std::string& dataset_path,
                        const FrameSettings& new_settings, TrainConfig cfg,
                        const std::string& out_dir) {
  new_settings.validate();
  cfg.settings = new_settings;

  AdamState opt_ignored;
  int next_epoch = 0;
  ModelState state = load_training_checkpoint(checkpoint_path, &opt_ignored,
                                              &next_epoch, nullptr);
  // the optimizer restarts for the new task; parameters carry over unchanged
  fps_stride(state.config.max_fps, new_settings.fps);

  CanonicalFile file = read_canonical(dataset_path);
  if (file.scenes.empty()) {
    throw std::invalid_argument("finetune: dataset is empty");
  }
  const std::vector<SceneRecord> windows = prepare_windows(file.scenes, cfg.settings);
  if (windows.empty()) {
    throw std::invalid_argument("finetune: no usable windows in dataset");
  }

  AdamState opt;
  TrainSummary summary = train_model(state, windows, cfg, &opt);

  std::filesystem::create_directories(out_dir);
  const std::string ckpt = out_dir + "/model.ckpt";
  std::vector<std::string> splits;
  if (!file.split.empty()) splits.push_back(file.split);
  save_training_checkpoint(ckpt, state, opt, cfg.epochs, cfg, splits);
  write_loss_csv(out_dir + "/loss.csv", summary.log);
  {
    json resolved;
    resolved["model"] = model_config_to_json(state.config);
    resolved["train"] = train_config_to_json(cfg);
    resolved["base_checkpoint"] = checkpoint_path;
    std::ofstream out(out_dir + "/resolved_config.json");
    out << resolved.dump(2) << "\n";
  }
  return {ckpt, std::move(summary)};
}

std::vector<FewShotRow> few_shot(const ModelState& pretrained,
                                 const std::vector<SceneRecord>& train_pool,
                                 const std::vector<SceneRecord>& eval_set,
                                 const TrainConfig& cfg,
                                 std::vector<int> n_grid) {
  {
    std::set<std::string> train_ids;
    for (const SceneRecord& s : train_pool) train_ids.insert(s.scene_id);
    for (const SceneRecord& s : eval_set) {
      if (train_ids.count(s.scene_id)) {
        throw std::invalid_argument("few_shot: eval scene '" + s.scene_id +
                                    "' overlaps the training pool");
      }
    }
  }

  // clamp the grid to the pool and deduplicate
  std::vector<int> grid;
  for (int n : n_grid) {
    n = std::min<int>(n, static_cast<int>(train_pool.size()));
    if (n > 0 && (grid.empty() || grid.back() != n)) grid.push_back(n);
  }

  EvalTask task;
  task.input_modalities = cfg.input_modalities;
  task.output_modalities = cfg.output_modalities;

  std::vector<FewShotRow> rows;
  for (const std::string& variant : {std::string("pretrained"), std::string("scratch")}) {
    for (int n : grid) {
      ModelState state = variant == "pretrained"
                             ? pretrained.clone()
                             : ModelState(pretrained.config, cfg.seed);
      const std::vector<SceneRecord> subset(train_pool.begin(),
                                            train_pool.begin() + n);
      train_model(state, subset, cfg);
      const MetricReport r = evaluate(state, eval_set, task);
      rows.push_back({n, variant, r.ade, r.fde, r.min_ade_k, r.min_fde_k});
    }
  }
  return rows;
}

void write_loss_csv(const std::string& path,
                    const std::vector<TrainLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss log: " + path);
  out << "epoch,step,lr,total,traj_term,pose_term\n";
  out.precision(17);
  for (const TrainLogRow& row : log) {
    out << row.epoch << "," << row.step << "," << row.lr << "," << row.total
        << "," << row.traj_term << "," << row.pose_term << "\n";
  }
}

}  // namespace motioncast
