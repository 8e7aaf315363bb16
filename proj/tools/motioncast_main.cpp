// motioncast: multimodal human-motion forecasting toolkit.
// Subcommands wire the data framework, the dual-transformer predictor, the
// evaluation harnesses and the social-force navigation benchmark into
// reproducible, config-driven runs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motioncast/checkpoint.hpp"
#include "motioncast/data.hpp"
#include "motioncast/metrics.hpp"
#include "motioncast/model.hpp"
#include "motioncast/navsim.hpp"
#include "motioncast/training.hpp"

namespace {

using json = nlohmann::json;
using namespace motioncast;

constexpr const char* kVersion = "motioncast 0.1.0";

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;
  return j;
}

void write_provenance(const std::string& out_dir, const json& resolved) {
  std::filesystem::create_directories(out_dir);
  json j = resolved;
  j["tool_version"] = kVersion;
  std::ofstream out(out_dir + "/resolved_config.json");
  out << j.dump(2) << "\n";
}

json modalities_to_json(const std::vector<Modality>& ms) {
  json arr = json::array();
  for (Modality m : ms) arr.push_back(modality_name(m));
  return arr;
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig cfg;
  cfg.min_agents = j.value("min_agents", cfg.min_agents);
  cfg.max_agents = j.value("max_agents", cfg.max_agents);
  cfg.arena_half = j.value("arena_half", cfg.arena_half);
  cfg.speed_min = j.value("speed_min", cfg.speed_min);
  cfg.speed_max = j.value("speed_max", cfg.speed_max);
  if (j.contains("settings")) cfg.settings = frame_settings_from_json(j["settings"]);
  cfg.with_pose = j.value("with_pose", cfg.with_pose);
  cfg.with_boxes = j.value("with_boxes", cfg.with_boxes);
  cfg.with_2d = j.value("with_2d", cfg.with_2d);
  cfg.goal_switch = j.value("goal_switch", cfg.goal_switch);
  cfg.switch_prob = j.value("switch_prob", cfg.switch_prob);
  cfg.turn_min = j.value("turn_min", cfg.turn_min);
  cfg.turn_max = j.value("turn_max", cfg.turn_max);
  cfg.scene_prefix = j.value("scene_prefix", cfg.scene_prefix);
  return cfg;
}

json synth_config_to_json(const SynthConfig& cfg) {
  json j;
  j["min_agents"] = cfg.min_agents;
  j["max_agents"] = cfg.max_agents;
  j["arena_half"] = cfg.arena_half;
  j["speed_min"] = cfg.speed_min;
  j["speed_max"] = cfg.speed_max;
  j["settings"] = frame_settings_to_json(cfg.settings);
  j["with_pose"] = cfg.with_pose;
  j["with_boxes"] = cfg.with_boxes;
  j["with_2d"] = cfg.with_2d;
  j["goal_switch"] = cfg.goal_switch;
  j["switch_prob"] = cfg.switch_prob;
  j["turn_min"] = cfg.turn_min;
  j["turn_max"] = cfg.turn_max;
  j["scene_prefix"] = cfg.scene_prefix;
  return j;
}

CorruptionSpec parse_corruption(const std::string& spec_str) {
  CorruptionSpec spec;
  std::stringstream ss(spec_str);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("corruption spec entries look like key=value, got '" +
                               kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "keep") {
      spec.keep_fraction = std::stod(val);
    } else if (key == "std") {
      spec.gaussian_std = std::stod(val);
    } else if (key == "unit") {
      if (val == "mm") {
        spec.std_unit = CorruptionSpec::Unit::kMillimeters;
      } else if (val == "m") {
        spec.std_unit = CorruptionSpec::Unit::kMeters;
      } else {
        throw std::runtime_error("corruption unit must be mm or m");
      }
    } else if (key == "seed") {
      spec.seed = std::stoull(val);
    } else {
      throw std::runtime_error("unknown corruption key '" + key + "'");
    }
  }
  return spec;
}

// --- subcommands -------------------------------------------------------------

int run_synth(const std::string& config_path, std::uint64_t seed, int scenes,
              const std::string& out, const std::string& split) {
  SynthConfig cfg = synth_config_from_json(load_config(config_path));
  const std::vector<SceneRecord> generated = synth_generate(seed, scenes, cfg);
  write_canonical(out, generated, split);

  json resolved;
  resolved["task"] = "synth";
  resolved["seed"] = seed;
  resolved["scenes"] = scenes;
  resolved["out"] = out;
  resolved["split"] = split;
  resolved["synth"] = synth_config_to_json(cfg);
  write_provenance(std::filesystem::path(out).parent_path().empty()
                       ? "."
                       : std::filesystem::path(out).parent_path().string(),
                   resolved);
  std::cout << "wrote " << generated.size() << " scenes to " << out << "\n";
  return 0;
}

int run_convert(const std::string& in, const std::string& out, double fps,
                const std::string& window_spec, const std::string& split) {
  CanonicalFile file = read_canonical(in);
  std::vector<SceneRecord> scenes = std::move(file.scenes);
  if (fps > 0) {
    std::vector<SceneRecord> resampled;
    for (const SceneRecord& s : scenes) resampled.push_back(resample_scene(s, fps));
    scenes = std::move(resampled);
  }
  if (!window_spec.empty()) {
    double obs = 0, pred = 0;
    int stride = 0;
    if (std::sscanf(window_spec.c_str(), "%lf:%lf:%d", &obs, &pred, &stride) != 3) {
      throw std::runtime_error("window spec is obs_seconds:pred_seconds:stride_frames");
    }
    FrameSettings settings{obs, pred, scenes.empty() ? 5 : scenes[0].fps};
    std::vector<SceneRecord> windows;
    for (const SceneRecord& s : scenes) {
      for (SceneRecord& w : window(s, settings, stride)) windows.push_back(std::move(w));
    }
    scenes = std::move(windows);
  }
  write_canonical(out, scenes, split.empty() ? file.split : split);
  std::cout << "wrote " << scenes.size() << " scenes to " << out << "\n";
  return 0;
}

int run_pretrain(const std::string& config_path, const std::string& out_dir) {
  const json cfg_json = load_config(config_path);
  const ModelConfig mcfg = model_config_from_json(cfg_json.value("model", json::object()));
  const TrainConfig tcfg = train_config_from_json(cfg_json.value("train", json::object()));
  const std::vector<std::string> paths =
      cfg_json.at("datasets").get<std::vector<std::string>>();

  PretrainResult result = pretrain(paths, mcfg, tcfg, out_dir);

  json resolved;
  resolved["task"] = "pretrain";
  resolved["model"] = model_config_to_json(mcfg);
  resolved["train"] = train_config_to_json(tcfg);
  resolved["datasets"] = paths;
  write_provenance(out_dir, resolved);
  std::cout << "checkpoint: " << result.checkpoint_path << "\n"
            << "final epoch loss: " << result.summary.epoch_losses.back() << "\n";
  return 0;
}

int run_finetune(const std::string& config_path, const std::string& out_dir) {
  const json cfg_json = load_config(config_path);
  const std::string ckpt = cfg_json.at("checkpoint").get<std::string>();
  const std::string data = cfg_json.at("dataset").get<std::string>();
  const TrainConfig tcfg = train_config_from_json(cfg_json.value("train", json::object()));
  const FrameSettings settings =
      cfg_json.contains("settings") ? frame_settings_from_json(cfg_json["settings"])
                                    : tcfg.settings;

  PretrainResult result = finetune(ckpt, data, settings, tcfg, out_dir);

  json resolved;
  resolved["task"] = "finetune";
  resolved["checkpoint"] = ckpt;
  resolved["dataset"] = data;
  resolved["settings"] = frame_settings_to_json(settings);
  resolved["train"] = train_config_to_json(tcfg);
  write_provenance(out_dir, resolved);
  std::cout << "checkpoint: " << result.checkpoint_path << "\n"
            << "final epoch loss: " << result.summary.epoch_losses.back() << "\n";
  return 0;
}

int run_fewshot(const std::string& config_path, const std::string& out_dir) {
  const json cfg_json = load_config(config_path);
  const std::string ckpt = cfg_json.at("checkpoint").get<std::string>();
  const TrainConfig tcfg = train_config_from_json(cfg_json.value("train", json::object()));

  CanonicalFile train_file = read_canonical(cfg_json.at("train_data").get<std::string>());
  CanonicalFile eval_file = read_canonical(cfg_json.at("eval_data").get<std::string>());
  check_split_disjoint({train_file.split}, eval_file.split);

  ModelState pretrained = load_checkpoint(ckpt);
  const std::vector<SceneRecord> pool = prepare_windows(train_file.scenes, tcfg.settings);
  const std::vector<SceneRecord> eval_set =
      prepare_windows(eval_file.scenes, tcfg.settings);

  std::vector<int> grid{50, 100, 250, 500, 1000};
  if (cfg_json.contains("n_grid")) grid = cfg_json["n_grid"].get<std::vector<int>>();

  const std::vector<FewShotRow> rows = few_shot(pretrained, pool, eval_set, tcfg, grid);

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/fewshot.csv");
  csv << "n,variant,ade,fde,min_ade_k,min_fde_k\n";
  for (const FewShotRow& r : rows) {
    csv << r.n << "," << r.variant << "," << r.ade << "," << r.fde << ","
        << r.min_ade_k << "," << r.min_fde_k << "\n";
  }
  json resolved;
  resolved["task"] = "fewshot";
  resolved["checkpoint"] = ckpt;
  resolved["train"] = train_config_to_json(tcfg);
  write_provenance(out_dir, resolved);
  for (const FewShotRow& r : rows) {
    std::cout << r.variant << " n=" << r.n << "  ADE " << r.ade << "  FDE "
              << r.fde << "\n";
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& modality_rows, const std::string& corrupt_spec,
             const std::string& out_dir, const std::string& mpjpe_ms_csv) {
  json meta;
  ModelState state = load_checkpoint(ckpt_path, &meta);
  CanonicalFile file = read_canonical(data_path);
  if (meta.contains("train_splits")) {
    check_split_disjoint(meta["train_splits"].get<std::vector<std::string>>(),
                         file.split);
  }

  FrameSettings settings;
  if (meta.contains("train_config") && meta["train_config"].contains("settings")) {
    settings = frame_settings_from_json(meta["train_config"]["settings"]);
  }
  std::vector<Modality> outputs{Modality::kTraj};
  if (meta.contains("train_config") &&
      meta["train_config"].contains("output_modalities")) {
    outputs.clear();
    for (const json& m : meta["train_config"]["output_modalities"]) {
      outputs.push_back(modality_from_name(m.get<std::string>()));
    }
  }
  const std::vector<SceneRecord> scenes = prepare_windows(file.scenes, settings);

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/eval.csv");
  csv << "modalities,corruption,ade,fde,min_ade_k,min_fde_k,k,samples";
  std::vector<int> mpjpe_ms;
  if (!mpjpe_ms_csv.empty()) {
    std::stringstream ss(mpjpe_ms_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) mpjpe_ms.push_back(std::stoi(tok));
    for (int ms : mpjpe_ms) csv << ",mpjpe_" << ms << "ms_mm";
  }
  csv << "\n";

  json rows_json = json::array();
  std::stringstream row_stream(modality_rows);
  std::string row;
  while (std::getline(row_stream, row, ';')) {
    EvalTask task;
    task.input_modalities = parse_modality_list(row);
    task.output_modalities = outputs;
    task.mpjpe_ms = mpjpe_ms;
    if (!corrupt_spec.empty()) task.corruption = parse_corruption(corrupt_spec);

    const MetricReport r = evaluate(state, scenes, task);
    csv << row << "," << (corrupt_spec.empty() ? "none" : corrupt_spec) << ","
        << r.ade << "," << r.fde << "," << r.min_ade_k << "," << r.min_fde_k
        << "," << r.k << "," << r.sample_count;
    for (int ms : mpjpe_ms) {
      csv << "," << (r.mpjpe_at_ms.count(ms) ? r.mpjpe_at_ms.at(ms) : -1.0);
    }
    csv << "\n";

    json jr;
    jr["modalities"] = row;
    jr["ade"] = r.ade;
    jr["fde"] = r.fde;
    jr["min_ade_k"] = r.min_ade_k;
    jr["min_fde_k"] = r.min_fde_k;
    jr["k"] = r.k;
    jr["samples"] = r.sample_count;
    for (int ms : mpjpe_ms) {
      if (r.mpjpe_at_ms.count(ms)) {
        jr["mpjpe_mm"][std::to_string(ms)] = r.mpjpe_at_ms.at(ms);
      }
    }
    rows_json.push_back(jr);

    std::cout << "| " << row << " | ADE " << r.ade << " | FDE " << r.fde
              << " | MinADE_" << r.k << " " << r.min_ade_k << " | MinFDE_" << r.k
              << " " << r.min_fde_k << " | n=" << r.sample_count << " |\n";
  }

  json resolved;
  resolved["task"] = "eval";
  resolved["checkpoint"] = ckpt_path;
  resolved["data"] = data_path;
  resolved["modalities"] = modality_rows;
  resolved["corruption"] = corrupt_spec;
  resolved["note"] = "metrics aggregate over every fully-observed agent as ego";
  resolved["rows"] = rows_json;
  write_provenance(out_dir, resolved);
  std::ofstream js(out_dir + "/eval.json");
  js << rows_json.dump(2) << "\n";
  return 0;
}

int run_ablate_mask(const std::string& config_path, const std::string& out_dir) {
  const json cfg_json = load_config(config_path);
  const ModelConfig mcfg = model_config_from_json(cfg_json.value("model", json::object()));
  TrainConfig tcfg = train_config_from_json(cfg_json.value("train", json::object()));
  CanonicalFile train_file = read_canonical(cfg_json.at("train_data").get<std::string>());
  CanonicalFile eval_file = read_canonical(cfg_json.at("eval_data").get<std::string>());
  check_split_disjoint({train_file.split}, eval_file.split);
  const std::vector<SceneRecord> windows =
      prepare_windows(train_file.scenes, tcfg.settings);
  const std::vector<SceneRecord> eval_set =
      prepare_windows(eval_file.scenes, tcfg.settings);

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/ablate_mask.csv");
  csv << "mode,train_seconds,final_loss,ade,fde,min_ade_k,min_fde_k\n";

  for (MaskMode mode : {MaskMode::kModalityMeta, MaskMode::kFixed,
                        MaskMode::kDynamic, MaskMode::kNone}) {
    TrainConfig run_cfg = tcfg;
    run_cfg.mask.mode = mode;
    ModelState state(mcfg, run_cfg.seed);
    const auto t0 = std::chrono::steady_clock::now();
    TrainSummary summary = train_model(state, windows, run_cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    EvalTask task;
    task.input_modalities = run_cfg.input_modalities;
    task.output_modalities = run_cfg.output_modalities;
    const MetricReport r = evaluate(state, eval_set, task);
    csv << mask_mode_name(mode) << "," << secs << ","
        << summary.epoch_losses.back() << "," << r.ade << "," << r.fde << ","
        << r.min_ade_k << "," << r.min_fde_k << "\n";
    std::cout << mask_mode_name(mode) << ": " << secs << " s, eval ADE " << r.ade
              << ", FDE " << r.fde << "\n";
  }

  json resolved;
  resolved["task"] = "ablate-mask";
  resolved["model"] = model_config_to_json(mcfg);
  resolved["train"] = train_config_to_json(tcfg);
  write_provenance(out_dir, resolved);
  return 0;
}

int run_navsim(int episodes, const std::string& navigator,
               const std::string& ckpt_path, const std::string& scenario_path,
               double gain, std::uint64_t seed, double timeout,
               const std::string& out_dir) {
  SFParams params;
  params.predictor_gain = gain;

  ModelState state;
  std::unique_ptr<Predictor> predictor;
  if (navigator == "cv") {
    predictor = std::make_unique<CvPredictor>(5.0, 10);
  } else if (navigator == "model") {
    if (ckpt_path.empty()) {
      throw std::runtime_error("navigator 'model' needs --checkpoint");
    }
    state = load_checkpoint(ckpt_path);
    predictor = std::make_unique<CheckpointPredictor>(&state, 5.0, 10);
  } else if (navigator != "baseline") {
    throw std::runtime_error("navigator must be baseline, cv or model");
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/episodes.csv");
  csv << "episode,seed,navigator_baseline_time,baseline_collided,baseline_timeout,"
         "navigator_time,collided,timeout\n";

  std::vector<EpisodeResult> base_results, nav_results;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t ep_seed = mix_seed(seed, 0xba5e, e);
    const Scenario scenario = scenario_path.empty()
                                  ? crossing_scenario(ep_seed)
                                  : load_scenario(scenario_path);

    NavigatorConfig base_cfg;
    base_cfg.params = params;
    const EpisodeResult base = run_episode(scenario, base_cfg, timeout, ep_seed);

    NavigatorConfig nav_cfg;
    nav_cfg.params = params;
    nav_cfg.predictor = predictor.get();
    const EpisodeResult nav =
        predictor ? run_episode(scenario, nav_cfg, timeout, ep_seed) : base;

    base_results.push_back(base);
    nav_results.push_back(nav);
    csv << e << "," << ep_seed << "," << base.completion_time << ","
        << base.collided << "," << base.timed_out << "," << nav.completion_time
        << "," << nav.collided << "," << nav.timed_out << "\n";
  }

  const BenchmarkStats base_stats = summarize(base_results);
  const BenchmarkStats nav_stats = summarize(nav_results);
  auto pct = [](double a, double b) { return b == 0.0 ? 0.0 : 100.0 * (b - a) / b; };

  json summary;
  summary["baseline"] = {{"mean_completion_time", base_stats.mean_completion_time},
                         {"collision_rate", base_stats.collision_rate},
                         {"timeouts", base_stats.timeouts}};
  summary[navigator] = {{"mean_completion_time", nav_stats.mean_completion_time},
                        {"collision_rate", nav_stats.collision_rate},
                        {"timeouts", nav_stats.timeouts}};
  summary["completion_gain_pct"] =
      pct(nav_stats.mean_completion_time, base_stats.mean_completion_time);
  summary["collision_gain_pct"] =
      pct(nav_stats.collision_rate, base_stats.collision_rate);
  std::ofstream js(out_dir + "/summary.json");
  js << summary.dump(2) << "\n";

  json resolved;
  resolved["task"] = "navsim";
  resolved["episodes"] = episodes;
  resolved["navigator"] = navigator;
  resolved["predictor_gain"] = gain;
  resolved["seed"] = seed;
  write_provenance(out_dir, resolved);

  std::cout << "baseline: time " << base_stats.mean_completion_time
            << " s, collision rate " << base_stats.collision_rate << "\n"
            << navigator << ": time " << nav_stats.mean_completion_time
            << " s, collision rate " << nav_stats.collision_rate << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - multimodal human-motion forecasting toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::uint64_t seed = 7;

  auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
  int synth_scenes = 64;
  std::string synth_out = "scenes.ndjson", synth_split;
  synth->add_option("--config", config_path, "JSON config file");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--scenes", synth_scenes, "number of scenes");
  synth->add_option("--out", synth_out, "output NDJSON path");
  synth->add_option("--split", synth_split, "split tag written to the header");

  auto* convert = app.add_subcommand("convert", "resample / window canonical data");
  std::string conv_in, conv_out, conv_window, conv_split;
  double conv_fps = 0;
  convert->add_option("--in", conv_in)->required();
  convert->add_option("--out", conv_out)->required();
  convert->add_option("--fps", conv_fps, "resample to this rate");
  convert->add_option("--window", conv_window, "obs_seconds:pred_seconds:stride_frames");
  convert->add_option("--split", conv_split, "override split tag");

  auto* pretrain_cmd = app.add_subcommand("pretrain", "pre-train on merged datasets");
  pretrain_cmd->add_option("--config", config_path, "JSON config file")->required();
  pretrain_cmd->add_option("--out", out_dir, "output directory");

  auto* finetune_cmd = app.add_subcommand("finetune", "fine-tune under new frame settings");
  finetune_cmd->add_option("--config", config_path)->required();
  finetune_cmd->add_option("--out", out_dir);

  auto* fewshot_cmd = app.add_subcommand("fewshot", "few-shot adaptation curve");
  fewshot_cmd->add_option("--config", config_path)->required();
  fewshot_cmd->add_option("--out", out_dir);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_data, eval_modalities = "traj", eval_corrupt, eval_mpjpe;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--modalities", eval_modalities,
                       "semicolon-separated subset rows, e.g. 'T;T,3dP'");
  eval_cmd->add_option("--corrupt", eval_corrupt, "keep=0.5,std=25,unit=mm,seed=0");
  eval_cmd->add_option("--mpjpe-ms", eval_mpjpe, "comma-separated timestamps");
  eval_cmd->add_option("--out", out_dir);

  auto* ablate_cmd = app.add_subcommand("ablate-mask", "compare masking strategies");
  ablate_cmd->add_option("--config", config_path)->required();
  ablate_cmd->add_option("--out", out_dir);

  auto* nav_cmd = app.add_subcommand("navsim", "navigation benchmark");
  int nav_episodes = 200;
  std::string nav_navigator = "cv", nav_ckpt, nav_scenario;
  double nav_gain = 1.0, nav_timeout = 40.0;
  nav_cmd->add_option("--episodes", nav_episodes);
  nav_cmd->add_option("--navigator", nav_navigator, "baseline | cv | model");
  nav_cmd->add_option("--checkpoint", nav_ckpt);
  nav_cmd->add_option("--scenario", nav_scenario, "scenario JSON (default: crossing suite)");
  nav_cmd->add_option("--gain", nav_gain, "predictor force gain");
  nav_cmd->add_option("--seed", seed);
  nav_cmd->add_option("--timeout", nav_timeout, "episode timeout seconds");
  nav_cmd->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // usage text, exit 2 on bad subcommand per CLI11
  }

  try {
    if (synth->parsed()) {
      return run_synth(config_path, seed, synth_scenes, synth_out, synth_split);
    }
    if (convert->parsed()) {
      return run_convert(conv_in, conv_out, conv_fps, conv_window, conv_split);
    }
    if (pretrain_cmd->parsed()) return run_pretrain(config_path, out_dir);
    if (finetune_cmd->parsed()) return run_finetune(config_path, out_dir);
    if (fewshot_cmd->parsed()) return run_fewshot(config_path, out_dir);
    if (eval_cmd->parsed()) {
      return run_eval(eval_ckpt, eval_data, eval_modalities, eval_corrupt,
                      out_dir, eval_mpjpe);
    }
    if (ablate_cmd->parsed()) return run_ablate_mask(config_path, out_dir);
    if (nav_cmd->parsed()) {
      return run_navsim(nav_episodes, nav_navigator, nav_ckpt, nav_scenario,
                        nav_gain, seed, nav_timeout, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
