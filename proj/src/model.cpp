#include "motioncast/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace motioncast {

void ModelConfig::validate() const {
  if (hidden_dim <= 0 || hidden_dim % heads != 0) {
    throw std::invalid_argument("model config: hidden_dim must divide by heads");
  }
  if (num_modes < 1) throw std::invalid_argument("model config: need K >= 1");
  if (layers_stage1 < 1 || layers_stage2 < 1) {
    throw std::invalid_argument("model config: need at least one layer per stage");
  }
}

// --- ModelState ------------------------------------------------------------------

namespace {

std::string layer_prefix(const char* stage, int layer) {
  return std::string(stage) + "." + std::to_string(layer);
}

}  // namespace

ModelState::ModelState(const ModelConfig& cfg, std::uint64_t seed) : config(cfg) {
  cfg.validate();
  const int d = cfg.hidden_dim;
  std::mt19937_64 rng(mix_seed(seed, 0x90de1));

  auto linear = [&](const std::string& name, int in, int out) {
    Tensor& w = add(name + ".w", {in, out});
    const double std = std::sqrt(2.0 / (in + out));
    std::normal_distribution<double> dist(0.0, std);
    for (double& v : w.data()) v = dist(rng);
    add(name + ".b", {1, out});
  };
  auto embedding = [&](const std::string& name, int rows) {
    Tensor& e = add(name, {rows, d});
    std::normal_distribution<double> dist(0.0, 0.02);
    for (double& v : e.data()) v = dist(rng);
  };
  auto ln = [&](const std::string& name) {
    Tensor& g = add(name + ".g", {1, d});
    for (double& v : g.data()) v = 1.0;
    add(name + ".b", {1, d});
  };
  auto linear_nb = [&](const std::string& name, int in, int out) {
    Tensor& w = add(name + ".w", {in, out});
    const double std = std::sqrt(2.0 / (in + out));
    std::normal_distribution<double> dist(0.0, std);
    for (double& v : w.data()) v = dist(rng);
  };
  auto block = [&](const std::string& p) {
    ln(p + ".ln1");
    linear(p + ".attn.q", d, d);
    // no key bias: softmax is invariant to a per-query constant shift
    linear_nb(p + ".attn.k", d, d);
    linear(p + ".attn.v", d, d);
    linear(p + ".attn.o", d, d);
    ln(p + ".ln2");
    linear(p + ".ffn.1", d, d * cfg.ff_mult);
    linear(p + ".ffn.2", d * cfg.ff_mult, d);
  };

  for (Modality m : all_modalities()) {
    linear(std::string("proj.") + modality_name(m), modality_feature_width(m), d);
  }
  embedding("mask_embedding", 1);
  embedding("query.traj", 1);
  embedding("query.pose", kPoseJointCount);
  for (int l = 0; l < cfg.layers_stage1; ++l) block(layer_prefix("s1", l));
  for (int l = 0; l < cfg.layers_stage2; ++l) block(layer_prefix("s2", l));
  ln("final_ln");
  for (int k = 0; k < cfg.num_modes; ++k) {
    const std::string p = "head.traj." + std::to_string(k);
    linear(p + ".1", d, d);
    linear(p + ".2", d, 2);
  }
  linear("head.pose.1", d, d);
  linear("head.pose.2", d, 3);
}

Tensor& ModelState::add(const std::string& name, std::vector<int> shape) {
  params_.emplace_back(name, Tensor::zeros(std::move(shape)));
  params_.back().second.set_requires_grad(true);
  index_[name] = params_.size() - 1;
  return params_.back().second;
}

Tensor& ModelState::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return params_[it->second].second;
}

const Tensor& ModelState::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return params_[it->second].second;
}

bool ModelState::has_param(const std::string& name) const {
  return index_.count(name) > 0;
}

long long ModelState::parameter_count() const {
  long long n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

ProjectionParams ModelState::projection_params() const {
  ProjectionParams p;
  for (Modality m : all_modalities()) {
    const std::string base = std::string("proj.") + modality_name(m);
    p.weight[static_cast<int>(m)] = param(base + ".w");
    p.bias[static_cast<int>(m)] = param(base + ".b");
  }
  p.mask_embedding = param("mask_embedding");
  p.traj_query = param("query.traj");
  p.pose_query = param("query.pose");
  return p;
}

ModelState ModelState::clone() const {
  ModelState copy;
  copy.config = config;
  copy.index_ = index_;
  copy.params_.reserve(params_.size());
  for (const auto& [name, t] : params_) {
    Tensor c = t.clone();
    c.set_requires_grad(true);
    copy.params_.emplace_back(name, std::move(c));
  }
  return copy;
}

// --- tokenize_sample --------------------------------------------------------------

TokenizedSample tokenize_sample(const SceneRecord& normalized, int ego_index,
                                const std::vector<Modality>& input_modalities,
                                const std::vector<Modality>& output_modalities,
                                const ModelState& state, const MaskSpec& mask,
                                std::mt19937_64& rng) {
  if (normalized.agents.empty()) {
    throw std::invalid_argument("tokenize_sample: no agents");
  }
  bool has_traj = false;
  for (Modality m : input_modalities) has_traj |= m == Modality::kTraj;
  if (!has_traj) {
    throw std::invalid_argument("tokenize_sample: trajectory modality required");
  }

  // deterministic modality order
  std::vector<Modality> inputs;
  for (Modality m : all_modalities()) {
    if (std::find(input_modalities.begin(), input_modalities.end(), m) !=
        input_modalities.end()) {
      inputs.push_back(m);
    }
  }

  TokenizedSample sample;
  std::vector<TokenSequence> neighbors;
  for (int i = 0; i < static_cast<int>(normalized.agents.size()); ++i) {
    TokenSequence seq = project(normalized.agents[i], normalized.t_obs,
                                normalized.t_pred, inputs);
    upsample_pad(seq, normalized.fps, state.config.max_fps);
    if (i == ego_index) {
      append_future_queries(seq, output_modalities);
      sample.agents.insert(sample.agents.begin(), std::move(seq));
    } else {
      neighbors.push_back(std::move(seq));
    }
  }
  std::stable_sort(neighbors.begin(), neighbors.end(),
                   [](const TokenSequence& a, const TokenSequence& b) {
                     return a.sort_key < b.sort_key;
                   });
  for (TokenSequence& n : neighbors) sample.agents.push_back(std::move(n));

  const ProjectionParams params = state.projection_params();
  const BiDirEncoder enc = state.encoder();
  for (TokenSequence& seq : sample.agents) {
    apply_mask_pipeline(seq, mask, rng);
    assemble_features(seq, params, enc);
  }
  return sample;
}

// --- transformer ---------------------------------------------------------------------

namespace {

Tensor attention(const Tensor& x, const ModelState& s, const std::string& p,
                 const Tensor& zero_mask) {
  const ModelConfig& cfg = s.config;
  const int dh = cfg.hidden_dim / cfg.heads;

  Tensor q = add_rowvec(matmul(x, s.param(p + ".q.w")), s.param(p + ".q.b"));
  Tensor k = matmul(x, s.param(p + ".k.w"));
  Tensor v = add_rowvec(matmul(x, s.param(p + ".v.w")), s.param(p + ".v.b"));

  std::vector<Tensor> heads;
  heads.reserve(cfg.heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < cfg.heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    Tensor weights = softmax_masked(scores, zero_mask);
    heads.push_back(matmul(weights, vh));
  }
  Tensor ctx = cfg.heads == 1 ? heads[0] : concat_cols(heads);
  return add_rowvec(matmul(ctx, s.param(p + ".o.w")), s.param(p + ".o.b"));
}

}  // namespace

Tensor transformer_stack(Tensor x, const ModelState& s, const char* stage,
                         int layers) {
  const ModelConfig& cfg = s.config;
  Tensor zero_mask = Tensor::zeros({x.rows(), x.rows()});
  for (int l = 0; l < layers; ++l) {
    const std::string p = layer_prefix(stage, l);
    Tensor n1 = layer_norm(x, s.param(p + ".ln1.g"), s.param(p + ".ln1.b"),
                           cfg.ln_eps);
    x = add(x, attention(n1, s, p + ".attn", zero_mask));
    Tensor n2 = layer_norm(x, s.param(p + ".ln2.g"), s.param(p + ".ln2.b"),
                           cfg.ln_eps);
    Tensor h = gelu(add_rowvec(matmul(n2, s.param(p + ".ffn.1.w")),
                               s.param(p + ".ffn.1.b")));
    Tensor f = add_rowvec(matmul(h, s.param(p + ".ffn.2.w")),
                          s.param(p + ".ffn.2.b"));
    x = add(x, f);
  }
  return x;
}

namespace {

Tensor mlp_head(const Tensor& x, const ModelState& s, const std::string& p) {
  Tensor h = gelu(add_rowvec(matmul(x, s.param(p + ".1.w")),
                             s.param(p + ".1.b")));
  return add_rowvec(matmul(h, s.param(p + ".2.w")), s.param(p + ".2.b"));
}

}  // namespace

ForwardOutput model_forward(const TokenizedSample& sample,
                            const ModelState& state) {
  if (sample.agents.empty()) {
    throw std::invalid_argument("model_forward: zero agents");
  }
  const TokenSequence& ego = sample.agents[0];
  if (ego.kept_count(Modality::kTraj, /*include_replaced=*/true) == 0) {
    throw std::invalid_argument("model_forward: ego has no trajectory tokens");
  }

  // stage 1, independently per agent
  std::vector<Tensor> stage1;
  stage1.reserve(sample.agents.size());
  for (const TokenSequence& seq : sample.agents) {
    if (!seq.features.defined() || seq.features.rows() == 0) {
      stage1.emplace_back();
      continue;
    }
    stage1.push_back(transformer_stack(seq.features, state, "s1",
                                       state.config.layers_stage1));
  }

  // stage 2: trajectory + 3-D pose tokens of all agents, ego queries last
  // within the ego block
  std::vector<Tensor> blocks;
  std::vector<int> ego_traj_query_rows, ego_pose_query_rows;
  int row_base = 0;
  for (std::size_t ai = 0; ai < sample.agents.size(); ++ai) {
    const TokenSequence& seq = sample.agents[ai];
    if (!stage1[ai].defined()) continue;
    std::vector<int> rows;
    std::vector<const TokenMeta*> picked;
    for (const TokenMeta& t : seq.tokens) {
      if (!t.kept || t.row < 0) continue;
      const bool social_modality =
          t.modality == Modality::kTraj || t.modality == Modality::kPose3d;
      if (!social_modality) continue;
      if (t.is_future_query && ai != 0) continue;
      rows.push_back(t.row);
      picked.push_back(&t);
    }
    if (rows.empty()) continue;
    for (std::size_t j = 0; j < picked.size(); ++j) {
      if (!picked[j]->is_future_query) continue;
      const int pos = row_base + static_cast<int>(j);
      (picked[j]->modality == Modality::kTraj ? ego_traj_query_rows
                                              : ego_pose_query_rows)
          .push_back(pos);
    }
    blocks.push_back(gather_rows(stage1[ai], rows));
    row_base += static_cast<int>(rows.size());
  }
  if (blocks.empty()) {
    throw std::invalid_argument("model_forward: no stage-2 tokens");
  }

  Tensor s2_in = blocks.size() == 1 ? blocks[0] : concat_rows(blocks);
  Tensor s2_out = transformer_stack(s2_in, state, "s2", state.config.layers_stage2);
  Tensor fine = layer_norm(s2_out, state.param("final_ln.g"),
                           state.param("final_ln.b"), state.config.ln_eps);

  ForwardOutput out;
  out.t_pred = ego.t_pred;
  if (!ego_traj_query_rows.empty()) {
    Tensor q_traj = gather_rows(fine, ego_traj_query_rows);
    out.traj_modes.reserve(state.config.num_modes);
    for (int k = 0; k < state.config.num_modes; ++k) {
      out.traj_modes.push_back(
          mlp_head(q_traj, state, "head.traj." + std::to_string(k)));
    }
  }
  if (!ego_pose_query_rows.empty()) {
    Tensor q_pose = gather_rows(fine, ego_pose_query_rows);
    out.pose = mlp_head(q_pose, state, "head.pose");
  }
  return out;
}

// --- supervision -----------------------------------------------------------------------

SupervisionTarget make_target(const SceneRecord& normalized, int ego_index,
                              bool supervise_pose) {
  const AgentTrack& ego = normalized.agents.at(ego_index);
  const int t_obs = normalized.t_obs;
  const int t_pred = normalized.t_pred;

  SupervisionTarget target;
  target.traj_gt = Tensor::zeros({t_pred, 2});
  for (int j = 0; j < t_pred; ++j) {
    const int t = t_obs + j;
    if (!ego.traj.is_valid(t, 0)) {
      throw std::invalid_argument(
          "make_target: ego trajectory invalid at future frame " +
          std::to_string(j));
    }
    target.traj_gt.at(j, 0) = ego.traj.value(t, 0, 0);
    target.traj_gt.at(j, 1) = ego.traj.value(t, 0, 1);
  }

  target.pose_gt = Tensor::zeros({t_pred * kPoseJointCount, 3});
  target.pose_mask = Tensor::zeros({t_pred * kPoseJointCount, 3});
  if (supervise_pose && ego.pose3d) {
    const ModalityTensor& p = *ego.pose3d;
    for (int j = 0; j < t_pred; ++j) {
      const int t = t_obs + j;
      for (int e = 0; e < kPoseJointCount; ++e) {
        if (!p.is_valid(t, e)) continue;
        const int r = j * kPoseJointCount + e;
        for (int f = 0; f < 3; ++f) {
          target.pose_gt.at(r, f) = p.value(t, e, f);
          target.pose_mask.at(r, f) = 1.0;
        }
        ++target.pose_valid_count;
      }
    }
  }
  return target;
}

Tensor model_loss(const ForwardOutput& out, const SupervisionTarget& target,
                  double* traj_term, double* pose_term) {
  if (out.traj_modes.empty()) {
    throw std::invalid_argument("model_loss: no trajectory modes");
  }
  // winner-takes-all over the K modes: only the closest mode gets gradient
  Tensor best;
  double best_val = std::numeric_limits<double>::infinity();
  for (const Tensor& mode : out.traj_modes) {
    Tensor d = sub(mode, target.traj_gt);
    Tensor mse = scale(sum(mul(d, d)), 1.0 / mode.rows());
    if (mse.item() < best_val) {
      best_val = mse.item();
      best = mse;
    }
  }
  if (traj_term) *traj_term = best_val;
  if (pose_term) *pose_term = 0.0;
  Tensor loss = scale(best, target.traj_weight);

  if (out.pose.defined() && target.pose_valid_count > 0) {
    Tensor d = sub(out.pose, target.pose_gt);
    Tensor masked = mul(mul(d, d), target.pose_mask);
    Tensor pose_mse = scale(sum(masked), 1.0 / target.pose_valid_count);
    if (pose_term) *pose_term = pose_mse.item();
    loss = add(loss, scale(pose_mse, target.pose_weight));
  }
  return loss;
}

// --- predict ---------------------------------------------------------------------------

PredictionOutput predict(const SceneRecord& window_scene, int ego_index,
                         const ModelState& state,
                         const std::vector<Modality>& input_subset,
                         const std::vector<Modality>& output_modalities) {
  bool has_traj = false;
  for (Modality m : input_subset) has_traj |= m == Modality::kTraj;
  if (!has_traj) {
    throw std::invalid_argument("predict: input subset must contain traj");
  }

  const AgentTrack& ego_raw = window_scene.agents.at(ego_index);
  const int anchor_frame = window_scene.t_obs - 1;
  if (!ego_raw.traj.is_valid(anchor_frame, 0)) {
    throw std::runtime_error("predict: ego has no anchor frame");
  }
  const double ax = ego_raw.traj.value(anchor_frame, 0, 0);
  const double ay = ego_raw.traj.value(anchor_frame, 0, 1);

  SceneRecord normalized = normalize_sample(window_scene, ego_index);

  // only the frame-rate sampling mask applies at inference; on data already
  // at its native rate it keeps exactly the real frames
  MaskSpec mask;
  mask.mode = MaskMode::kNone;
  mask.chunk = fps_stride(state.config.max_fps, normalized.fps);

  std::mt19937_64 rng(0);  // no randomness is consumed on this path
  TokenizedSample sample =
      tokenize_sample(normalized, ego_index, input_subset, output_modalities,
                      state, mask, rng);
  ForwardOutput fwd = model_forward(sample, state);

  PredictionOutput out;
  out.t_pred = fwd.t_pred;
  for (const Tensor& mode : fwd.traj_modes) {
    std::vector<std::array<double, 2>> path(fwd.t_pred);
    for (int t = 0; t < fwd.t_pred; ++t) {
      path[t] = {mode.at(t, 0) + ax, mode.at(t, 1) + ay};
    }
    out.traj_modes.push_back(std::move(path));
  }
  if (fwd.pose.defined()) {
    out.pose.resize(static_cast<std::size_t>(fwd.t_pred) * kPoseJointCount);
    for (int r = 0; r < fwd.pose.rows(); ++r) {
      out.pose[r] = {fwd.pose.at(r, 0), fwd.pose.at(r, 1), fwd.pose.at(r, 2)};
    }
    if (ego_raw.pose3d) {
      for (int e : ego_raw.pose3d->valid_elements()) out.pose_joint_valid[e] = 1;
    } else {
      out.pose_joint_valid.fill(1);
    }
  }
  return out;
}

}  // namespace motioncast
