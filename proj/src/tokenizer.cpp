#include "motioncast/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

namespace motioncast {

int TokenSequence::in_sequence_count() const {
  int n = 0;
  for (const TokenMeta& t : tokens) n += t.kept ? 1 : 0;
  return n;
}

int TokenSequence::kept_count(Modality m, bool include_replaced) const {
  int n = 0;
  for (const TokenMeta& t : tokens) {
    if (t.modality != m || !t.kept || t.is_future_query) continue;
    if (!include_replaced && t.replaced) continue;
    ++n;
  }
  return n;
}

// --- BiDirEncoder -------------------------------------------------------------

void BiDirEncoder::encode(Modality m, bool prediction_side, int abs_slot,
                          double* out) const {
  // Disjoint position bands keep modalities and sides distinguishable while
  // staying a pure function of distance from the anchor frame.
  const double pos = static_cast<double>(static_cast<int>(m)) * 4096.0 +
                     (prediction_side ? 2048.0 : 0.0) +
                     static_cast<double>(abs_slot);
  for (int i = 0; i < dim_ / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim_);
    out[2 * i] = std::sin(pos * freq);
    out[2 * i + 1] = std::cos(pos * freq);
  }
  if (dim_ % 2 == 1) out[dim_ - 1] = std::sin(pos * std::pow(10000.0, -1.0));
}

std::vector<double> BiDirEncoder::encode(Modality m, bool prediction_side,
                                         int abs_slot) const {
  std::vector<double> v(dim_);
  encode(m, prediction_side, abs_slot, v.data());
  return v;
}

// --- project --------------------------------------------------------------------

TokenSequence project(const AgentTrack& agent, int t_obs, int t_pred,
                      const std::vector<Modality>& modalities) {
  TokenSequence seq;
  seq.t_obs = t_obs;
  seq.t_pred = t_pred;

  for (Modality m : modalities) {
    const ModalityTensor* mt = agent.get(m);
    if (!mt) continue;
    for (int t = 0; t < t_obs; ++t) {
      for (int e = 0; e < mt->elements; ++e) {
        TokenMeta tok;
        tok.modality = m;
        tok.element = e;
        tok.frame = t;
        tok.is_valid = mt->is_valid(t, e);
        tok.kept = tok.is_valid;
        if (tok.is_valid) {
          for (int f = 0; f < mt->features; ++f) tok.value[f] = mt->value(t, e, f);
        }
        seq.tokens.push_back(tok);
      }
    }
  }

  // content-derived ordering key: the observed trajectory bytes
  const ModalityTensor& traj = agent.traj;
  std::string key;
  key.reserve(static_cast<std::size_t>(t_obs) * 17);
  for (int t = 0; t < t_obs && t < traj.frames; ++t) {
    key.push_back(traj.is_valid(t, 0) ? '\x01' : '\x00');
    for (int f = 0; f < traj.features; ++f) {
      const double v = traj.is_valid(t, 0) ? traj.value(t, 0, f) : 0.0;
      char buf[sizeof(double)];
      std::memcpy(buf, &v, sizeof(double));
      key.append(buf, sizeof(double));
    }
  }
  seq.sort_key = std::move(key);
  return seq;
}

// --- upsample_pad ------------------------------------------------------------------

void upsample_pad(TokenSequence& seq, double fps, double max_fps) {
  const int stride = fps_stride(max_fps, fps);
  seq.fps = fps;
  seq.grid_stride = stride;

  // real frames: frame t (0-based) sits at slot -(t_obs-1-t)*stride
  std::array<std::set<int>, kModalityCount> real_slots;
  std::array<int, kModalityCount> max_element{};
  for (TokenMeta& tok : seq.tokens) {
    if (tok.is_future_query || tok.is_padding) continue;
    tok.grid_slot = -(seq.t_obs - 1 - tok.frame) * stride;
    real_slots[static_cast<int>(tok.modality)].insert(tok.grid_slot);
    max_element[static_cast<int>(tok.modality)] =
        std::max(max_element[static_cast<int>(tok.modality)], tok.element + 1);
  }

  const int grid_len = seq.t_obs * stride;
  seq.active_obs_slots.clear();
  for (int s = 0; s > -grid_len; --s) seq.active_obs_slots.push_back(s);

  // padding tokens for grid slots with no data
  for (int mi = 0; mi < kModalityCount; ++mi) {
    if (max_element[mi] == 0) continue;
    for (int s = 0; s > -grid_len; --s) {
      if (real_slots[mi].count(s)) continue;
      for (int e = 0; e < max_element[mi]; ++e) {
        TokenMeta tok;
        tok.modality = static_cast<Modality>(mi);
        tok.element = e;
        tok.frame = -1;
        tok.grid_slot = s;
        tok.is_padding = true;
        tok.is_valid = false;
        tok.kept = false;
        seq.tokens.push_back(tok);
      }
    }
  }
}

// --- append_future_queries -----------------------------------------------------------

void append_future_queries(TokenSequence& seq,
                           const std::vector<Modality>& output_modalities) {
  if (seq.grid_stride == 0) {
    throw std::logic_error("append_future_queries: run upsample_pad first");
  }
  for (Modality m : output_modalities) {
    if (m != Modality::kTraj && m != Modality::kPose3d) {
      throw std::invalid_argument("future queries exist only for traj and pose3d");
    }
    const int elements = m == Modality::kTraj ? 1 : kPoseJointCount;
    for (int j = 0; j < seq.t_pred; ++j) {
      for (int e = 0; e < elements; ++e) {
        TokenMeta tok;
        tok.modality = m;
        tok.element = e;
        tok.frame = j;
        tok.grid_slot = (j + 1) * seq.grid_stride;
        tok.is_future_query = true;
        tok.is_valid = true;
        tok.kept = true;
        seq.tokens.push_back(tok);
      }
    }
  }
}

// --- assembly ------------------------------------------------------------------------

namespace {

bool in_sequence(const TokenMeta& t) { return t.kept; }

}  // namespace

void assemble_features(TokenSequence& seq, const ProjectionParams& params,
                       const BiDirEncoder& enc) {
  const int dim = enc.dim();

  // group rows: per modality the projected kept tokens, then replaced
  // tokens, then queries
  std::vector<Tensor> blocks;
  std::vector<TokenMeta*> order;

  for (int mi = 0; mi < kModalityCount; ++mi) {
    std::vector<TokenMeta*> toks;
    for (TokenMeta& t : seq.tokens) {
      if (static_cast<int>(t.modality) != mi || !in_sequence(t) ||
          t.is_future_query || t.replaced) {
        continue;
      }
      toks.push_back(&t);
    }
    if (toks.empty()) continue;
    const Modality m = static_cast<Modality>(mi);
    if (!params.weight[mi].defined()) {
      throw std::runtime_error(std::string("no projection registered for ") +
                               modality_name(m));
    }
    const int fw = modality_feature_width(m);
    Tensor input({static_cast<int>(toks.size()), fw});
    for (std::size_t i = 0; i < toks.size(); ++i) {
      for (int f = 0; f < fw; ++f) {
        input.at(static_cast<int>(i), f) = toks[i]->value[f];
      }
    }
    Tensor projected = add_rowvec(matmul(input, params.weight[mi]),
                                  params.bias[mi]);
    blocks.push_back(projected);
    for (TokenMeta* t : toks) order.push_back(t);
  }

  std::vector<TokenMeta*> replaced;
  for (TokenMeta& t : seq.tokens) {
    if (in_sequence(t) && t.replaced) replaced.push_back(&t);
  }
  if (!replaced.empty()) {
    blocks.push_back(repeat_row(params.mask_embedding,
                                static_cast<int>(replaced.size())));
    for (TokenMeta* t : replaced) order.push_back(t);
  }

  std::vector<TokenMeta*> traj_queries, pose_queries;
  for (TokenMeta& t : seq.tokens) {
    if (!t.is_future_query) continue;
    (t.modality == Modality::kTraj ? traj_queries : pose_queries).push_back(&t);
  }
  if (!traj_queries.empty()) {
    blocks.push_back(repeat_row(params.traj_query,
                                static_cast<int>(traj_queries.size())));
    for (TokenMeta* t : traj_queries) order.push_back(t);
  }
  if (!pose_queries.empty()) {
    std::vector<int> idx;
    idx.reserve(pose_queries.size());
    for (TokenMeta* t : pose_queries) idx.push_back(t->element);
    blocks.push_back(gather_rows(params.pose_query, idx));
    for (TokenMeta* t : pose_queries) order.push_back(t);
  }

  if (blocks.empty()) {
    seq.features = Tensor();
    return;
  }

  Tensor features = concat_rows(blocks);

  // positional table, constant w.r.t. the graph
  Tensor positions({features.rows(), dim});
  for (int i = 0; i < features.rows(); ++i) {
    const TokenMeta& t = *order[i];
    enc.encode(t.modality, t.grid_slot > 0, std::abs(t.grid_slot),
               positions.data().data() + static_cast<std::size_t>(i) * dim);
  }
  seq.features = add(features, positions);

  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i]->row = i;
}

Tensor bidir_encode(TokenSequence& seq, const BiDirEncoder& enc) {
  if (!seq.features.defined()) {
    throw std::logic_error("bidir_encode: assemble features first");
  }
  const int dim = enc.dim();
  Tensor positions({seq.features.rows(), dim});
  for (const TokenMeta& t : seq.tokens) {
    if (t.row < 0) continue;
    enc.encode(t.modality, t.grid_slot > 0, std::abs(t.grid_slot),
               positions.data().data() + static_cast<std::size_t>(t.row) * dim);
  }
  seq.features = add(seq.features, positions);
  return positions;
}

// --- token budget ----------------------------------------------------------------------

TokenBudget token_budget(const std::array<int, kModalityCount>& elements,
                         int t_frames, double realized_r_s, double r_t,
                         int n_agents) {
  if (realized_r_s < 0.0 || realized_r_s >= 1.0 || r_t < 0.0 || r_t >= 1.0) {
    throw std::invalid_argument("token_budget: ratios must lie in [0,1)");
  }
  TokenBudget b;
  const int replaced_frames = static_cast<int>(std::floor(r_t * t_frames));
  for (int mi = 0; mi < kModalityCount; ++mi) {
    const int e = elements[mi];
    if (e == 0) continue;
    const Modality m = static_cast<Modality>(mi);
    const int full = e * t_frames;
    if (m == Modality::kPose3d || m == Modality::kPose2d) {
      const int dropped_elems =
          static_cast<int>(std::floor(realized_r_s * e));
      b.sequence_tokens[mi] = (e - dropped_elems) * t_frames;
      b.data_tokens[mi] = b.sequence_tokens[mi];
    } else {
      b.sequence_tokens[mi] = full;
      b.data_tokens[mi] = full - replaced_frames * e;
    }
    b.l1 += b.sequence_tokens[mi];
    b.l1_realized += b.data_tokens[mi];
  }
  const int traj_i = static_cast<int>(Modality::kTraj);
  const int pose_i = static_cast<int>(Modality::kPose3d);
  b.l2 = n_agents * (b.sequence_tokens[traj_i] + b.sequence_tokens[pose_i]);
  b.l2_realized = n_agents * (b.data_tokens[traj_i] + b.data_tokens[pose_i]);
  return b;
}

}  // namespace motioncast
