#include "motioncast/masking.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace motioncast {

namespace {

MaskResult identity_result(const TokenSequence& seq) {
  MaskResult r;
  r.keep.assign(seq.tokens.size(), 1);
  r.replace.assign(seq.tokens.size(), 0);
  return r;
}

/// Uniform sample of k distinct values from pool, order-stable.
std::vector<int> sample_without_replacement(std::vector<int> pool, int k,
                                            std::mt19937_64& rng) {
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

const char* mask_mode_name(MaskMode m) {
  switch (m) {
    case MaskMode::kDynamic:
      return "dynamic";
    case MaskMode::kFixed:
      return "fixed";
    case MaskMode::kModalityMeta:
      return "modality_meta";
    case MaskMode::kNone:
      return "none";
  }
  return "?";
}

MaskMode mask_mode_from_name(const std::string& name) {
  for (MaskMode m : {MaskMode::kDynamic, MaskMode::kFixed,
                     MaskMode::kModalityMeta, MaskMode::kNone}) {
    if (name == mask_mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown mask mode: " + name);
}

void MaskSpec::validate() const {
  if (chunk < 1) throw std::invalid_argument("mask spec: chunk must be >= 1");
  if (!(r_s_low > 0.0 && r_s_low <= r_s_high && r_s_high < 1.0)) {
    throw std::invalid_argument("mask spec: need 0 < r_s_low <= r_s_high < 1");
  }
  if (r_t < 0.0 || r_t >= 1.0) {
    throw std::invalid_argument("mask spec: need 0 <= r_t < 1");
  }
}

MaskResult sampling_mask(const TokenSequence& seq, int chunk) {
  if (chunk < 1) throw std::invalid_argument("sampling_mask: chunk must be >= 1");
  const auto& slots = seq.active_obs_slots;
  if (slots.empty()) {
    throw std::logic_error("sampling_mask: sequence has no observation grid");
  }
  if (static_cast<int>(slots.size()) % chunk != 0) {
    throw std::invalid_argument(
        "sampling_mask: chunk " + std::to_string(chunk) +
        " does not divide the grid length " + std::to_string(slots.size()));
  }

  MaskResult r = identity_result(seq);
  if (chunk == 1) return r;

  // slots are descending from 0; each block keeps its latest slot
  std::set<int> removed;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i % chunk != 0) removed.insert(slots[i]);
  }
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const TokenMeta& t = seq.tokens[i];
    if (t.is_future_query) continue;
    if (removed.count(t.grid_slot)) r.keep[i] = 0;
  }
  return r;
}

MaskResult dynamic_st_mask(const TokenSequence& seq, const MaskSpec& spec,
                           std::mt19937_64& rng) {
  if (spec.mode != MaskMode::kDynamic) {
    throw std::invalid_argument("dynamic_st_mask: spec mode is not dynamic");
  }
  spec.validate();

  MaskResult r = identity_result(seq);
  std::uniform_real_distribution<double> rs_dist(spec.r_s_low, spec.r_s_high);
  r.realized_r_s = spec.r_s_low == spec.r_s_high ? spec.r_s_low : rs_dist(rng);

  // spatial: the same element subset at every observed frame
  for (Modality m : {Modality::kPose3d, Modality::kPose2d}) {
    const int mi = static_cast<int>(m);
    std::set<int> elems;
    for (const TokenMeta& t : seq.tokens) {
      if (t.modality == m && t.kept && !t.is_future_query && !t.replaced) {
        elems.insert(t.element);
      }
    }
    if (elems.empty()) continue;
    const int n_drop =
        static_cast<int>(std::floor(r.realized_r_s * elems.size()));
    std::vector<int> pool(elems.begin(), elems.end());
    const std::vector<int> dropped = sample_without_replacement(pool, n_drop, rng);
    r.dropped_elements[mi] = dropped;
    const std::set<int> drop_set(dropped.begin(), dropped.end());
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      const TokenMeta& t = seq.tokens[i];
      if (t.modality == m && t.kept && !t.is_future_query &&
          drop_set.count(t.element)) {
        r.keep[i] = 0;
      }
    }
  }

  // temporal: replace whole frames of trajectory and boxes
  for (Modality m : {Modality::kTraj, Modality::kBox3d, Modality::kBox2d}) {
    const int mi = static_cast<int>(m);
    std::set<int> frames;
    for (const TokenMeta& t : seq.tokens) {
      if (t.modality == m && t.kept && !t.is_future_query && !t.replaced) {
        frames.insert(t.frame);
      }
    }
    if (frames.empty()) continue;
    const int n_mask = static_cast<int>(std::floor(spec.r_t * frames.size()));
    if (n_mask == 0) continue;
    std::vector<int> pool(frames.begin(), frames.end());
    const std::vector<int> masked = sample_without_replacement(pool, n_mask, rng);
    r.dropped_frames[mi] = masked;
    const std::set<int> mask_set(masked.begin(), masked.end());
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      const TokenMeta& t = seq.tokens[i];
      if (t.modality == m && t.kept && !t.is_future_query &&
          mask_set.count(t.frame)) {
        r.replace[i] = 1;
      }
    }
  }
  return r;
}

MaskResult fixed_st_mask(const TokenSequence& seq, double fixed_ratio,
                         std::mt19937_64& rng) {
  if (fixed_ratio < 0.0 || fixed_ratio >= 1.0) {
    throw std::invalid_argument("fixed_st_mask: ratio must lie in [0,1)");
  }
  MaskResult r = identity_result(seq);
  std::vector<int> pose_tokens;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const TokenMeta& t = seq.tokens[i];
    if ((t.modality == Modality::kPose3d || t.modality == Modality::kPose2d) &&
        t.kept && !t.is_future_query && !t.replaced) {
      pose_tokens.push_back(static_cast<int>(i));
    }
  }
  const int n_mask =
      static_cast<int>(std::floor(fixed_ratio * pose_tokens.size()));
  if (n_mask == 0) return r;
  const std::vector<int> masked =
      sample_without_replacement(pose_tokens, n_mask, rng);
  for (int i : masked) r.keep[i] = 0;
  return r;
}

MaskResult modality_meta_mask(const TokenSequence& seq, std::mt19937_64& rng) {
  bool has_traj = false;
  for (const TokenMeta& t : seq.tokens) {
    if (t.modality == Modality::kTraj && t.kept && !t.is_future_query) {
      has_traj = true;
      break;
    }
  }
  if (!has_traj) {
    throw std::invalid_argument("modality_meta_mask: trajectory modality absent");
  }

  MaskResult r = identity_result(seq);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (Modality m : {Modality::kBox3d, Modality::kBox2d, Modality::kPose3d,
                     Modality::kPose2d}) {
    bool present = false;
    for (const TokenMeta& t : seq.tokens) {
      if (t.modality == m && t.kept && !t.is_future_query) {
        present = true;
        break;
      }
    }
    if (!present) continue;
    if (coin(rng) < 0.5) {
      r.dropped_elements[static_cast<int>(m)].push_back(-1);  // whole modality
      for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        const TokenMeta& t = seq.tokens[i];
        if (t.modality == m && !t.is_future_query) r.keep[i] = 0;
      }
    }
  }
  return r;
}

void apply_mask(TokenSequence& seq, const MaskResult& result) {
  if (result.keep.size() != seq.tokens.size()) {
    throw std::invalid_argument("apply_mask: result size mismatch");
  }
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    TokenMeta& t = seq.tokens[i];
    if (t.is_future_query) continue;  // queries are never masked
    if (!result.keep[i]) {
      t.kept = false;
      t.replaced = false;
    } else if (result.replace[i] && t.kept) {
      t.replaced = true;
    }
  }
}

MaskResult apply_sampling_mask(TokenSequence& seq, int chunk) {
  MaskResult sampling = sampling_mask(seq, chunk);
  apply_mask(seq, sampling);
  std::vector<int> survivors;
  for (std::size_t i = 0; i < seq.active_obs_slots.size(); ++i) {
    if (i % chunk == 0) survivors.push_back(seq.active_obs_slots[i]);
  }
  seq.active_obs_slots = std::move(survivors);
  return sampling;
}

MaskResult apply_mask_pipeline(TokenSequence& seq, const MaskSpec& spec,
                               std::mt19937_64& rng) {
  spec.validate();
  if (spec.chunk > 1) apply_sampling_mask(seq, spec.chunk);

  MaskResult mode_result;
  switch (spec.mode) {
    case MaskMode::kDynamic:
      mode_result = dynamic_st_mask(seq, spec, rng);
      break;
    case MaskMode::kFixed:
      mode_result = fixed_st_mask(seq, spec.fixed_ratio, rng);
      break;
    case MaskMode::kModalityMeta:
      mode_result = modality_meta_mask(seq, rng);
      break;
    case MaskMode::kNone:
      mode_result = identity_result(seq);
      break;
  }
  apply_mask(seq, mode_result);
  return mode_result;
}

}  // namespace motioncast
