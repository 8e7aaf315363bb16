#include <doctest.h>

#include <map>
#include <set>

#include "motioncast/masking.hpp"

using namespace motioncast;

namespace {

AgentTrack multi_agent(int frames, int joints = 22, bool with_boxes = false,
                       bool with_2d = false) {
  AgentTrack a;
  a.agent_id = "m";
  a.traj = ModalityTensor::make(Modality::kTraj, frames);
  ModalityTensor pose = ModalityTensor::make(Modality::kPose3d, frames);
  for (int t = 0; t < frames; ++t) {
    a.traj.set_valid(t, 0, true);
    a.traj.value(t, 0, 0) = t;
    a.traj.value(t, 0, 1) = -t;
    for (int e = 0; e < joints; ++e) {
      pose.set_valid(t, e, true);
      for (int f = 0; f < 3; ++f) pose.value(t, e, f) = t + 0.1 * e;
    }
  }
  a.pose3d = std::move(pose);
  if (with_boxes) {
    ModalityTensor box = ModalityTensor::make(Modality::kBox3d, frames);
    for (int t = 0; t < frames; ++t) {
      for (int e = 0; e < 2; ++e) {
        box.set_valid(t, e, true);
        for (int f = 0; f < 3; ++f) box.value(t, e, f) = t + e;
      }
    }
    a.box3d = std::move(box);
  }
  if (with_2d) {
    ModalityTensor p2 = ModalityTensor::make(Modality::kPose2d, frames);
    for (int t = 0; t < frames; ++t) {
      for (int e = 0; e < joints; ++e) {
        p2.set_valid(t, e, true);
        p2.value(t, e, 0) = t;
        p2.value(t, e, 1) = e;
      }
    }
    a.pose2d = std::move(p2);
  }
  return a;
}

TokenSequence sequence_of(const AgentTrack& a, int t_obs, int t_pred,
                          double fps, const std::vector<Modality>& mods,
                          bool queries = true) {
  TokenSequence seq = project(a, t_obs, t_pred, mods);
  upsample_pad(seq, fps);
  if (queries) append_future_queries(seq, {Modality::kTraj});
  return seq;
}

std::set<int> kept_slots(const TokenSequence& seq, Modality m) {
  std::set<int> out;
  for (const TokenMeta& t : seq.tokens) {
    if (t.modality == m && t.kept && !t.is_future_query) out.insert(t.grid_slot);
  }
  return out;
}

}  // namespace

TEST_CASE("sampling mask keeps one slot per chunk, the latest") {
  AgentTrack a = multi_agent(15);
  TokenSequence seq = sequence_of(a, 10, 5, 5.0, {Modality::kTraj});

  SUBCASE("chunk 10 on a 100-slot grid keeps the 5 fps slots") {
    apply_sampling_mask(seq, 10);
    const std::set<int> expect{0, -10, -20, -30, -40, -50, -60, -70, -80, -90};
    CHECK(kept_slots(seq, Modality::kTraj) == expect);
  }

  SUBCASE("chunk 1 is the identity") {
    const MaskResult r = sampling_mask(seq, 1);
    for (std::uint8_t k : r.keep) CHECK(k == 1);
  }

  SUBCASE("chunk 20 simulates 2.5 fps") {
    apply_sampling_mask(seq, 20);
    const std::set<int> expect{0, -20, -40, -60, -80};
    CHECK(kept_slots(seq, Modality::kTraj) == expect);
  }

  SUBCASE("chunk must divide the grid length") {
    CHECK_THROWS_AS(sampling_mask(seq, 7), std::invalid_argument);
  }
}

TEST_CASE("sampling masks compose like frame-rate reductions") {
  AgentTrack a = multi_agent(15);

  TokenSequence two_step = sequence_of(a, 10, 5, 5.0, {Modality::kTraj});
  apply_sampling_mask(two_step, 2);
  apply_sampling_mask(two_step, 5);

  TokenSequence one_step = sequence_of(a, 10, 5, 5.0, {Modality::kTraj});
  apply_sampling_mask(one_step, 10);

  CHECK(kept_slots(two_step, Modality::kTraj) ==
        kept_slots(one_step, Modality::kTraj));
  CHECK(two_step.active_obs_slots == one_step.active_obs_slots);
}

TEST_CASE("dynamic mask drops the same joints at every frame") {
  AgentTrack a = multi_agent(15, 22, /*with_boxes=*/true);
  TokenSequence seq = sequence_of(
      a, 10, 5, 5.0, {Modality::kTraj, Modality::kBox3d, Modality::kPose3d});

  MaskSpec spec;
  spec.mode = MaskMode::kDynamic;
  spec.r_s_low = 0.5;
  spec.r_s_high = 0.5;
  spec.r_t = 0.1;
  std::mt19937_64 rng(5);
  const MaskResult r = apply_mask_pipeline(seq, spec, rng);

  CHECK(r.realized_r_s == 0.5);
  CHECK(seq.kept_count(Modality::kPose3d, false) == 110);  // (22-11)*10

  // identical dropped-joint sets across frames
  std::map<int, std::set<int>> per_frame;
  for (const TokenMeta& t : seq.tokens) {
    if (t.modality == Modality::kPose3d && t.is_valid && !t.is_future_query &&
        !t.kept && !t.is_padding) {
      per_frame[t.frame].insert(t.element);
    }
  }
  REQUIRE(per_frame.size() == 10);
  const std::set<int>& first = per_frame.begin()->second;
  CHECK(first.size() == 11);
  for (const auto& [frame, joints] : per_frame) CHECK(joints == first);

  // exactly floor(0.1*10) = 1 trajectory frame replaced
  int replaced_traj = 0, replaced_box = 0;
  for (const TokenMeta& t : seq.tokens) {
    if (t.replaced && t.modality == Modality::kTraj) ++replaced_traj;
    if (t.replaced && t.modality == Modality::kBox3d) ++replaced_box;
  }
  CHECK(replaced_traj == 1);
  CHECK(replaced_box == 2);  // one frame, two corners

  // future queries untouched
  for (const TokenMeta& t : seq.tokens) {
    if (t.is_future_query) {
      CHECK(t.kept);
      CHECK(!t.replaced);
    }
  }
}

TEST_CASE("a point interval pins the realized spatial ratio") {
  AgentTrack a = multi_agent(15);
  MaskSpec spec;
  spec.mode = MaskMode::kDynamic;
  spec.r_s_low = 0.3;
  spec.r_s_high = 0.3;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 5; ++i) {
    TokenSequence seq =
        sequence_of(a, 10, 5, 5.0, {Modality::kTraj, Modality::kPose3d});
    const MaskResult r = dynamic_st_mask(seq, spec, rng);
    CHECK(r.realized_r_s == 0.3);
  }
}

TEST_CASE("fixed mask drops a constant count at random positions") {
  AgentTrack a = multi_agent(15);
  TokenSequence seq =
      sequence_of(a, 10, 5, 5.0, {Modality::kTraj, Modality::kPose3d});

  SUBCASE("ratio zero is the identity") {
    std::mt19937_64 rng(1);
    const MaskResult r = fixed_st_mask(seq, 0.0, rng);
    for (std::uint8_t k : r.keep) CHECK(k == 1);
  }

  SUBCASE("quarter of 220 pose tokens is 55, every draw") {
    std::set<std::vector<std::uint8_t>> patterns;
    for (std::uint64_t s : {1ULL, 2ULL, 3ULL}) {
      std::mt19937_64 rng(s);
      const MaskResult r = fixed_st_mask(seq, 0.25, rng);
      int masked = 0;
      for (std::size_t i = 0; i < r.keep.size(); ++i) {
        if (!r.keep[i]) {
          CHECK(seq.tokens[i].modality == Modality::kPose3d);
          ++masked;
        }
      }
      CHECK(masked == 55);
      patterns.insert(r.keep);
    }
    CHECK(patterns.size() > 1);  // same count, different positions
  }
}

TEST_CASE("modality-meta mask") {
  SUBCASE("trajectory-only scenes pass through") {
    AgentTrack a;
    a.agent_id = "t";
    a.traj = ModalityTensor::make(Modality::kTraj, 15);
    for (int t = 0; t < 15; ++t) {
      a.traj.set_valid(t, 0, true);
      a.traj.value(t, 0, 0) = t;
      a.traj.value(t, 0, 1) = t;
    }
    TokenSequence seq = sequence_of(a, 10, 5, 5.0, {Modality::kTraj});
    std::mt19937_64 rng(2);
    const MaskResult r = modality_meta_mask(seq, rng);
    for (std::uint8_t k : r.keep) CHECK(k == 1);
  }

  SUBCASE("each auxiliary modality drops about half the time") {
    AgentTrack a = multi_agent(15, 22, true, true);
    TokenSequence seq = sequence_of(
        a, 10, 5, 5.0,
        {Modality::kTraj, Modality::kBox3d, Modality::kPose3d, Modality::kPose2d});
    std::mt19937_64 rng(3);
    int dropped_pose = 0, dropped_box = 0, dropped_p2 = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const MaskResult r = modality_meta_mask(seq, rng);
      dropped_pose += !r.dropped_elements[static_cast<int>(Modality::kPose3d)].empty();
      dropped_box += !r.dropped_elements[static_cast<int>(Modality::kBox3d)].empty();
      dropped_p2 += !r.dropped_elements[static_cast<int>(Modality::kPose2d)].empty();
      for (std::size_t ti = 0; ti < seq.tokens.size(); ++ti) {
        if (seq.tokens[ti].modality == Modality::kTraj) CHECK(r.keep[ti] == 1);
      }
    }
    for (int count : {dropped_pose, dropped_box, dropped_p2}) {
      CHECK(count > draws * 0.48);
      CHECK(count < draws * 0.52);
    }
  }
}

TEST_CASE("kept and masked partition the pre-mask valid tokens") {
  AgentTrack a = multi_agent(15, 22, true, true);
  for (MaskMode mode : {MaskMode::kDynamic, MaskMode::kFixed,
                        MaskMode::kModalityMeta, MaskMode::kNone}) {
    TokenSequence seq = sequence_of(
        a, 10, 5, 5.0,
        {Modality::kTraj, Modality::kBox3d, Modality::kPose3d, Modality::kPose2d});
    const int valid_before = [&] {
      int n = 0;
      for (const TokenMeta& t : seq.tokens) n += t.is_valid && !t.is_future_query;
      return n;
    }();

    MaskSpec spec;
    spec.mode = mode;
    std::mt19937_64 rng(7);
    apply_mask_pipeline(seq, spec, rng);

    int kept = 0, masked = 0;
    for (const TokenMeta& t : seq.tokens) {
      if (t.is_future_query || !t.is_valid) continue;
      (t.kept ? kept : masked) += 1;
    }
    CHECK(kept + masked == valid_before);
    for (const TokenMeta& t : seq.tokens) {
      if (t.is_future_query) CHECK(t.kept);
      if (!t.is_valid) CHECK(!t.kept);
    }
  }
}
