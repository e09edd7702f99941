#include "hexsim/slice_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "hexsim/error.hpp"
#include "state_machine_oracle.hpp"

namespace hexsim::fs {
namespace {

const Trigger kCtl{"FS Control Request", "ric-a"};

Bearer make_bearer(std::uint32_t drb, std::uint32_t ue, int bp = 1) {
  Bearer b;
  b.drb_id = DrbId(drb);
  b.ue_id = UeId(ue);
  b.bearer_priority = bp;
  return b;
}

template <typename Fn>
Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::InvalidInput;
}

TEST(SliceModelTest, CreateStartsIdle) {
  FsContext ctx(106);
  const auto& s = ctx.create_slice({SliceId(1), SliceState::Shared, {0, 0, 1}, "priority_weighted", {}});
  EXPECT_EQ(s.state, SliceState::Idle);
  EXPECT_TRUE(s.bearers.empty());
  EXPECT_EQ(ctx.change_log(SliceId(1)).size(), 1u);
}

TEST(SliceModelTest, CreateDedicatedWithZeroRbs) {
  FsContext ctx(106);
  const auto& s = ctx.create_slice({SliceId(2), SliceState::Dedicated, {0, 0, 1}, "round_robin", {}});
  EXPECT_EQ(s.state, SliceState::Idle);
  EXPECT_EQ(ctx.reserved_rb(), 0);
}

TEST(SliceModelTest, CreateRejectsDuplicateAndInvalid) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "priority_weighted", {}});
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}}); }),
            Errc::DuplicateSliceId);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(2), SliceState::Dedicated, {5, 1, 1}, "x", {}}); }),
            Errc::InvalidResourceConfig);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(3), SliceState::Prioritized, {1, 5, 1}, "x", {}}); }),
            Errc::InvalidResourceConfig);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(4), SliceState::Shared, {0, 1, 1}, "x", {}}); }),
            Errc::InvalidResourceConfig);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(5), SliceState::Shared, {0, 0, 0}, "x", {}}); }),
            Errc::InvalidResourceConfig);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(6), SliceState::Idle, {}, "x", {}}); }),
            Errc::InvalidResourceConfig);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(7), SliceState::Hybrid, {-1, 3, 1}, "x", {}}); }),
            Errc::InvalidResourceConfig);
}

TEST(SliceModelTest, OverSubscriptionMatchesBruteForceSums) {
  // Every (a, b) split of two reservations on a 106-RB cell is accepted iff a + b <= 106.
  for (int a = 0; a <= 106; a += 7) {
    for (int b = 0; b <= 110; b += 5) {
      FsContext ctx(106);
      ctx.create_slice({SliceId(1), SliceState::Dedicated, {a, 0, 1}, "x", {}});
      bool accepted = true;
      try {
        ctx.create_slice({SliceId(2), SliceState::Prioritized, {0, b, 1}, "x", {}});
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::OverSubscription);
        accepted = false;
      }
      EXPECT_EQ(accepted, a + b <= 106) << a << "+" << b;
    }
  }
  FsContext ctx(106);
  EXPECT_EQ(error_of([&] { ctx.create_slice({SliceId(1), SliceState::Hybrid, {50, 57, 1}, "x", {}}); }),
            Errc::OverSubscription);
}

TEST(SliceModelTest, AddDrbActivatesIdleSlice) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "priority_weighted", {}});
  const auto& s = ctx.add_drb(SliceId(1), make_bearer(1, 1));
  EXPECT_EQ(s.state, SliceState::Shared);
  EXPECT_TRUE(ctx.has_ue(UeId(1)));
  EXPECT_EQ(ctx.ue(UeId(1)).bearers.size(), 1u);
  const auto& rec = ctx.change_log(SliceId(1)).back();
  ASSERT_GE(rec.outcomes.size(), 1u);
  EXPECT_EQ(rec.outcomes[0].kind, ChangeKind::BearerList);
  EXPECT_EQ(rec.trigger.procedure, "DRB Addition");
}

TEST(SliceModelTest, AddDrbToActiveSliceKeepsState) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Dedicated, {40, 0, 1}, "x", {}});
  ctx.add_drb(SliceId(1), make_bearer(1, 1));
  ctx.add_drb(SliceId(1), make_bearer(2, 2));
  const auto& s = ctx.add_drb(SliceId(1), make_bearer(3, 3));
  EXPECT_EQ(s.state, SliceState::Dedicated);
  EXPECT_EQ(s.bearers.size(), 3u);
}

TEST(SliceModelTest, AddDrbIdleHybridDefault) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Hybrid, {10, 20, 2}, "x", {}});
  EXPECT_EQ(ctx.add_drb(SliceId(1), make_bearer(1, 1)).state, SliceState::Hybrid);
}

TEST(SliceModelTest, AddDrbErrors) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  ctx.add_drb(SliceId(1), make_bearer(1, 1));
  EXPECT_EQ(error_of([&] { ctx.add_drb(SliceId(9), make_bearer(2, 1)); }), Errc::UnknownSlice);
  EXPECT_EQ(error_of([&] { ctx.add_drb(SliceId(1), make_bearer(1, 2)); }), Errc::DuplicateDrb);
  EXPECT_EQ(error_of([&] { ctx.add_drb(SliceId(1), make_bearer(3, 2, 0)); }), Errc::InvalidInput);
}

TEST(SliceModelTest, RemoveLastDrbTransitions) {
  {
    FsContext ctx(106);
    ctx.create_slice({SliceId(1), SliceState::Prioritized, {0, 30, 1}, "x", {}});
    ctx.add_drb(SliceId(1), make_bearer(1, 1));
    const auto& s = ctx.remove_drb(SliceId(1), DrbId(1));
    EXPECT_EQ(s.state, SliceState::Idle);
    EXPECT_EQ(s.default_active_state, SliceState::Shared);
  }
  {
    FsContext ctx(106);
    ctx.create_slice({SliceId(1), SliceState::Hybrid, {10, 20, 3}, "x", {}});
    ctx.add_drb(SliceId(1), make_bearer(1, 1));
    const auto& s = ctx.remove_drb(SliceId(1), DrbId(1));
    EXPECT_EQ(s.state, SliceState::Dedicated);
    EXPECT_EQ(s.rrc, (RadioResourceConfig{10, 0, 3}));
  }
  {
    FsContext ctx(106);
    ctx.create_slice({SliceId(1), SliceState::Dedicated, {10, 0, 1}, "x", {}});
    ctx.add_drb(SliceId(1), make_bearer(1, 1));
    EXPECT_EQ(ctx.remove_drb(SliceId(1), DrbId(1)).state, SliceState::Dedicated);
  }
}

TEST(SliceModelTest, RemoveDrbErrors) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  ctx.create_slice({SliceId(2), SliceState::Shared, {}, "x", {}});
  ctx.add_drb(SliceId(1), make_bearer(1, 1));
  EXPECT_EQ(error_of([&] { ctx.remove_drb(SliceId(9), DrbId(1)); }), Errc::UnknownSlice);
  EXPECT_EQ(error_of([&] { ctx.remove_drb(SliceId(2), DrbId(1)); }), Errc::UnknownDrb);
  EXPECT_EQ(error_of([&] { ctx.remove_drb(SliceId(1), DrbId(5)); }), Errc::UnknownDrb);
}

TEST(SliceModelTest, RequestStateChange) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(2), SliceState::Shared, {}, "x", {}});
  ctx.add_drb(SliceId(2), make_bearer(1, 1));
  auto s = ctx.request_state_change(SliceId(2), SliceState::Dedicated, {85, 0, 1}, kCtl);
  EXPECT_EQ(s.state, SliceState::Dedicated);
  EXPECT_EQ(s.rrc.dedicated_rb, 85);
  s = ctx.request_state_change(SliceId(2), SliceState::Prioritized, {0, 85, 1}, kCtl);
  EXPECT_EQ(s.state, SliceState::Prioritized);
  const auto& rec = ctx.change_log(SliceId(2)).back();
  EXPECT_EQ(rec.trigger.procedure, "FS Control Request");
  EXPECT_EQ(rec.trigger.source, "ric-a");
  EXPECT_EQ(rec.outcomes.at(0).kind, ChangeKind::ResourceConfig);
}

TEST(SliceModelTest, NoOpChangeStillAudited) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  ctx.add_drb(SliceId(1), make_bearer(1, 1));
  const auto before = ctx.slice(SliceId(1));
  const auto seq = ctx.latest_change_seq();
  ctx.request_state_change(SliceId(1), SliceState::Shared, {0, 0, 1}, kCtl);
  EXPECT_EQ(ctx.slice(SliceId(1)), before);
  EXPECT_EQ(ctx.latest_change_seq(), seq + 1);
}

TEST(SliceModelTest, RequestStateChangeErrors) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Dedicated, {50, 0, 1}, "x", {}});
  ctx.create_slice({SliceId(2), SliceState::Shared, {}, "x", {}});
  EXPECT_EQ(error_of([&] { ctx.request_state_change(SliceId(9), SliceState::Shared, {}, kCtl); }),
            Errc::UnknownSlice);
  EXPECT_EQ(error_of([&] { ctx.request_state_change(SliceId(2), SliceState::Dedicated, {0, 5, 1}, kCtl); }),
            Errc::InvalidResourceConfig);
  EXPECT_EQ(error_of([&] { ctx.request_state_change(SliceId(2), SliceState::Dedicated, {57, 0, 1}, kCtl); }),
            Errc::OverSubscription);
  // Replacing a slice's own reservation does not double count it.
  EXPECT_NO_THROW(ctx.request_state_change(SliceId(1), SliceState::Dedicated, {106 - 0, 0, 1}, kCtl));
}

TEST(SliceModelTest, SequenceNumbersGapFreePerSlice) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  ctx.create_slice({SliceId(2), SliceState::Shared, {}, "x", {}});
  for (std::uint32_t i = 1; i <= 20; ++i) {
    ctx.add_drb(SliceId(1 + i % 2), make_bearer(i, i));
  }
  for (auto id : {SliceId(1), SliceId(2)}) {
    std::uint64_t expect = 1;
    for (const auto& rec : ctx.change_log(id)) EXPECT_EQ(rec.seq, expect++);
  }
  const auto all = ctx.changes_since(0);
  ASSERT_EQ(all.size(), 22u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].global_seq, i + 1);
  EXPECT_TRUE(ctx.changes_since(ctx.latest_change_seq()).empty());
  EXPECT_EQ(ctx.changes_since(19).size(), 3u);
}

TEST(SliceModelTest, ChangeLogRingBuffer) {
  FsContext ctx(106, 4);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  for (int i = 0; i < 10; ++i) ctx.set_scheduler(SliceId(1), "round_robin", kCtl);
  const auto& log = ctx.change_log(SliceId(1));
  ASSERT_EQ(log.size(), 4u);
  EXPECT_EQ(log.front().seq, 8u);
  EXPECT_EQ(log.back().seq, 11u);
}

TEST(SliceModelTest, SnapshotReports) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "priority_weighted", {"hu-1"}});
  ctx.add_drb(SliceId(1), make_bearer(7, 3, 2));
  const auto r = ctx.snapshot({{SliceId(1)}, {UeId(3)}});
  ASSERT_EQ(r.slices.size(), 1u);
  EXPECT_EQ(r.slices[0].state, SliceState::Shared);
  EXPECT_EQ(r.slices[0].fd_scheduler, "priority_weighted");
  EXPECT_EQ(r.slices[0].hu_associations.count("hu-1"), 1u);
  ASSERT_EQ(r.slices[0].bearers.size(), 1u);
  EXPECT_EQ(r.slices[0].bearers[0].bearer_priority, 2);
  ASSERT_EQ(r.ues.size(), 1u);
  EXPECT_EQ(r.ues[0].mcs, 28);
  EXPECT_EQ(r.ues[0].bearers.size(), 1u);

  const auto empty = ctx.snapshot({});
  EXPECT_TRUE(empty.slices.empty());
  EXPECT_TRUE(empty.ues.empty());
  EXPECT_EQ(error_of([&] { ctx.snapshot({{SliceId(4)}, {}}); }), Errc::UnknownId);
  EXPECT_EQ(error_of([&] { ctx.snapshot({{}, {UeId(4)}}); }), Errc::UnknownId);

  const json j = r;
  EXPECT_EQ(j["slices"][0]["bearers"][0]["drb_id"], 7);
  EXPECT_TRUE(j["slices"][0]["bearers"][0].contains("buffer_bytes"));
}

TEST(SliceModelTest, BearerStatsSmoothing) {
  FsContext ctx(106);
  ctx.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  ctx.add_drb(SliceId(1), make_bearer(1, 1));
  for (int i = 0; i < 1000; ++i) ctx.record_bearer_sample(DrbId(1), {50.0, 20.0, 0.0, 100.0}, 1.0);
  EXPECT_NEAR(ctx.bearer(DrbId(1)).stats.throughput_mbps, 50.0, 50.0 * std::exp(-10.0) + 1e-9);
  // One window after a step, the average has moved 1 - 1/e of the way.
  for (int i = 0; i < 100; ++i) ctx.record_bearer_sample(DrbId(1), {0.0, 20.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(ctx.bearer(DrbId(1)).stats.throughput_mbps, 50.0 / std::exp(1.0), 0.1);
}

TEST(SliceModelTest, AdoptConfigKeepsLiveStats) {
  FsContext live(106);
  live.create_slice({SliceId(1), SliceState::Shared, {}, "x", {}});
  live.add_drb(SliceId(1), make_bearer(1, 1));
  live.record_bearer_sample(DrbId(1), {10.0, 1.0, 0.0, 5.0}, 100.0);
  live.set_link_state(UeId(1), 10, 7, 0.1);

  FsContext staged = live;
  staged.set_bearer_priority(DrbId(1), 5, kCtl);
  staged.add_drb(SliceId(1), make_bearer(2, 2));
  live.adopt_config(staged);
  EXPECT_EQ(live.bearer(DrbId(1)).bearer_priority, 5);
  EXPECT_GT(live.bearer(DrbId(1)).stats.throughput_mbps, 0.0);
  EXPECT_EQ(live.ue(UeId(1)).mcs, 10);
  EXPECT_TRUE(live.has_drb(DrbId(2)));
  EXPECT_EQ(live.latest_change_seq(), staged.latest_change_seq());
}

TEST(SliceModelTest, LinkStateValidation) {
  FsContext ctx(106);
  EXPECT_EQ(error_of([&] { ctx.set_link_state(UeId(1), 29, 1, 0.0); }), Errc::InvalidInput);
  EXPECT_EQ(error_of([&] { ctx.set_link_state(UeId(1), 1, 16, 0.0); }), Errc::InvalidInput);
  EXPECT_EQ(error_of([&] { ctx.set_link_state(UeId(1), 1, 1, 1.5); }), Errc::InvalidInput);
}

TEST(SliceModelTest, ExhaustiveTransitionTable) {
  const auto report = oracle::run_state_machine_suite();
  EXPECT_GT(report.cases, 100);
  EXPECT_EQ(report.mismatches, 0);
  for (const auto& f : report.failures) ADD_FAILURE() << f;
}

}  // namespace
}  // namespace hexsim::fs
