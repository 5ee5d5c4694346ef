#include <gtest/gtest.h>

#include "r3dla/interp.hpp"
#include "r3dla/workload.hpp"

using namespace r3dla;

TEST(Workload, NamesRoundTrip) {
  for (auto k : {WorkloadKind::strided_loop, WorkloadKind::pointer_chase, WorkloadKind::branchy,
                 WorkloadKind::mixed_phases})
    EXPECT_EQ(workload_from_name(workload_name(k)), k);
  EXPECT_FALSE(workload_from_name("nope"));
}

TEST(Workload, Deterministic) {
  auto a = gen_workload(WorkloadKind::pointer_chase, {{"len", 500}}, 9);
  auto b = gen_workload(WorkloadKind::pointer_chase, {{"len", 500}}, 9);
  auto c = gen_workload(WorkloadKind::pointer_chase, {{"len", 500}}, 10);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Workload, StridedLoopAddresses) {
  auto p = gen_workload(WorkloadKind::strided_loop, {{"stride", 64}, {"iters", 50}}, 1);
  auto t = run_trace(p, 100000);
  EXPECT_EQ(t.back().opcode, Opcode::HALT);
  std::vector<Addr> loads;
  for (auto& e : t)
    if (e.opcode == Opcode::LOAD) loads.push_back(*e.eff_addr);
  ASSERT_EQ(loads.size(), 50u);
  for (std::size_t i = 1; i < loads.size(); ++i) EXPECT_EQ(loads[i] - loads[i - 1], 64);
}

TEST(Workload, PointerChaseVisitsEveryNodeOnce) {
  const int len = 300;
  auto p = gen_workload(WorkloadKind::pointer_chase, {{"len", len}}, 4);
  auto t = run_trace(p, 100000);
  std::set<Addr> seen;
  int loads = 0;
  for (auto& e : t)
    if (e.opcode == Opcode::LOAD) {
      seen.insert(*e.eff_addr);
      ++loads;
    }
  EXPECT_EQ(loads, len);
  EXPECT_EQ(seen.size(), static_cast<std::size_t>(len));
}

TEST(Workload, BranchyTakenRate) {
  auto p = gen_workload(WorkloadKind::branchy, {{"iters", 4000}, {"taken_pct", 30}}, 2);
  auto t = run_trace(p, 1'000'000);
  int taken = 0, total = 0;
  for (auto& e : t)
    if (e.opcode == Opcode::BR_COND && e.pc == 4) {
      ++total;
      taken += *e.taken;
    }
  ASSERT_EQ(total, 4000);
  EXPECT_NEAR(taken / 4000.0, 0.30, 0.03);
}

TEST(Workload, MixedPhasesTerminates) {
  auto p = gen_workload(WorkloadKind::mixed_phases, {{"iters", 200}, {"reps", 2}, {"chase_len", 64}}, 1);
  auto t = run_trace(p, 10'000'000);
  EXPECT_EQ(t.back().opcode, Opcode::HALT);
}

TEST(Workload, RejectsBadParams) {
  EXPECT_THROW(gen_workload(WorkloadKind::strided_loop, {{"stride", 0}}, 1), WorkloadError);
  EXPECT_THROW(gen_workload(WorkloadKind::strided_loop, {{"bogus", 1}}, 1), WorkloadError);
  EXPECT_THROW(gen_workload(WorkloadKind::pointer_chase, {{"spacing", 4}}, 1), WorkloadError);
  EXPECT_THROW(gen_workload(WorkloadKind::branchy, {{"taken_pct", 101}}, 1), WorkloadError);
}
