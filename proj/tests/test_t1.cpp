#include <gtest/gtest.h>

#include <random>

#include "r3dla/t1.hpp"

using namespace r3dla;

TEST(T1, StrideFromThreeAccesses) {
  T1Table t;
  EXPECT_TRUE(t.observe(7, 1000, 0, 200).empty());
  EXPECT_EQ(t.find(7)->state, T1State::TRANSIENT1);
  auto first = t.observe(7, 1064, 50, 200);
  EXPECT_EQ(first, (std::vector<Addr>{1128, 1192}));  // initial degree 2
  EXPECT_EQ(t.find(7)->state, T1State::TRANSIENT2);
  auto out = t.observe(7, 1128, 100, 200);
  const auto* e = t.find(7);
  EXPECT_EQ(e->state, T1State::STEADY);
  EXPECT_EQ(e->stride, 64);
  EXPECT_EQ(e->distance, 4u);  // ceil(200 / 50)
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out.back(), 1384);
  EXPECT_EQ(out, (std::vector<Addr>{1192, 1256, 1320, 1384}));
}

TEST(T1, DistanceFormula) {
  EXPECT_EQ(T1Table::distance_for(200, 50), 4u);
  EXPECT_EQ(T1Table::distance_for(200, 60), 4u);
  EXPECT_EQ(T1Table::distance_for(200, 1000), 1u);
  EXPECT_EQ(T1Table::distance_for(200, 0), 200u);
}

TEST(T1, SteadyEmitsExactlyAPlusNDelta) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::int64_t stride = std::uniform_int_distribution<std::int64_t>(-512, 512)(rng);
    if (stride == 0) stride = 8;
    Cycle iter = std::uniform_int_distribution<Cycle>(1, 300)(rng);
    double lat = std::uniform_int_distribution<int>(10, 400)(rng);
    T1Table t;
    Addr a = 1 << 24;
    Cycle now = 0;
    for (int i = 0; i < 3; ++i, a += stride, now += iter) t.observe(3, a, now, lat);
    auto n = T1Table::distance_for(lat, static_cast<double>(iter));
    for (int i = 0; i < 50; ++i, a += stride, now += iter) {
      auto out = t.observe(3, a, now, lat);
      ASSERT_EQ(out, (std::vector<Addr>{a + static_cast<Addr>(n) * stride})) << "stride " << stride << " iter " << iter;
    }
  }
}

TEST(T1, DistanceOnlyGrows) {
  T1Table t;
  Addr a = 0;
  Cycle now = 0;
  for (int i = 0; i < 3; ++i, a += 64, now += 100) t.observe(1, a, now, 200);
  EXPECT_EQ(t.find(1)->distance, 2u);
  // loop speeds up: distance rises, missing lines arrive in one burst
  std::vector<Addr> out;
  for (int i = 0; i < 40; ++i, a += 64, now += 10) out = t.observe(1, a, now, 200);
  EXPECT_GT(t.find(1)->distance, 2u);
  EXPECT_GT(t.stats().distance_raises, 0u);
  auto d = t.find(1)->distance;
  // slows down again: distance stays
  for (int i = 0; i < 40; ++i, a += 64, now += 500) t.observe(1, a, now, 200);
  EXPECT_EQ(t.find(1)->distance, d);
}

TEST(T1, StrideBreakRestartsTraining) {
  T1Table t;
  for (Addr a : {0, 64, 128, 192}) t.observe(1, a, a, 100);
  EXPECT_EQ(t.find(1)->state, T1State::STEADY);
  EXPECT_TRUE(t.observe(1, 5000, 300, 100).empty());
  EXPECT_EQ(t.find(1)->state, T1State::TRANSIENT1);
  EXPECT_EQ(t.stats().stride_resets, 1u);
}

TEST(T1, LruReplacementAndLoopEnd) {
  T1Table t;
  for (std::uint32_t pc = 0; pc < 16; ++pc) t.observe(pc, 0, 0, 100, 99);
  t.observe(0, 64, 1, 100);  // refresh pc 0
  t.observe(16, 0, 2, 100, 7);
  EXPECT_EQ(t.stats().evictions, 1u);
  EXPECT_NE(t.find(0), nullptr);
  EXPECT_EQ(t.find(1), nullptr);
  EXPECT_EQ(t.live_entries(), 16u);
  t.loop_end(99);
  EXPECT_EQ(t.live_entries(), 1u);
  EXPECT_NE(t.find(16), nullptr);
}

TEST(T1, BurstCapped) {
  T1Table t;
  t.observe(1, 0, 0, 1000);
  t.observe(1, 8, 1, 1000);
  auto out = t.observe(1, 16, 2, 1000);
  EXPECT_EQ(t.find(1)->distance, 1000u);
  EXPECT_EQ(out.size(), 8u);  // 7 near lines + the far one
  EXPECT_EQ(out.back(), 16 + 1000 * 8);
}
