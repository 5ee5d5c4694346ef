#include <gtest/gtest.h>

#include "r3dla/memsys.hpp"

using namespace r3dla;

namespace {
const Addr A = 1 << 20;
}

TEST(Memsys, ColdMissThenHit) {
  MemorySystem m;
  auto cold = m.config().cold_latency();
  auto r = m.access(A, AccessKind::load, ThreadMode::MT, 0);
  EXPECT_EQ(r.latency, cold);
  EXPECT_EQ(r.hit_level, Level::DRAM);
  auto h = m.access(A + 8, AccessKind::load, ThreadMode::MT, 1000);
  EXPECT_EQ(h.latency, m.config().l1.hit_latency);
  EXPECT_EQ(h.hit_level, Level::L1);
  EXPECT_EQ(m.dram_stats().reads, 1u);
}

TEST(Memsys, InFlightMerge) {
  MemorySystem m;
  auto cold = m.config().cold_latency();
  m.access(A, AccessKind::load, ThreadMode::MT, 0);
  auto r = m.access(A, AccessKind::load, ThreadMode::MT, 100);
  EXPECT_TRUE(r.merged);
  EXPECT_EQ(r.latency, cold - 100);
  EXPECT_EQ(m.l1_stats(ThreadMode::MT).merges, 1u);
}

TEST(Memsys, LookAheadFillsSharedL3) {
  MemorySystem m;
  m.access(A, AccessKind::load, ThreadMode::LT, 0);
  auto r = m.access(A, AccessKind::load, ThreadMode::MT, 5000);
  EXPECT_EQ(r.hit_level, Level::L3);
  EXPECT_EQ(r.latency, m.config().l1.hit_latency + m.config().l2.hit_latency + m.config().l3.hit_latency);
  EXPECT_EQ(m.dram_stats().reads, 1u);
}

TEST(Memsys, PrefetchUsefulAndLate) {
  MemorySystem m;
  m.access(A, AccessKind::prefetch, ThreadMode::MT, 0);
  m.access(A + 4096, AccessKind::prefetch, ThreadMode::MT, 0);
  auto useful = m.access(A, AccessKind::load, ThreadMode::MT, 1000);
  EXPECT_TRUE(useful.was_prefetched);
  EXPECT_EQ(useful.hit_level, Level::L1);
  auto late = m.access(A + 4096, AccessKind::load, ThreadMode::MT, 10);
  EXPECT_TRUE(late.merged);
  const auto& s = m.l1_stats(ThreadMode::MT);
  EXPECT_EQ(s.prefetch_issued, 2u);
  EXPECT_EQ(s.prefetch_useful, 1u);
  EXPECT_EQ(s.prefetch_late, 1u);
  EXPECT_EQ(s.accesses, 2u);  // prefetches are not demand accesses
}

TEST(Memsys, LruEviction) {
  CacheConfig c;
  MemorySystem m(c);
  const auto sets = c.l1.size_bytes / (c.l1.assoc * c.l1.line_size);
  const Addr stride = static_cast<Addr>(sets * c.l1.line_size);  // same set
  for (std::uint32_t w = 0; w <= c.l1.assoc; ++w) m.access(A + w * stride, AccessKind::load, ThreadMode::MT, 10000 * w);
  EXPECT_FALSE(m.in_l1(ThreadMode::MT, A));
  EXPECT_TRUE(m.in_l1(ThreadMode::MT, A + stride));
  EXPECT_EQ(m.l1_stats(ThreadMode::MT).evictions, 1u);
}

TEST(Memsys, LookAheadDirtyLinesNeverWrittenBack) {
  CacheConfig c;
  c.l3.size_bytes = 64 * 1024;  // small shared level so evictions happen quickly
  c.l3.assoc = 4;
  MemorySystem m(c);
  Cycle t = 0;
  for (Addr a = 0; a < 4 * 1024 * 1024; a += 64) m.access(A + a, AccessKind::store, ThreadMode::LT, t += 1000);
  EXPECT_EQ(m.dram_stats().writebacks, 0u);
  EXPECT_GT(m.l1_stats(ThreadMode::LT).discarded_dirty + m.l2_stats(ThreadMode::LT).discarded_dirty, 0u);

  MemorySystem mt(c);
  t = 0;
  for (Addr a = 0; a < 4 * 1024 * 1024; a += 64) mt.access(A + a, AccessKind::store, ThreadMode::MT, t += 1000);
  EXPECT_GT(mt.dram_stats().writebacks, 0u);
  EXPECT_EQ(mt.dram_stats().traffic_lines, mt.dram_stats().reads + mt.dram_stats().writebacks);
}

TEST(Memsys, MshrLimitDelaysDemandMisses) {
  CacheConfig c;
  c.l1.mshrs = 2;
  MemorySystem m(c);
  auto cold = c.cold_latency();
  m.access(A, AccessKind::load, ThreadMode::MT, 0);
  m.access(A + 64 * 1000, AccessKind::load, ThreadMode::MT, 0);
  auto third = m.access(A + 64 * 2000, AccessKind::load, ThreadMode::MT, 0);
  EXPECT_EQ(third.latency, 2 * cold);
  // prefetches do not occupy demand MSHRs
  MemorySystem p(c);
  p.access(A, AccessKind::prefetch, ThreadMode::MT, 0);
  p.access(A + 64 * 1000, AccessKind::prefetch, ThreadMode::MT, 0);
  EXPECT_EQ(p.access(A + 64 * 2000, AccessKind::load, ThreadMode::MT, 0).latency, cold);
}

TEST(Memsys, ConfigChecks) {
  CacheConfig c;
  c.l2.line_size = 128;
  EXPECT_THROW(c.check(), std::invalid_argument);
  c = {};
  c.l1.size_bytes = 3000;
  EXPECT_THROW(c.check(), std::invalid_argument);
  c = {};
  c.l1.mshrs = 0;
  EXPECT_THROW(c.check(), std::invalid_argument);
  MemorySystem m;
  EXPECT_THROW(m.access(-64, AccessKind::load, ThreadMode::MT, 0), std::invalid_argument);
}
