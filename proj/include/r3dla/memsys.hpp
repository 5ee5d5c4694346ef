// Three-level inclusive cache hierarchy with flat DRAM latency.
//
// Each core (main thread, look-ahead thread) owns private L1D/L2; L3 and DRAM
// are shared. Lines carry a ready cycle so that a demand access to a line whose
// fill is still in flight merges with it instead of paying a second miss.
// Caches track tags only; values live in the functional memory image.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "r3dla/isa.hpp"

namespace r3dla {

enum class Level : std::uint8_t { L1, L2, L3, DRAM };
enum class AccessKind : std::uint8_t { load, store, prefetch };
enum class ThreadMode : std::uint8_t { MT = 0, LT = 1 };

inline std::string_view level_name(Level l) {
  switch (l) {
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
    case Level::DRAM: return "DRAM";
  }
  return "?";
}

struct LevelConfig {
  std::uint64_t size_bytes = 32 * 1024;
  std::uint32_t assoc = 4;
  std::uint32_t line_size = 64;
  std::uint32_t hit_latency = 3;
  std::uint32_t mshrs = 32;
};

struct CacheConfig {
  LevelConfig l1{32 * 1024, 4, 64, 3, 32};
  LevelConfig l2{256 * 1024, 8, 64, 9, 32};
  LevelConfig l3{2 * 1024 * 1024, 16, 64, 36, 64};
  std::uint32_t dram_latency = 200;

  void check() const {
    for (const auto* l : {&l1, &l2, &l3}) {
      if (l->line_size != l1.line_size) throw std::invalid_argument("cache: line sizes must match across levels");
      if (!std::has_single_bit(l->line_size)) throw std::invalid_argument("cache: line size must be a power of two");
      if (l->assoc == 0 || l->size_bytes % (std::uint64_t{l->assoc} * l->line_size) != 0)
        throw std::invalid_argument("cache: size must be a multiple of assoc * line size");
      auto sets = l->size_bytes / (std::uint64_t{l->assoc} * l->line_size);
      if (!std::has_single_bit(sets)) throw std::invalid_argument("cache: set count must be a power of two");
      if (l->mshrs == 0) throw std::invalid_argument("cache: mshrs must be >= 1");
    }
  }
  std::uint32_t cold_latency() const { return l1.hit_latency + l2.hit_latency + l3.hit_latency + dram_latency; }
};

struct AccessResult {
  std::uint32_t latency = 0;
  Level hit_level = Level::L1;
  bool was_prefetched = false;  // demand touched a line brought in by a prefetch
  bool merged = false;          // joined an in-flight fill
};

struct LevelStats {
  std::uint64_t accesses = 0;  // demand (load + store)
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t merges = 0;  // subset of misses that joined an in-flight fill
  std::uint64_t prefetch_issued = 0;
  std::uint64_t prefetch_useful = 0;
  std::uint64_t prefetch_late = 0;
  std::uint64_t evictions = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t discarded_dirty = 0;  // look-ahead dirty lines dropped on eviction
};

struct DramStats {
  std::uint64_t reads = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t traffic_lines = 0;
};

class SetAssocCache {
 public:
  struct Line {
    std::uint64_t tag = 0;
    bool valid = false;
    bool dirty = false;
    bool prefetched = false;
    Cycle ready = 0;
    std::uint64_t lru = 0;
  };

  explicit SetAssocCache(const LevelConfig& cfg) : cfg_(cfg) {
    sets_ = cfg.size_bytes / (std::uint64_t{cfg.assoc} * cfg.line_size);
    lines_.resize(sets_ * cfg.assoc);
  }

  Line* find(std::uint64_t line_addr) {
    auto base = set_of(line_addr) * cfg_.assoc;
    for (std::uint32_t w = 0; w < cfg_.assoc; ++w) {
      auto& l = lines_[base + w];
      if (l.valid && l.tag == line_addr) return &l;
    }
    return nullptr;
  }
  void touch(Line& l) { l.lru = ++clock_; }

  // Inserts a line, returning the evicted victim (if any).
  std::optional<Line> insert(std::uint64_t line_addr, Cycle ready, bool prefetched, Line** slot) {
    auto base = set_of(line_addr) * cfg_.assoc;
    Line* victim = &lines_[base];
    for (std::uint32_t w = 0; w < cfg_.assoc; ++w) {
      auto& l = lines_[base + w];
      if (!l.valid) {
        victim = &l;
        break;
      }
      if (l.lru < victim->lru) victim = &l;
    }
    std::optional<Line> evicted;
    if (victim->valid) evicted = *victim;
    *victim = Line{line_addr, true, false, prefetched, ready, ++clock_};
    *slot = victim;
    return evicted;
  }

  std::optional<Line> invalidate(std::uint64_t line_addr) {
    if (auto* l = find(line_addr)) {
      Line old = *l;
      l->valid = false;
      return old;
    }
    return std::nullopt;
  }

  const LevelConfig& config() const { return cfg_; }

 private:
  std::uint64_t set_of(std::uint64_t line_addr) const { return line_addr & (sets_ - 1); }

  LevelConfig cfg_;
  std::uint64_t sets_;
  std::vector<Line> lines_;
  std::uint64_t clock_ = 0;
};

class MemorySystem {
 public:
  explicit MemorySystem(const CacheConfig& cfg = {})
      : cfg_(cfg),
        l1_{SetAssocCache(cfg.l1), SetAssocCache(cfg.l1)},
        l2_{SetAssocCache(cfg.l2), SetAssocCache(cfg.l2)},
        l3_(cfg.l3) {
    cfg.check();
    line_shift_ = static_cast<unsigned>(std::countr_zero(cfg.l1.line_size));
  }

  AccessResult access(Addr addr, AccessKind kind, ThreadMode mode, Cycle now = 0) {
    if (addr < 0) throw std::invalid_argument("negative address");
    const int c = static_cast<int>(mode);
    const std::uint64_t line = static_cast<std::uint64_t>(addr) >> line_shift_;
    const bool demand = kind != AccessKind::prefetch;
    auto& s1 = l1_stats_[c];

    AccessResult r;
    if (auto* l = l1_[c].find(line)) {
      l1_[c].touch(*l);
      if (!demand) return r;  // already present or in flight: nothing to do
      ++s1.accesses;
      if (kind == AccessKind::store) l->dirty = true;
      if (l->ready > now) {
        ++s1.misses;
        ++s1.merges;
        r.merged = true;
        r.latency = std::max<std::uint32_t>(cfg_.l1.hit_latency, static_cast<std::uint32_t>(l->ready - now));
        if (l->prefetched) {
          ++s1.prefetch_late;
          l->prefetched = false;
          r.was_prefetched = true;
        }
      } else {
        ++s1.hits;
        r.latency = cfg_.l1.hit_latency;
        if (l->prefetched) {
          ++s1.prefetch_useful;
          l->prefetched = false;
          r.was_prefetched = true;
        }
      }
      r.hit_level = Level::L1;
      return r;
    }

    if (demand) {
      ++s1.accesses;
      ++s1.misses;
    } else {
      ++s1.prefetch_issued;
    }

    // MSHR occupancy: a new demand miss waits for a free entry. Prefetches use
    // a separate queue and never block demand traffic.
    auto& mshr = mshr_[c];
    while (!mshr.empty() && mshr.top() <= now) mshr.pop();
    Cycle start = now;
    if (demand && mshr.size() >= cfg_.l1.mshrs) {
      start = std::max(now, mshr.top());
      mshr.pop();
    }

    std::uint32_t lat = cfg_.l1.hit_latency;
    Level level = Level::L2;
    auto& s2 = l2_stats_[c];
    if (demand) ++s2.accesses;
    auto* l2l = l2_[c].find(line);
    if (l2l) {
      l2_[c].touch(*l2l);
      if (demand) ++s2.hits;
      lat += std::max<std::uint32_t>(cfg_.l2.hit_latency,
                                     l2l->ready > start ? static_cast<std::uint32_t>(l2l->ready - start) : 0);
    } else {
      if (demand) ++s2.misses;
      lat += cfg_.l2.hit_latency;
      level = Level::L3;
      if (demand) ++l3_stats_.accesses;
      auto* l3l = l3_.find(line);
      if (l3l) {
        l3_.touch(*l3l);
        if (demand) ++l3_stats_.hits;
        lat += std::max<std::uint32_t>(cfg_.l3.hit_latency,
                                       l3l->ready > start ? static_cast<std::uint32_t>(l3l->ready - start) : 0);
      } else {
        if (demand) ++l3_stats_.misses;
        lat += cfg_.l3.hit_latency + cfg_.dram_latency;
        level = Level::DRAM;
        ++dram_.reads;
        ++dram_.traffic_lines;
        fill_l3(line, start + lat);
      }
      fill_l2(c, line, start + lat);
    }
    Cycle ready = start + lat;
    fill_l1(c, line, ready, !demand, kind == AccessKind::store);
    if (demand) mshr.push(ready);

    r.latency = static_cast<std::uint32_t>(ready - now);
    r.hit_level = level;
    return r;
  }

  const LevelStats& l1_stats(ThreadMode m) const { return l1_stats_[static_cast<int>(m)]; }
  const LevelStats& l2_stats(ThreadMode m) const { return l2_stats_[static_cast<int>(m)]; }
  const LevelStats& l3_stats() const { return l3_stats_; }
  const DramStats& dram_stats() const { return dram_; }
  const CacheConfig& config() const { return cfg_; }
  std::uint64_t line_of(Addr a) const { return static_cast<std::uint64_t>(a) >> line_shift_; }

  bool in_l1(ThreadMode m, Addr a) { return l1_[static_cast<int>(m)].find(line_of(a)) != nullptr; }
  bool l3_dirty(Addr a) {
    auto* l = l3_.find(line_of(a));
    return l && l->dirty;
  }

 private:
  void fill_l1(int c, std::uint64_t line, Cycle ready, bool prefetched, bool dirty) {
    SetAssocCache::Line* slot = nullptr;
    auto victim = l1_[c].insert(line, ready, prefetched, &slot);
    slot->dirty = dirty;
    if (victim) {
      ++l1_stats_[c].evictions;
      if (victim->dirty) spill_dirty(c, victim->tag, l1_stats_[c], /*into_l2=*/true);
    }
  }

  void fill_l2(int c, std::uint64_t line, Cycle ready) {
    SetAssocCache::Line* slot = nullptr;
    auto victim = l2_[c].insert(line, ready, false, &slot);
    if (!victim) return;
    ++l2_stats_[c].evictions;
    bool dirty = victim->dirty;
    if (auto inner = l1_[c].invalidate(victim->tag)) dirty = dirty || inner->dirty;
    if (dirty) spill_dirty(c, victim->tag, l2_stats_[c], /*into_l2=*/false);
  }

  void fill_l3(std::uint64_t line, Cycle ready) {
    SetAssocCache::Line* slot = nullptr;
    auto victim = l3_.insert(line, ready, false, &slot);
    if (!victim) return;
    ++l3_stats_.evictions;
    bool dirty = victim->dirty;
    for (int c = 0; c < 2; ++c) {
      bool private_dirty = false;
      if (auto a = l1_[c].invalidate(victim->tag)) private_dirty |= a->dirty;
      if (auto b = l2_[c].invalidate(victim->tag)) private_dirty |= b->dirty;
      if (private_dirty) {
        if (c == static_cast<int>(ThreadMode::LT))
          ++l1_stats_[c].discarded_dirty;
        else
          dirty = true;
      }
    }
    if (dirty) {
      ++l3_stats_.writebacks;
      ++dram_.writebacks;
      ++dram_.traffic_lines;
    }
  }

  // Dirty victim leaving a private level. Look-ahead dirty data never leaves its core.
  void spill_dirty(int c, std::uint64_t line, LevelStats& from, bool into_l2) {
    if (c == static_cast<int>(ThreadMode::LT)) {
      ++from.discarded_dirty;
      return;
    }
    ++from.writebacks;
    if (into_l2) {
      if (auto* l = l2_[c].find(line)) {
        l->dirty = true;
        return;
      }
    }
    if (auto* l = l3_.find(line)) l->dirty = true;
  }

  CacheConfig cfg_;
  unsigned line_shift_ = 6;
  std::array<SetAssocCache, 2> l1_;
  std::array<SetAssocCache, 2> l2_;
  SetAssocCache l3_;
  std::array<LevelStats, 2> l1_stats_{};
  std::array<LevelStats, 2> l2_stats_{};
  LevelStats l3_stats_{};
  DramStats dram_{};
  std::array<std::priority_queue<Cycle, std::vector<Cycle>, std::greater<>>, 2> mshr_;
};

}  // namespace r3dla
