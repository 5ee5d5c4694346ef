// T1: strided-prefetch offload table driven by S-bit marked instructions on
// the main core. The table is told which instructions are strided; it only
// derives stride and distance and issues A + n*stride prefetches.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "r3dla/isa.hpp"

namespace r3dla {

enum class T1State : std::uint8_t { INVALID, TRANSIENT1, TRANSIENT2, STEADY };

inline std::string_view t1_state_name(T1State s) {
  switch (s) {
    case T1State::INVALID: return "INVALID";
    case T1State::TRANSIENT1: return "TRANSIENT1";
    case T1State::TRANSIENT2: return "TRANSIENT2";
    case T1State::STEADY: return "STEADY";
  }
  return "?";
}

struct T1Entry {
  std::uint32_t pc = 0;
  T1State state = T1State::INVALID;
  Addr last_addr = 0;
  std::int64_t stride = 0;
  Cycle last_cycle = 0;
  double iter_time = 0.0;
  std::uint32_t distance = 0;
  std::optional<std::uint32_t> loop_pc;
  std::uint64_t lru = 0;
};

struct T1Config {
  std::uint32_t capacity = 16;
  std::uint32_t initial_degree = 2;
  std::uint32_t burst_cap = 8;
  double latency_smoothing = 0.5;
  double iter_smoothing = 0.125;
};

struct T1Stats {
  std::uint64_t observations = 0;
  std::uint64_t prefetches = 0;
  std::uint64_t allocations = 0;
  std::uint64_t evictions = 0;
  std::uint64_t stride_resets = 0;
  std::uint64_t loop_clears = 0;
  std::uint64_t distance_raises = 0;
};

struct T1Event {
  Cycle cycle;
  std::uint32_t pc;
  Addr addr;
  T1State before;
  T1State after;
  std::int64_t stride;
  std::uint32_t distance;
  std::vector<Addr> prefetches;
};

class T1Table {
 public:
  explicit T1Table(T1Config cfg = {}) : cfg_(cfg), entries_(cfg.capacity) {}

  // One dynamic instance of an S-bit instruction. Returns addresses to prefetch.
  std::vector<Addr> observe(std::uint32_t pc, Addr addr, Cycle cycle, double mem_latency_estimate,
                            std::optional<std::uint32_t> loop_pc = std::nullopt) {
    ++stats_.observations;
    std::vector<Addr> out;
    T1Entry* e = lookup(pc);
    T1State before = e ? e->state : T1State::INVALID;
    if (!e) {
      e = allocate(pc);
      e->last_addr = addr;
      e->last_cycle = cycle;
      e->state = T1State::TRANSIENT1;
      e->loop_pc = loop_pc;
      log(cycle, pc, addr, before, *e, out);
      return out;
    }
    e->lru = ++clock_;
    if (loop_pc) e->loop_pc = loop_pc;
    const std::int64_t delta = addr - e->last_addr;
    const double sample = static_cast<double>(cycle > e->last_cycle ? cycle - e->last_cycle : 0);
    e->iter_time =
        e->iter_time == 0.0 ? sample : cfg_.iter_smoothing * sample + (1.0 - cfg_.iter_smoothing) * e->iter_time;

    switch (e->state) {
      case T1State::INVALID:
        break;
      case T1State::TRANSIENT1:
        e->stride = delta;
        e->last_addr = addr;
        if (delta != 0) {
          for (std::uint32_t k = 1; k <= cfg_.initial_degree; ++k) out.push_back(addr + static_cast<Addr>(k) * delta);
          e->state = T1State::TRANSIENT2;
        }
        break;
      case T1State::TRANSIENT2:
        e->last_addr = addr;
        if (delta == e->stride) {
          e->distance = distance_for(mem_latency_estimate, e->iter_time);
          auto burst = std::min(e->distance, cfg_.burst_cap);
          for (std::uint32_t k = 1; k < burst; ++k) out.push_back(addr + static_cast<Addr>(k) * e->stride);
          out.push_back(addr + static_cast<Addr>(e->distance) * e->stride);
          e->state = T1State::STEADY;
        } else {
          e->stride = delta;
          ++stats_.stride_resets;
        }
        break;
      case T1State::STEADY:
        e->last_addr = addr;
        if (delta == e->stride) {
          // The distance only grows: a loop running faster than the transient
          // estimate gets the missing lines in one catch-up burst.
          auto n = distance_for(mem_latency_estimate, e->iter_time);
          if (n > e->distance) {
            auto first = std::max(e->distance + 1, n > cfg_.burst_cap ? n - cfg_.burst_cap + 1 : 1u);
            for (auto k = first; k < n; ++k) out.push_back(addr + static_cast<Addr>(k) * e->stride);
            e->distance = n;
            ++stats_.distance_raises;
          }
          out.push_back(e->last_addr + static_cast<Addr>(e->distance) * e->stride);
        } else {
          e->state = T1State::TRANSIENT1;
          ++stats_.stride_resets;
        }
        break;
    }
    e->last_cycle = cycle;
    stats_.prefetches += out.size();
    log(cycle, pc, addr, before, *e, out);
    return out;
  }

  // Invalidates entries owned by the loop that just terminated.
  void loop_end(std::uint32_t loop_pc) {
    for (auto& e : entries_)
      if (e.state != T1State::INVALID && e.loop_pc == loop_pc) {
        e.state = T1State::INVALID;
        ++stats_.loop_clears;
      }
  }

  void clear() {
    for (auto& e : entries_) e.state = T1State::INVALID;
  }

  std::size_t live_entries() const {
    std::size_t n = 0;
    for (auto& e : entries_) n += e.state != T1State::INVALID;
    return n;
  }
  const T1Entry* find(std::uint32_t pc) const {
    for (auto& e : entries_)
      if (e.state != T1State::INVALID && e.pc == pc) return &e;
    return nullptr;
  }
  const T1Stats& stats() const { return stats_; }
  const T1Config& config() const { return cfg_; }

  void set_debug(bool on) { debug_ = on; }
  const std::vector<T1Event>& debug_log() const { return events_; }

  // n = ceil(latency / iteration time), at least 1.
  static std::uint32_t distance_for(double latency, double iter_time) {
    if (iter_time < 1.0) iter_time = 1.0;
    auto n = static_cast<std::uint32_t>(std::ceil(latency / iter_time - 1e-9));
    return std::max<std::uint32_t>(1, n);
  }

 private:
  T1Entry* lookup(std::uint32_t pc) {
    for (auto& e : entries_)
      if (e.state != T1State::INVALID && e.pc == pc) return &e;
    return nullptr;
  }

  T1Entry* allocate(std::uint32_t pc) {
    ++stats_.allocations;
    T1Entry* victim = nullptr;
    for (auto& e : entries_)
      if (e.state == T1State::INVALID) {
        victim = &e;
        break;
      }
    if (!victim) {
      victim = &entries_[0];
      for (auto& e : entries_)
        if (e.lru < victim->lru) victim = &e;
      ++stats_.evictions;
    }
    *victim = T1Entry{};
    victim->pc = pc;
    victim->lru = ++clock_;
    return victim;
  }

  void log(Cycle cycle, std::uint32_t pc, Addr addr, T1State before, const T1Entry& e, const std::vector<Addr>& out) {
    if (debug_) events_.push_back({cycle, pc, addr, before, e.state, e.stride, e.distance, out});
  }

  T1Config cfg_;
  std::vector<T1Entry> entries_;
  std::uint64_t clock_ = 0;
  T1Stats stats_{};
  bool debug_ = false;
  std::vector<T1Event> events_;
};

}  // namespace r3dla
