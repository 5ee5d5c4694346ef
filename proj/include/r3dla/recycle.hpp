// Skeleton recycling: loop detection on the committed stream, the Loop-Config
// Table, and the controller that cycles skeleton versions per loop.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "r3dla/interp.hpp"

namespace r3dla {

enum class LoopEventKind : std::uint8_t { enter, iterate, exit };

struct LoopEvent {
  LoopEventKind kind;
  std::uint32_t loop_pc;
  bool operator==(const LoopEvent&) const = default;
};

// Tracks the nest of active loops. A taken backward conditional branch is a
// loop branch; a CALL to a function that is already active on the call stack
// (self or mutual recursion) is treated as a loop branch too, identified by
// the first call site that recursed into that function.
class LoopTracker {
 public:
  std::vector<LoopEvent> on_commit(const TraceEvent& ev) {
    std::vector<LoopEvent> out;
    switch (ev.opcode) {
      case Opcode::BR_COND: {
        if (!ev.target_pc || *ev.target_pc > ev.pc) break;
        if (*ev.taken) {
          loop_branch(ev.pc, false, 0, out);
        } else if (auto pos = find(ev.pc)) {
          pop_to(*pos, out);
        }
        break;
      }
      case Opcode::CALL: {
        auto target = *ev.target_pc;
        bool active = std::find(frames_.begin(), frames_.end(), target) != frames_.end();
        if (active) {
          auto [it, fresh] = canonical_.try_emplace(target, ev.pc);
          auto base = static_cast<std::size_t>(std::find(frames_.begin(), frames_.end(), target) - frames_.begin()) + 1;
          loop_branch(it->second, true, base, out);
        }
        frames_.push_back(target);
        break;
      }
      case Opcode::RET: {
        if (!frames_.empty()) frames_.pop_back();
        for (std::size_t i = 0; i < stack_.size(); ++i)
          if (stack_[i].recursive && frames_.size() < stack_[i].base_depth) {
            pop_to(i, out);
            break;
          }
        break;
      }
      default:
        break;
    }
    return out;
  }

  std::optional<std::uint32_t> current() const {
    if (stack_.empty()) return std::nullopt;
    return stack_.back().pc;
  }
  std::size_t depth() const { return stack_.size(); }
  bool is_recursive(std::uint32_t pc) const {
    for (auto& [t, p] : canonical_)
      if (p == pc) return true;
    return false;
  }

 private:
  struct Active {
    std::uint32_t pc;
    bool recursive;
    std::size_t base_depth;
  };

  std::optional<std::size_t> find(std::uint32_t pc) const {
    for (std::size_t i = 0; i < stack_.size(); ++i)
      if (stack_[i].pc == pc) return i;
    return std::nullopt;
  }
  void pop_to(std::size_t pos, std::vector<LoopEvent>& out) {
    while (stack_.size() > pos) {
      out.push_back({LoopEventKind::exit, stack_.back().pc});
      stack_.pop_back();
    }
  }
  void loop_branch(std::uint32_t pc, bool recursive, std::size_t base, std::vector<LoopEvent>& out) {
    if (auto pos = find(pc)) {
      pop_to(*pos + 1, out);
      out.push_back({LoopEventKind::iterate, pc});
    } else {
      stack_.push_back({pc, recursive, base});
      out.push_back({LoopEventKind::enter, pc});
    }
  }

  std::vector<Active> stack_;
  std::vector<std::uint32_t> frames_;
  std::map<std::uint32_t, std::uint32_t> canonical_;
};

struct LctEntry {
  std::uint32_t loop_pc = 0;
  int version = 0;
  double ipc = 0.0;
  std::uint64_t lru = 0;
};

class LoopConfigTable {
 public:
  explicit LoopConfigTable(std::size_t capacity = 16) : cap_(capacity) {}

  std::optional<LctEntry> lookup(std::uint32_t loop_pc) {
    for (auto& e : entries_)
      if (e.loop_pc == loop_pc) {
        e.lru = ++clock_;
        return e;
      }
    return std::nullopt;
  }
  void insert(std::uint32_t loop_pc, int version, double ipc) {
    for (auto& e : entries_)
      if (e.loop_pc == loop_pc) {
        e = {loop_pc, version, ipc, ++clock_};
        return;
      }
    if (entries_.size() >= cap_) {
      auto victim = std::min_element(entries_.begin(), entries_.end(),
                                     [](const LctEntry& a, const LctEntry& b) { return a.lru < b.lru; });
      entries_.erase(victim);
      ++evictions_;
    }
    entries_.push_back({loop_pc, version, ipc, ++clock_});
  }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return cap_; }
  std::uint64_t evictions() const { return evictions_; }
  const std::vector<LctEntry>& entries() const { return entries_; }

 private:
  std::size_t cap_;
  std::vector<LctEntry> entries_;
  std::uint64_t clock_ = 0;
  std::uint64_t evictions_ = 0;
};

enum class RecycleMode : std::uint8_t { off, dynamic, static_map };

struct RecycleConfig {
  RecycleMode mode = RecycleMode::off;
  std::uint64_t unit_instructions = 10000;
  std::uint32_t repeats = 1;
  int num_versions = 6;
  int default_version = 0;
  std::map<std::uint32_t, int> static_map;
  std::size_t lct_capacity = 16;
};

struct UnitMeasurement {
  std::uint32_t loop_pc;
  int version;
  std::uint64_t instructions;
  Cycle cycles;
  double ipc() const { return cycles ? static_cast<double>(instructions) / static_cast<double>(cycles) : 0.0; }
};

struct VersionSelection {
  std::uint32_t loop_pc;
  int version;
  std::vector<double> ipc_by_version;
};

struct TimelineEntry {
  std::uint64_t instructions;
  Cycle cycle;
  std::uint32_t loop_pc;
  int version;
  std::string reason;
};

class RecycleController {
 public:
  explicit RecycleController(RecycleConfig cfg = {}) : cfg_(std::move(cfg)), lct_(cfg_.lct_capacity) {
    active_ = cfg_.default_version;
  }

  // Returns the version the look-ahead thread should switch to, if any.
  std::optional<int> on_event(const LoopEvent& ev, std::uint64_t committed, Cycle now) {
    if (cfg_.mode == RecycleMode::off || cfg_.num_versions <= 1) return std::nullopt;
    switch (ev.kind) {
      case LoopEventKind::enter:
        return begin_loop(ev.loop_pc, committed, now);
      case LoopEventKind::iterate:
        if (!current_ || *current_ != ev.loop_pc) return begin_loop(ev.loop_pc, committed, now);
        return iterate(committed, now);
      case LoopEventKind::exit:
        if (current_ && *current_ == ev.loop_pc) {
          current_.reset();
          cycling_ = false;
          unit_open_ = false;
        }
        return std::nullopt;
    }
    return std::nullopt;
  }

  // The engine finished re-masking the look-ahead thread.
  void swap_applied(std::uint64_t committed, Cycle now) {
    awaiting_swap_ = false;
    if (cycling_) open_unit(committed, now);
  }

  int active_version() const { return active_; }
  bool awaiting_swap() const { return awaiting_swap_; }
  const LoopConfigTable& lct() const { return lct_; }
  const std::vector<UnitMeasurement>& measurements() const { return measurements_; }
  const std::vector<VersionSelection>& selections() const { return selections_; }
  const std::vector<TimelineEntry>& timeline() const { return timeline_; }
  std::uint64_t lct_hits() const { return lct_hits_; }
  std::uint64_t lct_misses() const { return lct_misses_; }
  const RecycleConfig& config() const { return cfg_; }

 private:
  std::optional<int> begin_loop(std::uint32_t loop_pc, std::uint64_t committed, Cycle now) {
    current_ = loop_pc;
    cycling_ = false;
    unit_open_ = false;
    if (cfg_.mode == RecycleMode::static_map) {
      auto it = cfg_.static_map.find(loop_pc);
      return switch_to(it == cfg_.static_map.end() ? cfg_.default_version : it->second, "static", committed, now);
    }
    if (auto hit = lct_.lookup(loop_pc)) {
      ++lct_hits_;
      return switch_to(hit->version, "lct_hit", committed, now);
    }
    ++lct_misses_;
    cycling_ = true;
    slot_ = 0;
    samples_.assign(static_cast<std::size_t>(cfg_.num_versions), {});
    auto req = switch_to(0, "cycle", committed, now);
    if (!req) open_unit(committed, now);
    return req;
  }

  std::optional<int> iterate(std::uint64_t committed, Cycle now) {
    if (!cycling_ || awaiting_swap_) return std::nullopt;
    if (!unit_open_) {
      open_unit(committed, now);
      return std::nullopt;
    }
    auto instrs = committed - unit_instr_;
    if (instrs < cfg_.unit_instructions) return std::nullopt;
    UnitMeasurement m{*current_, active_, instrs, now - unit_cycle_};
    measurements_.push_back(m);
    samples_[static_cast<std::size_t>(active_)].push_back(m);
    unit_open_ = false;
    ++slot_;
    auto total = static_cast<std::uint32_t>(cfg_.num_versions) * cfg_.repeats;
    if (slot_ < total) {
      int next = static_cast<int>(slot_ % static_cast<std::uint32_t>(cfg_.num_versions));
      auto req = switch_to(next, "cycle", committed, now);
      if (!req) open_unit(committed, now);
      return req;
    }
    // Every version measured: pick the fastest, lowest id on ties.
    VersionSelection sel{*current_, 0, {}};
    double best = -1.0;
    for (int v = 0; v < cfg_.num_versions; ++v) {
      std::uint64_t in = 0;
      Cycle cy = 0;
      for (auto& s : samples_[static_cast<std::size_t>(v)]) {
        in += s.instructions;
        cy += s.cycles;
      }
      double ipc = cy ? static_cast<double>(in) / static_cast<double>(cy) : 0.0;
      sel.ipc_by_version.push_back(ipc);
      if (ipc > best) {
        best = ipc;
        sel.version = v;
      }
    }
    selections_.push_back(sel);
    lct_.insert(*current_, sel.version, best);
    cycling_ = false;
    return switch_to(sel.version, "select", committed, now);
  }

  void open_unit(std::uint64_t committed, Cycle now) {
    unit_open_ = true;
    unit_instr_ = committed;
    unit_cycle_ = now;
  }

  std::optional<int> switch_to(int version, const char* reason, std::uint64_t committed, Cycle now) {
    timeline_.push_back({committed, now, current_.value_or(0), version, reason});
    if (version == active_) return std::nullopt;
    active_ = version;
    awaiting_swap_ = true;
    return version;
  }

  RecycleConfig cfg_;
  LoopConfigTable lct_;
  int active_ = 0;
  std::optional<std::uint32_t> current_;
  bool cycling_ = false;
  bool awaiting_swap_ = false;
  bool unit_open_ = false;
  std::uint32_t slot_ = 0;
  std::uint64_t unit_instr_ = 0;
  Cycle unit_cycle_ = 0;
  std::vector<std::vector<UnitMeasurement>> samples_;
  std::vector<UnitMeasurement> measurements_;
  std::vector<VersionSelection> selections_;
  std::vector<TimelineEntry> timeline_;
  std::uint64_t lct_hits_ = 0;
  std::uint64_t lct_misses_ = 0;
};

}  // namespace r3dla
