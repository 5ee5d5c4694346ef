// Cycle-level model of the decoupled look-ahead pair: a look-ahead thread (LT)
// running a skeleton and a main thread (MT) running the full program, joined
// by the branch outcome queue (BOQ) and footnote queue (FQ).
//
// Both cores are execute-at-fetch: the functional step happens when an
// instruction is fetched and the timing model only decides when things
// happen. MT's functional state is the architectural state; LT owns a private
// overlay over MT's memory image.
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "r3dla/interp.hpp"
#include "r3dla/memsys.hpp"
#include "r3dla/recycle.hpp"
#include "r3dla/skeleton.hpp"
#include "r3dla/t1.hpp"
#include "r3dla/vreuse.hpp"

namespace r3dla {

struct CoreParams {
  std::uint32_t fetch_width = 4;
  std::uint32_t decode_width = 4;
  std::uint32_t issue_width = 4;
  std::uint32_t commit_width = 4;
  std::uint32_t window = 192;
  std::uint32_t mispredict_penalty = 20;
  std::uint32_t fetch_buffer = 32;
  std::uint32_t btb_entries = 4096;
  std::uint32_t btb_miss_penalty = 2;
  std::uint32_t lt_scan_width = 16;
  std::uint32_t alu_latency = 1;
  std::uint32_t mul_latency = 3;
  std::uint32_t replay_penalty = 3;

  void check() const {
    auto pos = [](std::uint32_t v, const char* f) {
      if (v == 0) throw std::invalid_argument(std::string("core.") + f + " must be > 0");
    };
    pos(fetch_width, "fetch_width");
    pos(decode_width, "decode_width");
    pos(issue_width, "issue_width");
    pos(commit_width, "commit_width");
    pos(window, "window");
    pos(fetch_buffer, "fetch_buffer");
    pos(btb_entries, "btb_entries");
    pos(lt_scan_width, "lt_scan_width");
    pos(alu_latency, "alu_latency");
    pos(mul_latency, "mul_latency");
  }
};

struct Features {
  bool t1 = false;
  bool value_reuse = false;
  bool fetch_buffer = false;
  bool operator==(const Features&) const = default;
};

struct EngineOptions {
  CoreParams core;
  CacheConfig cache;
  Features features;
  RecycleConfig recycle;
  std::uint64_t limit = 1'000'000;
  std::uint64_t max_cycles = 0;  // 0: derived from limit
  std::uint32_t reboot_penalty = 64;
  std::uint32_t boq_capacity = 512;
  std::uint32_t fq_capacity = 128;
  std::uint32_t vpt_capacity = 32;
  bool release_prefetch_on_dequeue = true;
  T1Config t1;
  SifTrainingConfig sif;
  std::uint32_t sif_bits = 1024;
  std::uint32_t sif_hashes = 2;
  double inject_vp_error_rate = 0.0;
  std::uint64_t seed = 1;
  bool ideal_fetch = false;
  bool ideal_backend = false;
  bool record_trace = false;
  bool collect_pc_stats = false;
  bool t1_debug = false;
  std::uint32_t gshare_bits = 14;
  std::uint64_t starvation_reboot = 20000;  // MT cycles waiting on an empty BOQ
  std::optional<int> initial_version;       // default: v0 with T1 on, v3 otherwise

  void check() const {
    core.check();
    cache.check();
    if (limit == 0) throw std::invalid_argument("limit must be > 0");
    if (boq_capacity == 0) throw std::invalid_argument("boq_capacity must be > 0");
    if (fq_capacity == 0) throw std::invalid_argument("fq_capacity must be > 0");
    if (vpt_capacity == 0) throw std::invalid_argument("vpt_capacity must be > 0");
    if (inject_vp_error_rate < 0.0 || inject_vp_error_rate > 1.0)
      throw std::invalid_argument("inject_vp_error_rate must be in [0,1]");
    if (sif_bits == 0 || sif_hashes == 0) throw std::invalid_argument("sif parameters must be > 0");
  }
};

struct PcStats {
  std::uint64_t exec_count = 0;
  std::uint64_t mem_accesses = 0;
  std::uint64_t l1_misses = 0;
  std::uint64_t l2_misses = 0;
  std::uint64_t taken = 0;
  std::uint64_t backward_taken = 0;
  double latency_sum = 0.0;
  bool have_addr = false;
  Addr last_addr = 0;
  std::map<std::int64_t, std::uint64_t> strides;
  std::set<std::uint32_t> consumers;
};

struct VrStats {
  std::uint64_t footnotes = 0;       // reuse footnotes sent by LT
  std::uint64_t unattached = 0;      // no unread BOQ entry to ride on
  std::uint64_t vpt_overflow = 0;
  std::uint64_t dropped = 0;         // VPT entries that never matched
  std::uint64_t applied = 0;         // MT instructions given a predicted value
  std::uint64_t skipped = 0;         // of those, validation skipped
  std::uint64_t confirmed = 0;
  std::uint64_t mispredicted = 0;
  std::uint64_t skip_violations = 0;
  std::uint64_t injected = 0;
  std::uint64_t replays = 0;
  std::uint64_t sif_deletions = 0;
};

struct VpEvent {
  std::uint64_t seq;  // MT dynamic instruction
  std::uint32_t pc;
  bool deletion;      // false: prediction applied at fetch
};

struct RunStats {
  Cycle cycles = 0;
  std::uint64_t mt_committed = 0;
  std::uint64_t lt_committed = 0;
  double ipc = 0.0;
  bool halted = false;
  bool dla = false;
  int initial_version = 0;

  std::uint64_t reboots = 0;
  std::uint64_t reboots_mismatch = 0;
  std::uint64_t reboots_stuck = 0;
  std::uint64_t version_swaps = 0;
  std::uint64_t lt_faults = 0;
  std::uint64_t mt_cond_branches = 0;
  std::uint64_t mt_mispredicts = 0;
  std::uint64_t lt_mispredicts = 0;
  std::uint64_t mt_btb_misses = 0;
  std::uint64_t boq_empty_stalls = 0;
  std::uint64_t boq_full_stalls = 0;
  std::uint64_t fq_full_stalls = 0;
  std::uint64_t boq_pushed = 0;
  std::uint64_t boq_popped = 0;
  std::uint64_t boq_flushed = 0;
  std::uint64_t boq_law_checks = 0;
  std::uint64_t footnotes_prefetch = 0;
  std::uint64_t footnotes_branch = 0;
  std::uint64_t lt_dynamic_instructions = 0;  // instructions LT executed (skeleton dynamic size)

  std::uint64_t fetch_bubbles = 0;
  std::vector<std::uint64_t> fb_occupancy;  // start-of-cycle fetch buffer occupancy
  std::vector<std::uint64_t> demand_hist;
  std::vector<std::uint64_t> supply_hist;
  std::vector<std::uint64_t> boq_occupancy;

  VrStats vr;
  T1Stats t1;
  std::uint64_t t1_steady_accesses = 0;
  std::uint64_t t1_steady_l1_hits = 0;
  std::vector<T1Event> t1_log;

  LevelStats l1[2];
  LevelStats l2[2];
  LevelStats l3;
  DramStats dram;

  std::vector<TimelineEntry> recycle_timeline;
  std::vector<UnitMeasurement> recycle_units;
  std::vector<VersionSelection> recycle_selections;
  std::uint64_t lct_hits = 0;
  std::uint64_t lct_misses = 0;

  std::vector<PcStats> pc_stats;
  std::vector<TraceEvent> mt_trace;
  std::vector<VpEvent> vp_events;
};

class BoqLawViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class CycleLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gshare with 2-bit counters. A counter that has never been trained falls back
// to backward-taken / forward-not-taken.
class Gshare {
 public:
  explicit Gshare(std::uint32_t bits = 14) : bits_(bits), ctr_(std::size_t{1} << bits, kUntrained) {}
  bool predict(std::uint32_t pc, bool backward) const {
    auto c = ctr_[index(pc)];
    return c == kUntrained ? backward : c >= 2;
  }
  void update(std::uint32_t pc, bool taken) {
    auto& c = ctr_[index(pc)];
    if (c == kUntrained)
      c = taken ? 2 : 1;
    else if (taken && c < 3)
      ++c;
    else if (!taken && c > 0)
      --c;
    hist_ = ((hist_ << 1) | (taken ? 1u : 0u)) & ((1ull << bits_) - 1);
  }

 private:
  static constexpr std::uint8_t kUntrained = 0xff;
  std::size_t index(std::uint32_t pc) const { return (pc ^ hist_) & ((1ull << bits_) - 1); }
  std::uint32_t bits_;
  std::vector<std::uint8_t> ctr_;
  std::uint64_t hist_ = 0;
};

class Btb {
 public:
  explicit Btb(std::uint32_t entries = 4096) : tags_(entries, -1) {}
  bool hit(std::uint32_t pc) const { return tags_[pc % tags_.size()] == static_cast<std::int64_t>(pc); }
  void insert(std::uint32_t pc) { tags_[pc % tags_.size()] = pc; }

 private:
  std::vector<std::int64_t> tags_;
};

namespace detail {

enum class FootnoteKind : std::uint8_t { prefetch_addr, reuse_value, branch_target };

struct DynInst {
  TraceEvent ev;
  const StaticInstr* si = nullptr;
  Cycle dispatch = 0;
  Cycle complete = 0;
  Cycle dst_ready = 0;
  Word value = 0;
  std::uint32_t offset = 0;
  bool mispredicted = false;
  bool boq_mismatch = false;
  bool has_vp = false;
  bool vp_skip = false;
  bool vp_checked = false;
  Word vp_value = 0;
  bool l1_miss = false;
  bool btb_miss = false;
};

struct BoqEntry {
  bool taken;
  bool footnote;
  std::uint64_t id;
};

struct FqEntry {
  FootnoteKind kind;
  Word payload;
  std::uint32_t pc;
  std::uint32_t offset;
  std::uint64_t assoc;
};

// Issue-slot bookkeeping keyed by cycle in a ring.
class IssueSlots {
 public:
  IssueSlots(std::uint32_t width) : width_(width), ring_(kSize) {}
  Cycle reserve(Cycle ready) {
    for (Cycle c = ready;; ++c) {
      auto& s = ring_[c % kSize];
      if (s.cycle != c) s = {c, 0};
      if (s.used < width_) {
        ++s.used;
        return c;
      }
    }
  }

 private:
  static constexpr std::size_t kSize = 1 << 16;
  struct Slot {
    Cycle cycle = ~Cycle{0};
    std::uint32_t used = 0;
  };
  std::uint32_t width_;
  std::vector<Slot> ring_;
};

struct Pipe {
  explicit Pipe(std::uint32_t issue_width) : slots(issue_width) {}
  std::deque<DynInst> fb;
  std::deque<DynInst> rob;
  std::array<Cycle, kNumRegs> reg_ready{};
  IssueSlots slots;
  Cycle fetch_resume = 0;
  bool blocked = false;
  std::uint32_t offset = 0;

  void clear() {
    fb.clear();
    rob.clear();
    reg_ready.fill(0);
    blocked = false;
    offset = 0;
  }
};

inline bool taken_control(const TraceEvent& ev) {
  switch (ev.opcode) {
    case Opcode::BR_COND: return *ev.taken;
    case Opcode::BR_UNCOND:
    case Opcode::CALL:
    case Opcode::RET: return true;
    default: return false;
  }
}

}  // namespace detail

class Engine {
 public:
  // `skel` null runs the main thread alone with its own branch predictor.
  Engine(const StaticProgram& prog, EngineOptions opt, const SkeletonSet* skel = nullptr)
      : prog_(prog),
        opt_(std::move(opt)),
        skel_(skel),
        mem_(opt_.cache),
        mt_(opt_.core.issue_width),
        lt_(opt_.core.issue_width),
        mt_gshare_(opt_.gshare_bits),
        lt_gshare_(opt_.gshare_bits),
        mt_btb_(opt_.core.btb_entries),
        lt_btb_(opt_.core.btb_entries),
        t1_(opt_.t1),
        sif_(opt_.sif_bits, opt_.sif_hashes),
        trainer_(sif_, opt_.sif),
        vpt_(opt_.vpt_capacity),
        recycle_(recycle_config()),
        rng_(opt_.seed) {
    opt_.check();
    validate(prog_);
    mt_state_ = initial_state(prog_);
    lt_state_.memory.rebase(&mt_state_.memory);
    fb_cap_ = opt_.features.fetch_buffer ? opt_.core.fetch_buffer : opt_.core.decode_width;
    if (skel_) {
      check_skeleton(prog_, *skel_);
      version_ = initial_version();
      if (version_ < 0 || static_cast<std::size_t>(version_) >= skel_->versions.size())
        throw std::invalid_argument("initial skeleton version out of range");
      set_mask(version_);
      copy_mt_to_lt();
    }
    t1_.set_debug(opt_.t1_debug);
    auto n = static_cast<std::size_t>(opt_.core.fetch_width) * 4 + fb_cap_ + 1;
    stats_.fb_occupancy.assign(fb_cap_ + 1, 0);
    stats_.demand_hist.assign(opt_.core.decode_width + 1, 0);
    stats_.supply_hist.assign(n, 0);
    stats_.boq_occupancy.assign(opt_.boq_capacity + 1, 0);
    if (opt_.collect_pc_stats) stats_.pc_stats.assign(prog_.size(), {});
    last_writer_.fill(-1);
    lat_est_.assign(prog_.size(), 0.0);
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  RunStats run() {
    Cycle max_cycles = opt_.max_cycles ? opt_.max_cycles : opt_.limit * 2000 + 10'000'000;
    Cycle now = 0;
    while (!mt_done_ && stats_.mt_committed < opt_.limit) {
      if (now > max_cycles) throw CycleLimitExceeded("cycle limit exceeded at cycle " + std::to_string(now));
      if (reboot_at_ && now >= *reboot_at_) {
        reboot_at_.reset();
        rebooted_seq_ = reboot_seq_;
        ++stats_.reboots_mismatch;
        reboot(now);
      }
      if (pending_swap_ && mt_.rob.empty() && mt_.fb.empty() && replay_.empty()) apply_swap(now);
      if (lt_active_ && mt_starved_ >= 1 &&
          ((lt_idle() && lt_.rob.empty()) || mt_starved_ >= opt_.starvation_reboot)) {
        ++stats_.reboots_stuck;
        reboot(now);
      }
      if (lt_active_) lt_tick(now);
      mt_tick(now);
      check_boq_law();
      ++stats_.boq_occupancy[boq_.size()];
      ++now;
    }
    return finish(now);
  }

 private:
  using DynInst = detail::DynInst;
  using Pipe = detail::Pipe;

  RecycleConfig recycle_config() const {
    RecycleConfig rc = opt_.recycle;
    rc.default_version = initial_version();
    if (skel_) rc.num_versions = std::min<int>(rc.num_versions, static_cast<int>(skel_->versions.size()));
    return rc;
  }
  int initial_version() const {
    if (opt_.initial_version) return *opt_.initial_version;
    return opt_.features.t1 ? 0 : 3;
  }

  void set_mask(int v) {
    mask_ = &skel_->version(v);
    lt_active_ = !mask_->empty() && !opt_.ideal_fetch;
  }

  bool lt_idle() const { return lt_state_.halted && lt_.fb.empty(); }

  void copy_mt_to_lt() {
    lt_state_.regs = mt_state_.regs;
    lt_state_.pc = mt_state_.pc;
    lt_state_.call_stack = mt_state_.call_stack;
    lt_state_.seq = mt_state_.seq;
    lt_state_.halted = mt_state_.halted;
    lt_state_.memory.discard();
  }

  // Restarts LT from MT's current state and flushes everything between them.
  void reboot(Cycle now) {
    ++stats_.reboots;
    copy_mt_to_lt();
    lt_.clear();
    lt_.fetch_resume = now + opt_.reboot_penalty;
    stats_.boq_flushed += boq_.size();
    boq_.clear();
    fq_.clear();
    stats_.vr.dropped += vpt_.drain();
    lt_last_id_ = 0;
    mt_starved_ = 0;
  }

  void apply_swap(Cycle now) {
    version_ = *pending_swap_;
    pending_swap_.reset();
    set_mask(version_);
    ++stats_.version_swaps;
    reboot(now);
    recycle_.swap_applied(stats_.mt_committed, now);
  }

  void check_boq_law() {
    ++stats_.boq_law_checks;
    if (stats_.boq_pushed - stats_.boq_popped - stats_.boq_flushed != boq_.size())
      throw BoqLawViolation("BOQ depth law violated");
    if (boq_.size() > opt_.boq_capacity) throw BoqLawViolation("BOQ over capacity");
    if (boq_.empty() && !fq_.empty()) throw BoqLawViolation("footnotes without a BOQ entry");
  }

  std::uint32_t demand(const Pipe& p) const {
    if (opt_.ideal_backend) return opt_.core.decode_width;
    auto free = opt_.core.window > p.rob.size() ? opt_.core.window - static_cast<std::uint32_t>(p.rob.size()) : 0;
    return std::min(opt_.core.decode_width, free);
  }

  std::uint32_t exec_latency(const StaticInstr& si) const {
    switch (si.opcode) {
      case Opcode::MUL: return opt_.core.mul_latency;
      default: return opt_.core.alu_latency;
    }
  }

  // ---------------------------------------------------------------- MT side

  void mt_tick(Cycle now) {
    process_validations(now);
    mt_commit(now);
    auto q = static_cast<std::uint32_t>(mt_.fb.size());
    auto d = demand(mt_);
    std::uint32_t room = static_cast<std::uint32_t>(fb_cap_) + d - q;
    // Ideal backend measures raw supply, so fetch is not throttled by buffer room.
    std::uint32_t limit = opt_.ideal_fetch     ? room
                          : opt_.ideal_backend ? opt_.core.fetch_width
                                               : std::min(opt_.core.fetch_width, room);
    // past HALT there is nothing left to supply
    bool drained = mt_state_.halted && replay_.empty();
    auto s = mt_fetch(now, limit);
    std::uint32_t served = 0;
    while (served < d && !mt_.fb.empty()) {
      mt_dispatch(mt_.fb.front(), now);
      mt_.fb.pop_front();
      ++served;
    }
    ++stats_.fb_occupancy[std::min<std::size_t>(q, stats_.fb_occupancy.size() - 1)];
    ++stats_.demand_hist[d];
    if (!drained) ++stats_.supply_hist[std::min<std::size_t>(s, stats_.supply_hist.size() - 1)];
    stats_.fetch_bubbles += d - served;
  }

  std::uint32_t mt_fetch(Cycle now, std::uint32_t limit) {
    std::uint32_t n = 0;
    bool starved = false;
    while (n < limit) {
      if (!replay_.empty()) {
        DynInst d = std::move(replay_.front());
        replay_.pop_front();
        bool stop = detail::taken_control(d.ev) && !opt_.ideal_fetch;
        mt_.fb.push_back(std::move(d));
        ++n;
        if (stop) break;
        continue;
      }
      if (mt_state_.halted || pending_swap_ || mt_.blocked || now < mt_.fetch_resume) break;
      const StaticInstr& si = prog_.instrs[mt_state_.pc];
      if (si.opcode == Opcode::BR_COND && lt_active_ && boq_.empty()) {
        starved = true;
        break;
      }
      DynInst d;
      d.si = &si;
      d.ev = step(mt_state_, prog_);
      if (si.opcode == Opcode::BR_COND) {
        bool actual = *d.ev.taken;
        bool predicted;
        ++stats_.mt_cond_branches;
        if (lt_active_) {
          predicted = pop_boq(now);
          d.boq_mismatch = predicted != actual;
        } else if (opt_.ideal_fetch) {
          predicted = actual;
        } else {
          predicted = mt_gshare_.predict(si.index, *si.target <= si.index);
          mt_gshare_.update(si.index, actual);
        }
        if (predicted != actual) {
          d.mispredicted = true;
          // an ideal backend resolves the branch as soon as it is fetched
          if (opt_.ideal_backend)
            mt_.fetch_resume = std::max(mt_.fetch_resume, now + opt_.core.mispredict_penalty);
          else
            mt_.blocked = true;
          ++stats_.mt_mispredicts;
        }
        mt_.offset = 0;
        d.offset = 0;
      } else {
        d.offset = ++mt_.offset;
      }
      if (lt_active_ && opt_.features.value_reuse && d.ev.value && si.dst && si.opcode != Opcode::STORE)
        apply_prediction(d);
      if (detail::taken_control(d.ev) && si.opcode != Opcode::RET && !opt_.ideal_fetch) {
        if (!mt_btb_.hit(si.index)) {
          ++stats_.mt_btb_misses;
          mt_btb_.insert(si.index);
          mt_.fetch_resume = std::max(mt_.fetch_resume, now + opt_.core.btb_miss_penalty);
        }
      }
      bool stop = (detail::taken_control(d.ev) && !opt_.ideal_fetch) || si.opcode == Opcode::HALT;
      mt_.fb.push_back(std::move(d));
      ++n;
      if (stop) break;
    }
    if (starved) {
      ++mt_starved_;
      ++stats_.boq_empty_stalls;
    } else if (n > 0) {
      mt_starved_ = 0;
    }
    return n;
  }

  void apply_prediction(DynInst& d) {
    auto p = vpt_.match(d.si->index, d.offset, stats_.vr.dropped);
    if (!p) return;
    if (sif_.deleted(d.si->index)) {
      ++stats_.vr.dropped;
      return;
    }
    d.has_vp = true;
    d.vp_value = p->value;
    if (opt_.inject_vp_error_rate > 0.0 && std::bernoulli_distribution(opt_.inject_vp_error_rate)(rng_)) {
      d.vp_value = *d.ev.value ^ 1;
      ++stats_.vr.injected;
    }
    ++stats_.vr.applied;
    if (opt_.record_trace) stats_.vp_events.push_back({d.ev.seq, d.si->index, false});
  }

  bool pop_boq(Cycle now) {
    auto e = boq_.front();
    boq_.pop_front();
    ++stats_.boq_popped;
    stats_.vr.dropped += vpt_.drain();
    if (e.footnote) {
      while (!fq_.empty() && fq_.front().assoc == e.id) {
        auto f = fq_.front();
        fq_.pop_front();
        switch (f.kind) {
          case detail::FootnoteKind::prefetch_addr:
            mem_.access(f.payload, AccessKind::prefetch, ThreadMode::MT, now);
            break;
          case detail::FootnoteKind::branch_target:
            mt_btb_.insert(f.pc);
            break;
          case detail::FootnoteKind::reuse_value:
            if (!vpt_.push({f.payload, f.pc, f.offset, false})) ++stats_.vr.vpt_overflow;
            break;
        }
      }
    }
    if (!fq_.empty() && fq_.front().assoc <= e.id) throw BoqLawViolation("footnote order broken");
    return e.taken;
  }

  void mt_dispatch(DynInst& d, Cycle now) {
    const StaticInstr& si = *d.si;
    if (opt_.features.value_reuse && lt_active_) {
      auto a = scoreboard_.decode(si, d.has_vp);
      if (a == ValidationScoreboard::Action::skip) d.vp_skip = true;
      if (detail::taken_control(d.ev)) scoreboard_.reset();
    }
    d.dispatch = now;
    if (d.vp_skip) {
      d.complete = now + 1;
    } else {
      Cycle ready = now + 1;
      for (Reg r : si.srcs)
        if (r != 0) ready = std::max(ready, mt_.reg_ready[r]);
      if (opt_.ideal_backend) {
        d.complete = now;
      } else {
        Cycle issue = mt_.slots.reserve(ready);
        d.complete = issue + mt_issue(d, issue);
      }
    }
    if (d.has_vp) {
      d.value = d.vp_value;
      d.dst_ready = now + 1;
      if (d.vp_skip) {
        ++stats_.vr.skipped;
      } else {
        validations_.push({d.complete, d.ev.seq});
      }
    } else {
      d.value = d.ev.value.value_or(0);
      d.dst_ready = d.complete;
    }
    if (si.dst && *si.dst != 0) mt_.reg_ready[*si.dst] = d.dst_ready;
    if (d.mispredicted) {
      if (!opt_.ideal_backend) {
        mt_.blocked = false;
        mt_.fetch_resume = std::max(mt_.fetch_resume, d.complete + opt_.core.mispredict_penalty);
      }
      if (d.boq_mismatch && rebooted_seq_ != d.ev.seq) {
        reboot_at_ = d.complete;
        reboot_seq_ = d.ev.seq;
      }
    }
    mt_.rob.push_back(std::move(d));
  }

  // Memory side of an MT instruction issuing at `issue`; returns its latency.
  std::uint32_t mt_issue(DynInst& d, Cycle issue) {
    const StaticInstr& si = *d.si;
    if (si.opcode == Opcode::LOAD || si.opcode == Opcode::STORE) {
      auto kind = si.opcode == Opcode::LOAD ? AccessKind::load : AccessKind::store;
      Addr a = *d.ev.eff_addr;
      bool steady = false;
      bool sbit = opt_.features.t1 && skel_ && skel_->s_bits[si.index];
      if (sbit)
        if (auto* e = t1_.find(si.index)) steady = e->state == T1State::STEADY;
      auto r = mem_.access(a, kind, ThreadMode::MT, issue);
      bool hit = r.hit_level == Level::L1 && !r.merged;
      if (opt_.collect_pc_stats) {
        auto& ps = stats_.pc_stats[si.index];
        ++ps.mem_accesses;
        ps.l1_misses += !hit;
        ps.l2_misses += r.hit_level == Level::L3 || r.hit_level == Level::DRAM;
      }
      if (sbit) {
        if (steady) {
          ++stats_.t1_steady_accesses;
          stats_.t1_steady_l1_hits += hit;
        }
        auto& est = lat_est_[si.index];
        if (!hit) est = est == 0.0 ? r.latency : opt_.t1.latency_smoothing * r.latency + (1.0 - opt_.t1.latency_smoothing) * est;
        double lat = est == 0.0 ? mem_.config().cold_latency() : est;
        // T1 sees instances in program order, at dispatch.
        for (Addr p : t1_.observe(si.index, a, d.dispatch, lat, loops_.current()))
          if (p >= 0) mem_.access(p, AccessKind::prefetch, ThreadMode::MT, d.dispatch);
      }
      return si.opcode == Opcode::LOAD ? r.latency : opt_.core.alu_latency;
    }
    return exec_latency(si);
  }

  void process_validations(Cycle now) {
    while (!validations_.empty() && validations_.top().first <= now) {
      auto [when, seq] = validations_.top();
      validations_.pop();
      if (mt_.rob.empty()) continue;
      auto first = mt_.rob.front().ev.seq;
      if (seq < first || seq - first >= mt_.rob.size()) continue;
      auto idx = static_cast<std::size_t>(seq - first);
      auto& d = mt_.rob[idx];
      if (!d.has_vp || d.vp_skip || d.vp_checked || d.complete != when) continue;
      d.vp_checked = true;
      Word actual = *d.ev.value;
      if (d.vp_value == actual) {
        ++stats_.vr.confirmed;
        d.value = actual;
        continue;
      }
      ++stats_.vr.mispredicted;
      delete_from_sif(d.si->index, d.ev.seq);
      d.value = actual;
      d.dst_ready = d.complete;
      replay_from(idx + 1, now);
    }
  }

  void delete_from_sif(std::uint32_t pc, std::uint64_t seq) {
    if (!sif_.deleted(pc)) ++stats_.vr.sif_deletions;
    if (opt_.record_trace) stats_.vp_events.push_back({seq, pc, true});
    sif_.remove(pc);
  }

  // Squashes ROB entries from `idx` on and the fetch buffer; they re-enter
  // dispatch in order ahead of any new fetch.
  void replay_from(std::size_t idx, Cycle now) {
    ++stats_.vr.replays;
    std::deque<DynInst> moved;
    auto reset = [](DynInst d) {
      d.dispatch = d.complete = d.dst_ready = 0;
      d.vp_skip = false;
      d.vp_checked = false;
      return d;
    };
    for (std::size_t i = idx; i < mt_.rob.size(); ++i) moved.push_back(reset(mt_.rob[i]));
    mt_.rob.erase(mt_.rob.begin() + static_cast<std::ptrdiff_t>(idx), mt_.rob.end());
    for (auto& d : mt_.fb) moved.push_back(reset(d));
    mt_.fb.clear();
    for (auto& d : replay_) moved.push_back(std::move(d));
    replay_ = std::move(moved);
    mt_.reg_ready.fill(0);
    for (auto& d : mt_.rob)
      if (d.si->dst && *d.si->dst != 0) mt_.reg_ready[*d.si->dst] = d.dst_ready;
    scoreboard_.reset();
    for (auto& d : replay_)
      if (d.mispredicted) mt_.blocked = true;
    mt_.fetch_resume = std::max(mt_.fetch_resume, now + opt_.core.replay_penalty);
  }

  void mt_commit(Cycle now) {
    for (std::uint32_t k = 0; k < opt_.core.commit_width && !mt_.rob.empty(); ++k) {
      auto& h = mt_.rob.front();
      if (h.complete > now) break;
      if (h.has_vp && !h.vp_skip && !h.vp_checked) break;
      if (h.ev.value && h.value != *h.ev.value) {
        // A skipped prediction turned out wrong: squash from here.
        ++stats_.vr.skip_violations;
        delete_from_sif(h.si->index, h.ev.seq);
        h.has_vp = false;
        replay_from(0, now);
        break;
      }
      commit_one(h, now);
      mt_.rob.pop_front();
      if (mt_done_ || stats_.mt_committed >= opt_.limit) break;
    }
  }

  void commit_one(const DynInst& h, Cycle now) {
    const StaticInstr& si = *h.si;
    ++stats_.mt_committed;
    if (opt_.record_trace) {
      TraceEvent ev = h.ev;
      if (ev.value) ev.value = h.value;
      stats_.mt_trace.push_back(ev);
    }
    if (opt_.collect_pc_stats) {
      auto& ps = stats_.pc_stats[si.index];
      ++ps.exec_count;
      ps.latency_sum += static_cast<double>(h.complete - h.dispatch);
      if (h.ev.taken && *h.ev.taken) {
        ++ps.taken;
        if (*h.ev.target_pc <= si.index) ++ps.backward_taken;
      }
      if (h.ev.eff_addr && si.opcode == Opcode::LOAD) {
        if (ps.have_addr) ++ps.strides[*h.ev.eff_addr - ps.last_addr];
        ps.have_addr = true;
        ps.last_addr = *h.ev.eff_addr;
      }
      for (Reg r : si.srcs)
        if (r != 0 && last_writer_[r] >= 0) stats_.pc_stats[static_cast<std::size_t>(last_writer_[r])].consumers.insert(si.index);
      if (si.dst && *si.dst != 0) last_writer_[*si.dst] = si.index;
    }
    if (opt_.features.value_reuse && si.dst && si.opcode != Opcode::STORE)
      trainer_.observe(si.index, h.complete - h.dispatch);
    for (const auto& ev : loops_.on_commit(h.ev)) {
      switch (ev.kind) {
        case LoopEventKind::enter: trainer_.loop_start(); break;
        case LoopEventKind::iterate: trainer_.loop_iterate(); break;
        case LoopEventKind::exit: t1_.loop_end(ev.loop_pc); break;
      }
      if (skel_)
        if (auto v = recycle_.on_event(ev, stats_.mt_committed, now)) pending_swap_ = v;
    }
    if (si.opcode == Opcode::HALT) mt_done_ = true;
  }

  // ---------------------------------------------------------------- LT side

  void lt_tick(Cycle now) {
    lt_commit(now);
    auto q = static_cast<std::uint32_t>(lt_.fb.size());
    auto d = demand(lt_);
    std::uint32_t room = static_cast<std::uint32_t>(fb_cap_) + d - q;
    lt_fetch(now, std::min(opt_.core.fetch_width, room));
    std::uint32_t served = 0;
    while (served < d && !lt_.fb.empty()) {
      lt_dispatch(lt_.fb.front(), now);
      lt_.fb.pop_front();
      ++served;
    }
  }

  void lt_fetch(Cycle now, std::uint32_t limit) {
    if (lt_state_.halted || lt_.blocked || now < lt_.fetch_resume) return;
    std::uint32_t n = 0;
    for (std::uint32_t scanned = 0; n < limit && scanned < opt_.core.lt_scan_width && !lt_state_.halted; ++scanned) {
      auto pc = lt_state_.pc;
      if (pc >= prog_.size()) {
        lt_fault();
        return;
      }
      const StaticInstr& si = prog_.instrs[pc];
      if (!mask_->contains(pc) && si.opcode != Opcode::HALT) {
        ++lt_state_.pc;
        ++lt_.offset;
        continue;
      }
      DynInst d;
      d.si = &si;
      auto conv = mask_->converted_branches.find(pc);
      if (conv != mask_->converted_branches.end()) {
        d.ev.seq = lt_state_.seq++;
        d.ev.pc = pc;
        d.ev.opcode = Opcode::BR_COND;
        d.ev.taken = conv->second;
        d.ev.target_pc = *si.target;
        lt_state_.pc = conv->second ? *si.target : pc + 1;
      } else {
        try {
          d.ev = step(lt_state_, prog_);
        } catch (const ExecError&) {
          lt_fault();
          return;
        }
      }
      ++stats_.lt_dynamic_instructions;
      if (si.opcode == Opcode::BR_COND) {
        lt_.offset = 0;
        d.offset = 0;
        if (conv == mask_->converted_branches.end()) {
          bool actual = *d.ev.taken;
          bool pred = lt_gshare_.predict(pc, *si.target <= pc);
          lt_gshare_.update(pc, actual);
          if (pred != actual) {
            d.mispredicted = true;
            lt_.blocked = true;
            ++stats_.lt_mispredicts;
          }
        }
      } else {
        d.offset = ++lt_.offset;
      }
      bool taken = detail::taken_control(d.ev);
      if (taken && si.opcode != Opcode::RET && !lt_btb_.hit(pc)) {
        lt_btb_.insert(pc);
        d.btb_miss = true;
        lt_.fetch_resume = now + opt_.core.btb_miss_penalty;
      }
      lt_.fb.push_back(std::move(d));
      ++n;
      if (taken || si.opcode == Opcode::HALT || lt_.blocked) break;
    }
  }

  void lt_fault() {
    ++stats_.lt_faults;
    lt_state_.halted = true;
  }

  void lt_dispatch(DynInst& d, Cycle now) {
    const StaticInstr& si = *d.si;
    d.dispatch = now;
    Cycle ready = now + 1;
    bool converted = mask_->converted_branches.count(si.index) != 0;
    if (!converted)
      for (Reg r : si.srcs)
        if (r != 0) ready = std::max(ready, lt_.reg_ready[r]);
    Cycle issue = lt_.slots.reserve(ready);
    std::uint32_t lat = exec_latency(si);
    if (si.opcode == Opcode::LOAD || si.opcode == Opcode::STORE) {
      auto kind = si.opcode == Opcode::LOAD ? AccessKind::load : AccessKind::store;
      auto r = mem_.access(*d.ev.eff_addr, kind, ThreadMode::LT, issue);
      d.l1_miss = !(r.hit_level == Level::L1 && !r.merged);
      if (si.opcode == Opcode::LOAD) lat = r.latency;
    }
    d.complete = issue + lat;
    if (si.dst && *si.dst != 0) lt_.reg_ready[*si.dst] = d.complete;
    if (d.mispredicted) {
      lt_.blocked = false;
      lt_.fetch_resume = std::max(lt_.fetch_resume, d.complete + opt_.core.mispredict_penalty);
    }
    lt_.rob.push_back(std::move(d));
  }

  void lt_commit(Cycle now) {
    for (std::uint32_t k = 0; k < opt_.core.commit_width && !lt_.rob.empty(); ++k) {
      auto& h = lt_.rob.front();
      if (h.complete > now) break;
      const StaticInstr& si = *h.si;
      bool is_branch = si.opcode == Opcode::BR_COND;
      std::vector<detail::FqEntry> notes;
      if (si.opcode == Opcode::LOAD && h.l1_miss)
        notes.push_back({detail::FootnoteKind::prefetch_addr, *h.ev.eff_addr, si.index, h.offset, 0});
      if (opt_.features.value_reuse && h.ev.value && si.dst && si.opcode != Opcode::STORE && sif_.query(si.index))
        notes.push_back({detail::FootnoteKind::reuse_value, *h.ev.value, si.index, h.offset, 0});
      if (h.btb_miss) notes.push_back({detail::FootnoteKind::branch_target, *h.ev.target_pc, si.index, h.offset, 0});
      if (is_branch && boq_.size() >= opt_.boq_capacity) {
        ++stats_.boq_full_stalls;
        break;
      }
      if (fq_.size() + notes.size() > opt_.fq_capacity) {
        ++stats_.fq_full_stalls;
        break;
      }
      if (is_branch) {
        boq_.push_back({*h.ev.taken, false, ++boq_ids_});
        lt_last_id_ = boq_ids_;
        ++stats_.boq_pushed;
      }
      bool attach = !boq_.empty() && boq_.back().id == lt_last_id_;
      for (auto& f : notes) {
        bool prefetch = f.kind == detail::FootnoteKind::prefetch_addr;
        if (prefetch) ++stats_.footnotes_prefetch;
        if (f.kind == detail::FootnoteKind::branch_target) ++stats_.footnotes_branch;
        if (f.kind == detail::FootnoteKind::reuse_value) ++stats_.vr.footnotes;
        if (prefetch && !opt_.release_prefetch_on_dequeue) {
          mem_.access(f.payload, AccessKind::prefetch, ThreadMode::MT, now);
          continue;
        }
        if (attach) {
          f.assoc = lt_last_id_;
          boq_.back().footnote = true;
          fq_.push_back(f);
        } else if (prefetch) {
          mem_.access(f.payload, AccessKind::prefetch, ThreadMode::MT, now);
        } else if (f.kind == detail::FootnoteKind::reuse_value) {
          ++stats_.vr.unattached;
        }
      }
      ++stats_.lt_committed;
      lt_.rob.pop_front();
    }
  }

  RunStats finish(Cycle now) {
    RunStats s = std::move(stats_);
    s.cycles = now;
    s.halted = mt_done_;
    s.dla = skel_ != nullptr;
    s.initial_version = skel_ ? initial_version() : 0;
    s.ipc = now ? static_cast<double>(s.mt_committed) / static_cast<double>(now) : 0.0;
    s.t1 = t1_.stats();
    if (opt_.t1_debug) s.t1_log = t1_.debug_log();
    for (int m = 0; m < 2; ++m) {
      s.l1[m] = mem_.l1_stats(static_cast<ThreadMode>(m));
      s.l2[m] = mem_.l2_stats(static_cast<ThreadMode>(m));
    }
    s.l3 = mem_.l3_stats();
    s.dram = mem_.dram_stats();
    s.recycle_timeline = recycle_.timeline();
    s.recycle_units = recycle_.measurements();
    s.recycle_selections = recycle_.selections();
    s.lct_hits = recycle_.lct_hits();
    s.lct_misses = recycle_.lct_misses();
    return s;
  }

  const StaticProgram& prog_;
  EngineOptions opt_;
  const SkeletonSet* skel_;
  const SkeletonMask* mask_ = nullptr;
  int version_ = 0;
  bool lt_active_ = false;
  std::size_t fb_cap_ = 4;

  MemorySystem mem_;
  ArchState mt_state_;
  BasicArchState<OverlayMemory> lt_state_;
  Pipe mt_;
  Pipe lt_;
  Gshare mt_gshare_;
  Gshare lt_gshare_;
  Btb mt_btb_;
  Btb lt_btb_;
  std::deque<DynInst> replay_;

  std::deque<detail::BoqEntry> boq_;
  std::deque<detail::FqEntry> fq_;
  std::uint64_t boq_ids_ = 0;
  std::uint64_t lt_last_id_ = 0;

  T1Table t1_;
  std::vector<double> lat_est_;
  SlowInstructionFilter sif_;
  SifTrainer trainer_;
  ValidationScoreboard scoreboard_;
  ValuePredictionTable vpt_;
  std::priority_queue<std::pair<Cycle, std::uint64_t>, std::vector<std::pair<Cycle, std::uint64_t>>,
                      std::greater<>>
      validations_;
  LoopTracker loops_;
  RecycleController recycle_;
  std::optional<int> pending_swap_;

  std::optional<Cycle> reboot_at_;
  std::uint64_t reboot_seq_ = ~0ull;
  std::uint64_t rebooted_seq_ = ~0ull;
  std::uint64_t mt_starved_ = 0;
  bool mt_done_ = false;
  std::array<std::int64_t, kNumRegs> last_writer_{};
  std::mt19937_64 rng_;
  RunStats stats_;
};

inline RunStats run_baseline(const StaticProgram& prog, const EngineOptions& opt) {
  Engine e(prog, opt, nullptr);
  return e.run();
}

inline RunStats run_dla(const StaticProgram& prog, const SkeletonSet& skel, const EngineOptions& opt) {
  Engine e(prog, opt, &skel);
  return e.run();
}

}  // namespace r3dla
