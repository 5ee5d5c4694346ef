// Value reuse support: the slow-instruction filter, its loop-scoped trainer,
// the decode-stage validation scoreboard and the value prediction table.
#pragma once

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_set>
#include <vector>

#include "r3dla/isa.hpp"

namespace r3dla {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Bloom filter over static pcs plus an exact deletion side-set.
class SlowInstructionFilter {
 public:
  explicit SlowInstructionFilter(std::uint32_t bits = 1024, std::uint32_t hashes = 2)
      : bits_(bits), k_(hashes), words_((bits + 63) / 64, 0) {}

  void insert(std::uint32_t pc) {
    for (std::uint32_t i = 0; i < k_; ++i) set(index(pc, i));
    ++inserted_;
  }
  bool query(std::uint32_t pc) const {
    if (deleted_.count(pc)) return false;
    for (std::uint32_t i = 0; i < k_; ++i)
      if (!get(index(pc, i))) return false;
    return true;
  }
  void remove(std::uint32_t pc) { deleted_.insert(pc); }
  bool deleted(std::uint32_t pc) const { return deleted_.count(pc) != 0; }
  void clear() {
    std::fill(words_.begin(), words_.end(), 0);
    deleted_.clear();
    inserted_ = 0;
  }
  std::uint32_t bits() const { return bits_; }
  std::uint32_t hashes() const { return k_; }
  std::uint64_t inserted() const { return inserted_; }

 private:
  std::uint32_t index(std::uint32_t pc, std::uint32_t i) const {
    auto h1 = splitmix64(pc);
    auto h2 = splitmix64(h1 ^ 0x5851f42d4c957f2dull) | 1;
    return static_cast<std::uint32_t>((h1 + i * h2) % bits_);
  }
  void set(std::uint32_t b) { words_[b / 64] |= 1ull << (b % 64); }
  bool get(std::uint32_t b) const { return (words_[b / 64] >> (b % 64)) & 1; }

  std::uint32_t bits_;
  std::uint32_t k_;
  std::vector<std::uint64_t> words_;
  std::unordered_set<std::uint32_t> deleted_;
  std::uint64_t inserted_ = 0;
};

struct SifTrainingConfig {
  std::uint32_t training_iterations = 8;
  std::uint32_t slow_latency = 20;  // dispatch-to-execute cycles
};

// Clears the filter on every new loop and inserts slow instructions seen during
// the first few iterations of it.
class SifTrainer {
 public:
  explicit SifTrainer(SlowInstructionFilter& sif, SifTrainingConfig cfg = {}) : sif_(sif), cfg_(cfg) {}

  void loop_start() {
    sif_.clear();
    iterations_ = 0;
    training_ = true;
  }
  void loop_iterate() {
    if (++iterations_ >= cfg_.training_iterations) training_ = false;
  }
  void observe(std::uint32_t pc, Cycle dispatch_to_execute) {
    if (training_ && dispatch_to_execute >= cfg_.slow_latency && !sif_.query(pc) && !sif_.deleted(pc)) sif_.insert(pc);
  }
  bool training() const { return training_; }

 private:
  SlowInstructionFilter& sif_;
  SifTrainingConfig cfg_;
  std::uint32_t iterations_ = 0;
  bool training_ = false;
};

// Decode-stage scoreboard deciding which predicted instructions may skip
// validation. r0 is a constant and always counts as validated.
class ValidationScoreboard {
 public:
  enum class Action { execute, validate, skip };

  // Classifies one instruction at decode and updates the destination bit.
  Action decode(const StaticInstr& in, bool has_prediction) {
    Action a = Action::execute;
    if (has_prediction) {
      a = Action::validate;
      if (is_alu(in.opcode) && sources_validated(in)) a = Action::skip;
    }
    if (in.dst && *in.dst != 0) {
      bool mark = has_prediction && is_alu(in.opcode);
      validated_[*in.dst] = mark;
    }
    return a;
  }

  bool sources_validated(const StaticInstr& in) const {
    for (Reg r : in.srcs)
      if (r != 0 && !validated_[r]) return false;
    return true;
  }
  bool validated(Reg r) const { return r == 0 || validated_[r]; }
  void reset() { validated_.reset(); }

 private:
  std::bitset<kNumRegs> validated_;
};

struct ValuePrediction {
  Word value = 0;
  std::uint32_t producer_pc = 0;
  std::uint32_t offset_from_branch = 0;
  bool validated = false;
};

// FIFO of predictions released by the current branch's footnotes.
class ValuePredictionTable {
 public:
  explicit ValuePredictionTable(std::size_t capacity = 32) : cap_(capacity) {}

  // Returns false (and drops the prediction) when full.
  bool push(const ValuePrediction& p) {
    if (q_.size() >= cap_) return false;
    q_.push_back(p);
    return true;
  }

  // Looks up the prediction for the instruction at `offset` after the current
  // branch. Entries with smaller offsets can no longer match and are dropped.
  std::optional<ValuePrediction> match(std::uint32_t pc, std::uint32_t offset, std::uint64_t& dropped) {
    while (!q_.empty() && q_.front().offset_from_branch < offset) {
      q_.pop_front();
      ++dropped;
    }
    if (!q_.empty() && q_.front().offset_from_branch == offset) {
      auto p = q_.front();
      q_.pop_front();
      if (p.producer_pc == pc) return p;
      ++dropped;
    }
    return std::nullopt;
  }

  // A new basic block starts: whatever is left pointed past the old one.
  std::size_t drain() {
    auto n = q_.size();
    q_.clear();
    return n;
  }
  std::size_t size() const { return q_.size(); }
  std::size_t capacity() const { return cap_; }

 private:
  std::size_t cap_;
  std::deque<ValuePrediction> q_;
};

}  // namespace r3dla
