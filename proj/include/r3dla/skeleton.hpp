// Skeleton construction: seed selection from profile statistics, backward
// dependence closure, the six skeleton versions and the sidecar mask file.
#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "r3dla/isa.hpp"

namespace r3dla {

struct InstrProfile {
  std::uint64_t exec_count = 0;
  double l1_miss_rate = 0.0;
  double l2_miss_rate = 0.0;
  double mean_latency = 0.0;  // dispatch to execute, cycles
  double branch_bias = 0.0;   // taken fraction
  bool is_loop_branch = false;
  bool strided = false;
  std::int64_t stride = 0;
  std::uint32_t consumers = 0;  // distinct static readers of the produced value
};

struct ProfileStats {
  std::vector<InstrProfile> instrs;
  std::uint64_t instructions = 0;
  bool complete = true;  // training run reached HALT
};

struct SeedOptions {
  double l1_miss_threshold = 0.01;
  double l2_miss_threshold = 0.001;
  double slow_latency = 20.0;
  std::uint32_t min_consumers = 2;
  double bias_threshold = 0.999;
  std::uint32_t store_window = 1000;
};

struct SeedVector {
  std::set<std::uint32_t> control;
  std::set<std::uint32_t> l2_targets;
  std::set<std::uint32_t> l1_targets;
  std::set<std::uint32_t> value_reuse_targets;
  std::set<std::uint32_t> t1_targets;
  std::map<std::uint32_t, bool> biased_branch_conversions;  // index -> forced direction
};

struct SkeletonMask {
  int version_id = 0;
  std::vector<bool> bits;
  std::map<std::uint32_t, bool> converted_branches;

  bool contains(std::uint32_t i) const { return i < bits.size() && bits[i]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true)); }
  bool empty() const { return count() == 0; }
  std::set<std::uint32_t> members() const {
    std::set<std::uint32_t> s;
    for (std::uint32_t i = 0; i < bits.size(); ++i)
      if (bits[i]) s.insert(i);
    return s;
  }
  bool subset_of(const SkeletonMask& o) const {
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i] && !o.contains(static_cast<std::uint32_t>(i))) return false;
    return true;
  }
  bool operator==(const SkeletonMask&) const = default;
};

inline constexpr int kSkeletonVersions = 6;

struct SkeletonSet {
  std::vector<SkeletonMask> versions;
  std::vector<bool> s_bits;
  std::uint64_t program_hash = 0;

  const SkeletonMask& version(int v) const { return versions.at(static_cast<std::size_t>(v)); }
};

// Reaching definitions over the static CFG, used to find the producers of
// each register source.
class ReachingDefs {
 public:
  explicit ReachingDefs(const StaticProgram& p) : n_(p.size()), words_((n_ + 63) / 64) {
    for (auto& m : defs_of_) m.assign(words_, 0);
    for (const auto& in : p.instrs)
      if (in.dst && *in.dst != 0) set(defs_of_[*in.dst], in.index);

    auto sites = return_sites(p);
    std::vector<std::vector<std::uint32_t>> preds(n_);
    for (std::uint32_t i = 0; i < n_; ++i)
      for (auto s : successors(p, i, sites)) preds[s].push_back(i);

    in_.assign(n_, std::vector<std::uint64_t>(words_, 0));
    std::vector<std::vector<std::uint64_t>> out(n_, std::vector<std::uint64_t>(words_, 0));
    std::deque<std::uint32_t> work;
    std::vector<bool> queued(n_, true);
    for (std::uint32_t i = 0; i < n_; ++i) work.push_back(i);
    while (!work.empty()) {
      auto i = work.front();
      work.pop_front();
      queued[i] = false;
      auto& cur_in = in_[i];
      for (auto pr : preds[i])
        for (std::size_t w = 0; w < words_; ++w) cur_in[w] |= out[pr][w];
      std::vector<std::uint64_t> next = cur_in;
      const auto& ins = p.instrs[i];
      if (ins.dst && *ins.dst != 0) {
        const auto& kill = defs_of_[*ins.dst];
        for (std::size_t w = 0; w < words_; ++w) next[w] &= ~kill[w];
        set(next, i);
      }
      if (next != out[i]) {
        out[i] = std::move(next);
        for (auto s : successors(p, i, sites))
          if (!queued[s]) {
            queued[s] = true;
            work.push_back(s);
          }
      }
    }
  }

  std::vector<std::uint32_t> producers(std::uint32_t i, Reg r) const {
    std::vector<std::uint32_t> out;
    if (r == 0) return out;
    for (std::size_t w = 0; w < words_; ++w) {
      auto bits = in_[i][w] & defs_of_[r][w];
      while (bits) {
        auto b = static_cast<std::uint32_t>(std::countr_zero(bits));
        out.push_back(static_cast<std::uint32_t>(w * 64 + b));
        bits &= bits - 1;
      }
    }
    return out;
  }

 private:
  static void set(std::vector<std::uint64_t>& v, std::uint32_t i) { v[i / 64] |= 1ull << (i % 64); }

  std::size_t n_;
  std::size_t words_;
  std::array<std::vector<std::uint64_t>, kNumRegs> defs_of_;
  std::vector<std::vector<std::uint64_t>> in_;
};

// Stores that may feed `load`: same base register and offset, at most `window`
// static instructions before it.
inline std::vector<std::uint32_t> feeding_stores(const StaticProgram& p, std::uint32_t load, std::uint32_t window) {
  std::vector<std::uint32_t> out;
  const auto& ld = p.instrs[load];
  std::uint32_t lo = load > window ? load - window : 0;
  for (std::uint32_t s = lo; s < load; ++s) {
    const auto& st = p.instrs[s];
    if (st.opcode == Opcode::STORE && st.mem_base == ld.mem_base && st.mem_offset == ld.mem_offset) out.push_back(s);
  }
  return out;
}

// Least mask containing `seeds` that is closed under register producers and
// store-to-load feeding. Converted branches are kept but their sources are not
// followed. Instructions in `excluded` are never added (offloaded loads).
inline SkeletonMask backward_closure(const StaticProgram& p, const ReachingDefs& rd, const std::set<std::uint32_t>& seeds,
                                     const std::map<std::uint32_t, bool>& converted = {},
                                     std::uint32_t store_window = 1000, const std::set<std::uint32_t>& excluded = {}) {
  SkeletonMask m;
  m.bits.assign(p.size(), false);
  m.converted_branches = converted;
  std::vector<std::uint32_t> work;
  auto add = [&](std::uint32_t i) {
    if (!m.bits[i] && !excluded.count(i)) {
      m.bits[i] = true;
      work.push_back(i);
    }
  };
  for (auto s : seeds) add(s);
  for (auto& [b, dir] : converted) add(b);
  while (!work.empty()) {
    auto i = work.back();
    work.pop_back();
    if (converted.count(i)) continue;
    const auto& in = p.instrs[i];
    for (Reg r : in.srcs)
      for (auto d : rd.producers(i, r)) add(d);
    if (in.opcode == Opcode::LOAD)
      for (auto s : feeding_stores(p, i, store_window)) add(s);
  }
  return m;
}

inline SkeletonMask backward_closure(const StaticProgram& p, const std::set<std::uint32_t>& seeds,
                                     const std::map<std::uint32_t, bool>& converted = {},
                                     std::uint32_t store_window = 1000, const std::set<std::uint32_t>& excluded = {}) {
  ReachingDefs rd(p);
  return backward_closure(p, rd, seeds, converted, store_window, excluded);
}

inline SeedVector select_seeds(const StaticProgram& p, const ProfileStats& prof, const SeedOptions& opt = {}) {
  SeedVector sv;
  for (const auto& in : p.instrs) {
    auto i = in.index;
    const InstrProfile* ip = i < prof.instrs.size() ? &prof.instrs[i] : nullptr;
    if (is_control(in.opcode)) sv.control.insert(i);
    if (!ip || ip->exec_count == 0) continue;
    if (is_mem(in.opcode)) {
      if (ip->l1_miss_rate > opt.l1_miss_threshold) sv.l1_targets.insert(i);
      if (ip->l2_miss_rate > opt.l2_miss_threshold) sv.l2_targets.insert(i);
      if (ip->strided) sv.t1_targets.insert(i);
    }
    if (in.dst && ip->mean_latency > opt.slow_latency && ip->consumers >= opt.min_consumers)
      sv.value_reuse_targets.insert(i);
    if (in.opcode == Opcode::BR_COND) {
      double b = ip->branch_bias;
      if (b >= opt.bias_threshold)
        sv.biased_branch_conversions[i] = true;
      else if (1.0 - b >= opt.bias_threshold)
        sv.biased_branch_conversions[i] = false;
    }
  }
  return sv;
}

// Seed set and converted branches for each of the six fixed recipes:
//   v0 control + L1 + L2        v1 control + (L2 - L1)     v2 v0 + value-reuse
//   v3 v0 + T1 targets          v4 v0 with biased branches converted
//   v5 control + L2
// S-bit instructions are kept out of every recipe except v3, including when the
// closure would otherwise reach them.
inline std::pair<std::set<std::uint32_t>, std::map<std::uint32_t, bool>> version_seeds(const SeedVector& sv, int v) {
  std::set<std::uint32_t> s = sv.control;
  std::map<std::uint32_t, bool> conv;
  auto add = [&](const std::set<std::uint32_t>& x) { s.insert(x.begin(), x.end()); };
  switch (v) {
    case 0: add(sv.l1_targets); add(sv.l2_targets); break;
    case 1:
      for (auto i : sv.l2_targets)
        if (!sv.l1_targets.count(i)) s.insert(i);
      break;
    case 2: add(sv.l1_targets); add(sv.l2_targets); add(sv.value_reuse_targets); break;
    case 3: add(sv.l1_targets); add(sv.l2_targets); add(sv.t1_targets); break;
    case 4:
      add(sv.l1_targets);
      add(sv.l2_targets);
      conv = sv.biased_branch_conversions;
      for (auto& [b, d] : conv) s.erase(b);
      break;
    case 5: add(sv.l2_targets); break;
    default: throw std::out_of_range("skeleton version " + std::to_string(v));
  }
  if (v != 3)
    for (auto i : sv.t1_targets) s.erase(i);
  return {s, conv};
}

inline SkeletonSet gen_skeleton_versions(const StaticProgram& p, const SeedVector& sv,
                                         std::uint32_t store_window = 1000) {
  ReachingDefs rd(p);
  SkeletonSet set;
  set.program_hash = program_hash(p);
  set.s_bits.assign(p.size(), false);
  for (auto i : sv.t1_targets) set.s_bits[i] = true;
  for (int v = 0; v < kSkeletonVersions; ++v) {
    auto [seeds, conv] = version_seeds(sv, v);
    static const std::set<std::uint32_t> none;
    auto m = backward_closure(p, rd, seeds, conv, store_window, v == 3 ? none : sv.t1_targets);
    // HALT terminates the look-ahead thread as well.
    for (const auto& in : p.instrs)
      if (in.opcode == Opcode::HALT) m.bits[in.index] = true;
    m.version_id = v;
    set.versions.push_back(std::move(m));
  }
  return set;
}

inline SkeletonSet gen_skeleton_versions(const StaticProgram& p, const ProfileStats& prof, const SeedOptions& opt = {}) {
  return gen_skeleton_versions(p, select_seeds(p, prof, opt), opt.store_window);
}

// Uniform skeleton (same mask in every version slot), e.g. the whole program.
inline SkeletonSet uniform_skeleton(const StaticProgram& p, const std::vector<bool>& bits) {
  SkeletonSet set;
  set.program_hash = program_hash(p);
  set.s_bits.assign(p.size(), false);
  for (int v = 0; v < kSkeletonVersions; ++v) set.versions.push_back(SkeletonMask{v, bits, {}});
  return set;
}

// Hex bitset: character k carries bits 4k..4k+3, bit 4k in the low position.
inline std::string bits_to_hex(const std::vector<bool>& bits) {
  static const char* digits = "0123456789abcdef";
  std::string s((bits.size() + 3) / 4, '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) {
      auto& c = s[i / 4];
      int v = (c <= '9' ? c - '0' : c - 'a' + 10) | (1 << (i % 4));
      c = digits[v];
    }
  return s;
}

inline std::vector<bool> hex_to_bits(const std::string& hex, std::size_t n) {
  if (hex.size() != (n + 3) / 4) throw std::invalid_argument("bitset length mismatch");
  std::vector<bool> bits(n, false);
  for (std::size_t k = 0; k < hex.size(); ++k) {
    char c = hex[k];
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else throw std::invalid_argument("bad hex digit");
    for (int b = 0; b < 4; ++b)
      if (v & (1 << b)) {
        if (4 * k + b >= n) throw std::invalid_argument("bit beyond program length");
        bits[4 * k + b] = true;
      }
  }
  return bits;
}

inline nlohmann::json skeleton_to_json(const SkeletonSet& s) {
  std::ostringstream h;
  h << std::hex << s.program_hash;
  nlohmann::json j;
  j["program_hash"] = h.str();
  j["num_instrs"] = s.s_bits.size();
  j["s_bits"] = bits_to_hex(s.s_bits);
  j["versions"] = nlohmann::json::array();
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& m : s.versions) {
    nlohmann::json vj;
    vj["id"] = m.version_id;
    vj["mask"] = bits_to_hex(m.bits);
    j["versions"].push_back(vj);
    for (auto& [b, d] : m.converted_branches) conv.push_back({{"version", m.version_id}, {"index", b}, {"taken", d}});
  }
  j["converted_branches"] = conv;
  return j;
}

inline SkeletonSet skeleton_from_json(const nlohmann::json& j) {
  SkeletonSet s;
  s.program_hash = std::stoull(j.at("program_hash").get<std::string>(), nullptr, 16);
  auto n = j.at("num_instrs").get<std::size_t>();
  s.s_bits = hex_to_bits(j.at("s_bits").get<std::string>(), n);
  for (const auto& vj : j.at("versions")) {
    SkeletonMask m;
    m.version_id = vj.at("id").get<int>();
    m.bits = hex_to_bits(vj.at("mask").get<std::string>(), n);
    s.versions.push_back(std::move(m));
  }
  for (const auto& c : j.at("converted_branches")) {
    auto v = c.at("version").get<std::size_t>();
    if (v >= s.versions.size()) throw std::invalid_argument("converted branch for unknown version");
    s.versions[v].converted_branches[c.at("index").get<std::uint32_t>()] = c.at("taken").get<bool>();
  }
  return s;
}

// Checks a skeleton against the program it is about to drive.
inline void check_skeleton(const StaticProgram& p, const SkeletonSet& s) {
  if (s.program_hash != program_hash(p)) throw std::invalid_argument("skeleton was built for a different program");
  if (s.versions.empty()) throw std::invalid_argument("skeleton has no versions");
  for (const auto& m : s.versions) {
    if (m.bits.size() != p.size()) throw std::invalid_argument("skeleton mask length mismatch");
    if (m.empty()) continue;
    for (const auto& in : p.instrs)
      if (is_control(in.opcode) && !m.contains(in.index))
        throw std::invalid_argument("skeleton version " + std::to_string(m.version_id) + " drops control instruction " +
                                    std::to_string(in.index));
    for (auto& [b, d] : m.converted_branches)
      if (b >= p.size() || p.instrs[b].opcode != Opcode::BR_COND)
        throw std::invalid_argument("converted branch is not a conditional branch");
  }
}

}  // namespace r3dla
