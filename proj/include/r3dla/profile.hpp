// Training run: per-instruction statistics used to pick skeleton seeds.
#pragma once

#include "r3dla/engine.hpp"
#include "r3dla/skeleton.hpp"

namespace r3dla {

// Fraction of address deltas that must agree for a load to count as strided.
inline constexpr double kStrideAgreement = 0.9;

inline ProfileStats profile_from_stats(const StaticProgram& p, const RunStats& rs) {
  ProfileStats out;
  out.instructions = rs.mt_committed;
  out.complete = rs.halted;
  out.instrs.resize(p.size());
  for (std::size_t i = 0; i < p.size() && i < rs.pc_stats.size(); ++i) {
    const auto& ps = rs.pc_stats[i];
    auto& ip = out.instrs[i];
    ip.exec_count = ps.exec_count;
    if (ps.mem_accesses) {
      ip.l1_miss_rate = static_cast<double>(ps.l1_misses) / static_cast<double>(ps.mem_accesses);
      ip.l2_miss_rate = static_cast<double>(ps.l2_misses) / static_cast<double>(ps.mem_accesses);
    }
    if (ps.exec_count) {
      ip.mean_latency = ps.latency_sum / static_cast<double>(ps.exec_count);
      ip.branch_bias = static_cast<double>(ps.taken) / static_cast<double>(ps.exec_count);
    }
    ip.is_loop_branch = ps.backward_taken > 0;
    ip.consumers = static_cast<std::uint32_t>(ps.consumers.size());
    std::uint64_t deltas = 0, best = 0;
    std::int64_t stride = 0;
    for (auto& [d, c] : ps.strides) {
      deltas += c;
      if (c > best) {
        best = c;
        stride = d;
      }
    }
    if (p.instrs[i].opcode == Opcode::LOAD && deltas >= 2 && stride != 0 &&
        static_cast<double>(best) >= kStrideAgreement * static_cast<double>(deltas)) {
      ip.strided = true;
      ip.stride = stride;
    }
  }
  return out;
}

inline ProfileStats profile_program(const StaticProgram& p, EngineOptions opt) {
  opt.collect_pc_stats = true;
  opt.record_trace = false;
  opt.ideal_fetch = false;
  opt.ideal_backend = false;
  return profile_from_stats(p, run_baseline(p, opt));
}

}  // namespace r3dla
