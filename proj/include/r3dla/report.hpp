// JSON form of RunStats.
#pragma once

#include <json.hpp>

#include "r3dla/engine.hpp"

namespace r3dla {

inline nlohmann::json level_json(const LevelStats& s) {
  return {{"accesses", s.accesses},
          {"hits", s.hits},
          {"misses", s.misses},
          {"merges", s.merges},
          {"prefetch_issued", s.prefetch_issued},
          {"prefetch_useful", s.prefetch_useful},
          {"prefetch_late", s.prefetch_late},
          {"evictions", s.evictions},
          {"writebacks", s.writebacks},
          {"discarded_dirty", s.discarded_dirty}};
}

inline double per_kilo(std::uint64_t n, std::uint64_t instrs) {
  return instrs ? 1000.0 * static_cast<double>(n) / static_cast<double>(instrs) : 0.0;
}

inline nlohmann::json stats_to_json(const RunStats& s) {
  nlohmann::json j;
  j["cycles"] = s.cycles;
  j["committed"] = {{"mt", s.mt_committed}, {"lt", s.lt_committed}};
  j["ipc"] = s.ipc;
  j["halted"] = s.halted;
  j["dla"] = s.dla;
  j["initial_version"] = s.initial_version;
  j["lt_dynamic_instructions"] = s.lt_dynamic_instructions;

  j["reboots"] = {{"total", s.reboots},
                  {"mismatch", s.reboots_mismatch},
                  {"stuck", s.reboots_stuck},
                  {"per_10k", s.mt_committed ? 1e4 * static_cast<double>(s.reboots) / static_cast<double>(s.mt_committed) : 0.0},
                  {"version_swaps", s.version_swaps},
                  {"lt_faults", s.lt_faults}};
  j["branches"] = {{"mt_conditional", s.mt_cond_branches},
                   {"mt_mispredicts", s.mt_mispredicts},
                   {"lt_mispredicts", s.lt_mispredicts},
                   {"mt_btb_misses", s.mt_btb_misses}};
  j["boq"] = {{"pushed", s.boq_pushed},
              {"popped", s.boq_popped},
              {"flushed", s.boq_flushed},
              {"law_checks", s.boq_law_checks},
              {"empty_stalls", s.boq_empty_stalls},
              {"full_stalls", s.boq_full_stalls},
              {"fq_full_stalls", s.fq_full_stalls},
              {"occupancy", s.boq_occupancy}};
  j["footnotes"] = {{"prefetch", s.footnotes_prefetch}, {"branch_target", s.footnotes_branch}, {"reuse_value", s.vr.footnotes}};
  j["fetch"] = {{"bubbles", s.fetch_bubbles},
                {"fb_occupancy", s.fb_occupancy},
                {"demand_hist", s.demand_hist},
                {"supply_hist", s.supply_hist}};
  j["value_reuse"] = {{"footnotes", s.vr.footnotes},   {"unattached", s.vr.unattached},
                      {"vpt_overflow", s.vr.vpt_overflow}, {"dropped", s.vr.dropped},
                      {"applied", s.vr.applied},       {"skipped", s.vr.skipped},
                      {"confirmed", s.vr.confirmed},   {"mispredicted", s.vr.mispredicted},
                      {"skip_violations", s.vr.skip_violations}, {"injected", s.vr.injected},
                      {"replays", s.vr.replays},       {"sif_deletions", s.vr.sif_deletions}};
  j["t1"] = {{"observations", s.t1.observations},
             {"prefetches", s.t1.prefetches},
             {"allocations", s.t1.allocations},
             {"evictions", s.t1.evictions},
             {"stride_resets", s.t1.stride_resets},
             {"loop_clears", s.t1.loop_clears},
             {"distance_raises", s.t1.distance_raises},
             {"steady_accesses", s.t1_steady_accesses},
             {"steady_l1_hits", s.t1_steady_l1_hits}};
  j["memory"] = {{"mt", {{"l1", level_json(s.l1[0])}, {"l2", level_json(s.l2[0])}}},
                 {"lt", {{"l1", level_json(s.l1[1])}, {"l2", level_json(s.l2[1])}}},
                 {"l3", level_json(s.l3)},
                 {"dram", {{"reads", s.dram.reads}, {"writebacks", s.dram.writebacks}, {"traffic_lines", s.dram.traffic_lines}}},
                 {"mt_l1_mpki", per_kilo(s.l1[0].misses, s.mt_committed)},
                 {"mt_l2_mpki", per_kilo(s.l2[0].misses, s.mt_committed)}};
  nlohmann::json rc;
  rc["lct_hits"] = s.lct_hits;
  rc["lct_misses"] = s.lct_misses;
  rc["units"] = nlohmann::json::array();
  for (const auto& u : s.recycle_units)
    rc["units"].push_back({{"loop_pc", u.loop_pc}, {"version", u.version}, {"instructions", u.instructions}, {"cycles", u.cycles}});
  rc["selections"] = nlohmann::json::array();
  for (const auto& sel : s.recycle_selections)
    rc["selections"].push_back({{"loop_pc", sel.loop_pc}, {"version", sel.version}, {"ipc_by_version", sel.ipc_by_version}});
  rc["timeline"] = nlohmann::json::array();
  for (const auto& t : s.recycle_timeline)
    rc["timeline"].push_back(
        {{"instructions", t.instructions}, {"cycle", t.cycle}, {"loop_pc", t.loop_pc}, {"version", t.version}, {"reason", t.reason}});
  j["recycle"] = rc;
  return j;
}

}  // namespace r3dla
