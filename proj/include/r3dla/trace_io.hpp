// JSON-lines trace files: one TraceEvent per line.
#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "r3dla/interp.hpp"

namespace r3dla {

inline nlohmann::json to_json(const TraceEvent& e) {
  nlohmann::json j;
  j["seq"] = e.seq;
  j["pc"] = e.pc;
  j["opcode"] = std::string(opcode_name(e.opcode));
  if (e.eff_addr) j["eff_addr"] = *e.eff_addr;
  if (e.value) j["value"] = *e.value;
  if (e.taken) j["taken"] = *e.taken;
  if (e.target_pc) j["target_pc"] = *e.target_pc;
  return j;
}

inline TraceEvent trace_event_from_json(const nlohmann::json& j) {
  TraceEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.pc = j.at("pc").get<std::uint32_t>();
  auto op = opcode_from_name(j.at("opcode").get<std::string>());
  if (!op) throw std::runtime_error("unknown opcode in trace: " + j.at("opcode").get<std::string>());
  e.opcode = *op;
  if (j.contains("eff_addr")) e.eff_addr = j["eff_addr"].get<Addr>();
  if (j.contains("value")) e.value = j["value"].get<Word>();
  if (j.contains("taken")) e.taken = j["taken"].get<bool>();
  if (j.contains("target_pc")) e.target_pc = j["target_pc"].get<std::uint32_t>();
  return e;
}

inline void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace) {
  for (const auto& e : trace) os << to_json(e).dump() << '\n';
}

inline std::vector<TraceEvent> read_trace(std::istream& is) {
  std::vector<TraceEvent> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(trace_event_from_json(nlohmann::json::parse(line)));
  return out;
}

}  // namespace r3dla
