// Micro-ISA definitions: opcodes, static instructions and programs.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace r3dla {

using Reg = std::uint8_t;
using Addr = std::int64_t;
using Word = std::int64_t;
using Cycle = std::uint64_t;

inline constexpr int kNumRegs = 64;

enum class Opcode : std::uint8_t { ALUI, ALU, MUL, LOAD, STORE, BR_COND, BR_UNCOND, CALL, RET, HALT };

enum class AluFunc : std::uint8_t { add, sub, band, bor, bxor, sll, srl, slt };

enum class BranchCond : std::uint8_t { eq, ne, lt, ge };

inline std::string_view opcode_name(Opcode op) {
  switch (op) {
    case Opcode::ALUI: return "ALUI";
    case Opcode::ALU: return "ALU";
    case Opcode::MUL: return "MUL";
    case Opcode::LOAD: return "LOAD";
    case Opcode::STORE: return "STORE";
    case Opcode::BR_COND: return "BR_COND";
    case Opcode::BR_UNCOND: return "BR_UNCOND";
    case Opcode::CALL: return "CALL";
    case Opcode::RET: return "RET";
    case Opcode::HALT: return "HALT";
  }
  return "?";
}

inline std::optional<Opcode> opcode_from_name(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Opcode::HALT); ++i) {
    auto op = static_cast<Opcode>(i);
    if (opcode_name(op) == s) return op;
  }
  return std::nullopt;
}

inline bool is_control(Opcode op) {
  return op == Opcode::BR_COND || op == Opcode::BR_UNCOND || op == Opcode::CALL || op == Opcode::RET;
}
inline bool is_mem(Opcode op) { return op == Opcode::LOAD || op == Opcode::STORE; }
inline bool is_alu(Opcode op) { return op == Opcode::ALU || op == Opcode::ALUI || op == Opcode::MUL; }

struct StaticInstr {
  std::uint32_t index = 0;
  Opcode opcode = Opcode::HALT;
  AluFunc func = AluFunc::add;       // ALU / ALUI
  BranchCond cond = BranchCond::eq;  // BR_COND
  std::optional<Reg> dst;
  std::vector<Reg> srcs;             // at most 2; STORE: {value, base}
  std::optional<std::int64_t> imm;
  std::optional<std::uint32_t> target;
  std::optional<Reg> mem_base;
  std::int64_t mem_offset = 0;

  bool operator==(const StaticInstr&) const = default;
};

struct ProgramMeta {
  std::string name;
  std::string params;  // free-form generator description
};

struct StaticProgram {
  std::vector<StaticInstr> instrs;
  std::uint32_t entry = 0;
  std::map<Addr, Word> data;  // initial memory image
  ProgramMeta meta;

  std::size_t size() const { return instrs.size(); }
  const StaticInstr& operator[](std::size_t i) const { return instrs[i]; }

  // Meta is descriptive only and does not take part in equality.
  bool operator==(const StaticProgram& o) const {
    return instrs == o.instrs && entry == o.entry && data == o.data;
  }
};

class ProgramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conservative static successors. RET flows to every call-return site.
inline std::vector<std::uint32_t> successors(const StaticProgram& p, std::uint32_t i,
                                             const std::vector<std::uint32_t>& return_sites) {
  const auto& in = p.instrs[i];
  std::vector<std::uint32_t> out;
  auto push_next = [&] {
    if (i + 1 < p.size()) out.push_back(i + 1);
  };
  switch (in.opcode) {
    case Opcode::BR_COND:
      out.push_back(*in.target);
      push_next();
      break;
    case Opcode::BR_UNCOND:
    case Opcode::CALL:
      out.push_back(*in.target);
      break;
    case Opcode::RET:
      out = return_sites;
      break;
    case Opcode::HALT:
      break;
    default:
      push_next();
  }
  return out;
}

inline std::vector<std::uint32_t> return_sites(const StaticProgram& p) {
  std::vector<std::uint32_t> sites;
  for (const auto& in : p.instrs)
    if (in.opcode == Opcode::CALL && in.index + 1 < p.size()) sites.push_back(in.index + 1);
  return sites;
}

// Throws ProgramError when a structural invariant does not hold.
inline void validate(const StaticProgram& p) {
  if (p.instrs.empty()) throw ProgramError("empty program");
  if (p.entry >= p.size()) throw ProgramError("entry out of range");
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& in = p.instrs[i];
    auto where = "instr " + std::to_string(i) + ": ";
    if (in.index != i) throw ProgramError(where + "index mismatch");
    if (in.srcs.size() > 2) throw ProgramError(where + "more than 2 sources");
    for (Reg r : in.srcs)
      if (r >= kNumRegs) throw ProgramError(where + "register out of range");
    if (in.dst && *in.dst >= kNumRegs) throw ProgramError(where + "register out of range");
    switch (in.opcode) {
      case Opcode::BR_COND:
      case Opcode::BR_UNCOND:
      case Opcode::CALL:
        if (!in.target || *in.target >= p.size()) throw ProgramError(where + "dangling branch target");
        break;
      case Opcode::LOAD:
        if (!in.mem_base || !in.dst) throw ProgramError(where + "LOAD needs dst and base");
        break;
      case Opcode::STORE:
        if (!in.mem_base || in.srcs.size() != 2) throw ProgramError(where + "STORE needs value and base");
        break;
      case Opcode::ALU:
      case Opcode::ALUI:
      case Opcode::MUL:
        if (!in.dst) throw ProgramError(where + "ALU op needs dst");
        break;
      default:
        break;
    }
  }
  auto sites = return_sites(p);
  std::vector<bool> seen(p.size(), false);
  std::vector<std::uint32_t> work{p.entry};
  seen[p.entry] = true;
  int halts = 0;
  while (!work.empty()) {
    auto i = work.back();
    work.pop_back();
    if (p.instrs[i].opcode == Opcode::HALT) ++halts;
    for (auto s : successors(p, i, sites))
      if (!seen[s]) {
        seen[s] = true;
        work.push_back(s);
      }
  }
  if (halts != 1) throw ProgramError("expected exactly one reachable HALT, found " + std::to_string(halts));
}

// FNV-1a over the instruction encoding and data image.
inline std::uint64_t program_hash(const StaticProgram& p) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(p.entry);
  for (const auto& in : p.instrs) {
    mix(static_cast<std::uint64_t>(in.opcode) | (static_cast<std::uint64_t>(in.func) << 8) |
        (static_cast<std::uint64_t>(in.cond) << 16));
    mix(in.dst ? *in.dst : 0xffff);
    for (Reg r : in.srcs) mix(r);
    mix(in.srcs.size());
    mix(in.imm ? static_cast<std::uint64_t>(*in.imm) : 0x5a5a5a5a);
    mix(in.target ? *in.target : 0xffffffffu);
    mix(in.mem_base ? *in.mem_base : 0xffff);
    mix(static_cast<std::uint64_t>(in.mem_offset));
  }
  for (auto [a, v] : p.data) {
    mix(static_cast<std::uint64_t>(a));
    mix(static_cast<std::uint64_t>(v));
  }
  return h;
}

}  // namespace r3dla
