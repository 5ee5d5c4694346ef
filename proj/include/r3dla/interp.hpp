// Functional interpreter for the micro-ISA.
#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "r3dla/isa.hpp"

namespace r3dla {

struct TraceEvent {
  std::uint64_t seq = 0;
  std::uint32_t pc = 0;
  Opcode opcode = Opcode::HALT;
  std::optional<Addr> eff_addr;
  std::optional<Word> value;
  std::optional<bool> taken;
  std::optional<std::uint32_t> target_pc;

  bool operator==(const TraceEvent&) const = default;
};

class ExecError : public std::runtime_error {
 public:
  ExecError(std::uint64_t seq, std::uint32_t pc, const std::string& msg)
      : std::runtime_error("seq " + std::to_string(seq) + " pc " + std::to_string(pc) + ": " + msg),
        seq_(seq), pc_(pc) {}
  std::uint64_t seq() const { return seq_; }
  std::uint32_t pc() const { return pc_; }

 private:
  std::uint64_t seq_;
  std::uint32_t pc_;
};

// Sparse word-granular memory; untouched addresses read as 0.
class Memory {
 public:
  Memory() = default;
  explicit Memory(const std::map<Addr, Word>& init) : cells_(init.begin(), init.end()) {}

  Word read(Addr a) const {
    auto it = cells_.find(a);
    return it == cells_.end() ? 0 : it->second;
  }
  void write(Addr a, Word v) { cells_[a] = v; }

  // Image comparison treats explicit zeros like untouched cells.
  bool same_image(const Memory& o) const {
    auto covers = [](const Memory& x, const Memory& y) {
      for (auto& [a, v] : x.cells_)
        if (y.read(a) != v) return false;
      return true;
    };
    return covers(*this, o) && covers(o, *this);
  }
  std::size_t footprint() const { return cells_.size(); }

 private:
  std::unordered_map<Addr, Word> cells_;
};

// Private write buffer layered over a shared image. Writes never reach the base.
class OverlayMemory {
 public:
  explicit OverlayMemory(const Memory* base = nullptr) : base_(base) {}
  Word read(Addr a) const {
    auto it = local_.find(a);
    if (it != local_.end()) return it->second;
    return base_ ? base_->read(a) : 0;
  }
  void write(Addr a, Word v) { local_[a] = v; }
  void discard() { local_.clear(); }
  void rebase(const Memory* base) { base_ = base; }
  std::size_t dirty_words() const { return local_.size(); }

 private:
  const Memory* base_;
  std::unordered_map<Addr, Word> local_;
};

template <class Mem>
struct BasicArchState {
  std::array<Word, kNumRegs> regs{};
  std::uint32_t pc = 0;
  Mem memory;
  std::vector<std::uint32_t> call_stack;
  std::uint64_t seq = 0;
  bool halted = false;
};

using ArchState = BasicArchState<Memory>;

inline ArchState initial_state(const StaticProgram& p) {
  ArchState s;
  s.pc = p.entry;
  s.memory = Memory(p.data);
  return s;
}

inline Word alu_eval(AluFunc f, Word a, Word b) {
  auto ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b);
  switch (f) {
    case AluFunc::add: return static_cast<Word>(ua + ub);
    case AluFunc::sub: return static_cast<Word>(ua - ub);
    case AluFunc::band: return a & b;
    case AluFunc::bor: return a | b;
    case AluFunc::bxor: return a ^ b;
    case AluFunc::sll: return static_cast<Word>(ua << (ub & 63));
    case AluFunc::srl: return static_cast<Word>(ua >> (ub & 63));
    case AluFunc::slt: return a < b ? 1 : 0;
  }
  return 0;
}

inline bool branch_eval(BranchCond c, Word a, Word b) {
  switch (c) {
    case BranchCond::eq: return a == b;
    case BranchCond::ne: return a != b;
    case BranchCond::lt: return a < b;
    case BranchCond::ge: return a >= b;
  }
  return false;
}

// Executes the instruction at state.pc. r0 reads as zero and ignores writes.
// HALT produces an event and sets state.halted.
template <class Mem>
TraceEvent step(BasicArchState<Mem>& st, const StaticProgram& prog) {
  if (st.halted) throw ExecError(st.seq, st.pc, "step after HALT");
  if (st.pc >= prog.size()) throw ExecError(st.seq, st.pc, "pc out of range");
  const StaticInstr& in = prog.instrs[st.pc];
  TraceEvent ev;
  ev.seq = st.seq;
  ev.pc = st.pc;
  ev.opcode = in.opcode;
  auto rd = [&](Reg r) -> Word { return r == 0 ? 0 : st.regs[r]; };
  auto wr = [&](Word v) {
    if (*in.dst != 0) st.regs[*in.dst] = v;
    ev.value = v;
  };
  std::uint32_t next = st.pc + 1;
  switch (in.opcode) {
    case Opcode::ALU:
      wr(alu_eval(in.func, rd(in.srcs[0]), rd(in.srcs[1])));
      break;
    case Opcode::ALUI:
      wr(alu_eval(in.func, rd(in.srcs[0]), *in.imm));
      break;
    case Opcode::MUL:
      wr(static_cast<Word>(static_cast<std::uint64_t>(rd(in.srcs[0])) * static_cast<std::uint64_t>(rd(in.srcs[1]))));
      break;
    case Opcode::LOAD: {
      Addr a = static_cast<Addr>(static_cast<std::uint64_t>(rd(*in.mem_base)) + static_cast<std::uint64_t>(in.mem_offset));
      if (a < 0) throw ExecError(st.seq, st.pc, "negative address");
      ev.eff_addr = a;
      wr(st.memory.read(a));
      break;
    }
    case Opcode::STORE: {
      Addr a = static_cast<Addr>(static_cast<std::uint64_t>(rd(*in.mem_base)) + static_cast<std::uint64_t>(in.mem_offset));
      if (a < 0) throw ExecError(st.seq, st.pc, "negative address");
      ev.eff_addr = a;
      ev.value = rd(in.srcs[0]);
      st.memory.write(a, *ev.value);
      break;
    }
    case Opcode::BR_COND: {
      bool t = branch_eval(in.cond, rd(in.srcs[0]), rd(in.srcs[1]));
      ev.taken = t;
      ev.target_pc = *in.target;
      if (t) next = *in.target;
      break;
    }
    case Opcode::BR_UNCOND:
      ev.target_pc = *in.target;
      next = *in.target;
      break;
    case Opcode::CALL:
      ev.target_pc = *in.target;
      st.call_stack.push_back(st.pc + 1);
      next = *in.target;
      break;
    case Opcode::RET:
      if (st.call_stack.empty()) throw ExecError(st.seq, st.pc, "RET with empty call stack");
      next = st.call_stack.back();
      st.call_stack.pop_back();
      ev.target_pc = next;
      break;
    case Opcode::HALT:
      st.halted = true;
      next = st.pc;
      break;
  }
  st.pc = next;
  ++st.seq;
  if (!st.halted && st.pc >= prog.size()) throw ExecError(ev.seq, ev.pc, "fell off the end of the program");
  return ev;
}

// Runs from the entry point until HALT or `limit` events.
inline std::vector<TraceEvent> run_trace(const StaticProgram& prog, std::uint64_t limit) {
  if (limit == 0) throw std::invalid_argument("limit must be > 0");
  auto st = initial_state(prog);
  std::vector<TraceEvent> out;
  while (!st.halted && out.size() < limit) out.push_back(step(st, prog));
  return out;
}

}  // namespace r3dla
