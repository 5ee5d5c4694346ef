// Random program generators and reference implementations shared by tests.
#pragma once

#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "r3dla/assembler.hpp"
#include "r3dla/engine.hpp"
#include "r3dla/skeleton.hpp"

namespace r3dla::testing {

// Arbitrary static program for dataflow tests. Need not terminate.
inline StaticProgram random_static_program(std::uint64_t seed, std::size_t max_size = 200) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const auto n = static_cast<std::uint32_t>(pick(8, static_cast<int>(max_size)));
  const int regs = pick(3, 12);  // small register file: more sharing
  auto reg = [&] { return static_cast<Reg>(pick(0, regs)); };
  StaticProgram p;
  bool has_call = false;
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    StaticInstr in;
    in.index = i;
    int k = pick(0, 99);
    if (k < 30) {
      in.opcode = Opcode::ALU;
      in.dst = reg();
      in.srcs = {reg(), reg()};
    } else if (k < 45) {
      in.opcode = Opcode::ALUI;
      in.dst = reg();
      in.srcs = {reg()};
      in.imm = pick(-8, 8);
    } else if (k < 60) {
      in.opcode = Opcode::LOAD;
      in.mem_base = reg();
      in.srcs = {*in.mem_base};
      in.dst = reg();
      in.mem_offset = 8 * pick(0, 3);
    } else if (k < 72) {
      in.opcode = Opcode::STORE;
      in.mem_base = reg();
      in.srcs = {reg(), *in.mem_base};
      in.mem_offset = 8 * pick(0, 3);
    } else if (k < 87) {
      in.opcode = Opcode::BR_COND;
      in.srcs = {reg(), reg()};
      in.target = static_cast<std::uint32_t>(pick(0, static_cast<int>(n) - 1));
    } else if (k < 91) {
      in.opcode = Opcode::BR_UNCOND;
      in.target = static_cast<std::uint32_t>(pick(0, static_cast<int>(n) - 1));
    } else if (k < 95) {
      in.opcode = Opcode::CALL;
      in.target = static_cast<std::uint32_t>(pick(0, static_cast<int>(n) - 1));
      has_call = true;
    } else if (k < 98 && has_call) {
      in.opcode = Opcode::RET;
    } else {
      in.opcode = Opcode::MUL;
      in.dst = reg();
      in.srcs = {reg(), reg()};
    }
    p.instrs.push_back(in);
  }
  StaticInstr h;
  h.index = n - 1;
  h.opcode = Opcode::HALT;
  p.instrs.push_back(h);
  return p;
}

// Reference reaching definitions: forward search from each definition,
// stopping at instructions that overwrite the same register.
inline std::vector<std::vector<std::set<std::uint32_t>>> reference_producers(const StaticProgram& p) {
  auto sites = return_sites(p);
  std::vector<std::vector<std::set<std::uint32_t>>> out(p.size(), std::vector<std::set<std::uint32_t>>(kNumRegs));
  for (const auto& d : p.instrs) {
    if (!d.dst || *d.dst == 0) continue;
    Reg r = *d.dst;
    std::vector<bool> seen(p.size(), false);
    std::vector<std::uint32_t> stack = successors(p, d.index, sites);
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      if (seen[x]) continue;
      seen[x] = true;
      out[x][r].insert(d.index);
      const auto& in = p.instrs[x];
      if (in.dst && *in.dst == r) continue;
      for (auto s : successors(p, x, sites)) stack.push_back(s);
    }
  }
  return out;
}

// Reference closure: naive fixpoint sweep until nothing changes.
inline std::set<std::uint32_t> reference_closure(const StaticProgram& p, std::set<std::uint32_t> mask,
                                                 std::uint32_t window = 1000) {
  auto prod = reference_producers(p);
  for (bool changed = true; changed;) {
    changed = false;
    auto snapshot = mask;
    for (auto i : snapshot) {
      const auto& in = p.instrs[i];
      std::set<Reg> used(in.srcs.begin(), in.srcs.end());
      for (Reg r : used)
        if (r != 0)
          for (auto d : prod[i][r]) changed |= mask.insert(d).second;
      if (in.opcode == Opcode::LOAD)
        for (std::uint32_t s = 0; s < i; ++s) {
          const auto& st = p.instrs[s];
          if (i - s <= window && st.opcode == Opcode::STORE && st.mem_base == in.mem_base &&
              st.mem_offset == in.mem_offset)
            changed |= mask.insert(s).second;
        }
    }
  }
  return mask;
}

// Terminating program with loops, calls, data-dependent branches and
// indirect memory, for engine fuzzing.
inline StaticProgram fuzz_program(std::uint64_t seed, std::int64_t outer = 100000) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const std::int64_t base = 1 << 20;
  std::ostringstream os;
  for (int k = 0; k < 64; ++k) os << ".data " << base + 8 * k << " " << pick(-50, 200) << "\n";
  os << "  ADDI r1, r0, " << base << "\n  ADDI r2, r0, " << outer << "\n";
  for (int r = 3; r <= 12; ++r) os << "  ADDI r" << r << ", r0, " << pick(-20, 100) << "\n";
  auto dreg = [&] { return "r" + std::to_string(pick(3, 12)); };
  int labels = 0;
  std::vector<std::pair<int, std::string>> pending;  // ops left, label to place
  auto body_op = [&](std::ostream& o) {
    int k = pick(0, 99);
    static const char* alu[] = {"ADD", "SUB", "AND", "OR", "XOR", "SLT", "SRL"};
    if (k < 30) {
      o << "  " << alu[pick(0, 6)] << " " << dreg() << ", " << dreg() << ", " << dreg() << "\n";
    } else if (k < 42) {
      o << "  ADDI " << dreg() << ", " << dreg() << ", " << pick(-9, 9) << "\n";
    } else if (k < 48) {
      o << "  MUL " << dreg() << ", " << dreg() << ", " << dreg() << "\n";
    } else if (k < 60) {
      o << "  LD " << dreg() << ", r1, " << 8 * pick(0, 63) << "\n";
    } else if (k < 70) {
      o << "  ANDI r13, " << dreg() << ", 504\n  ADD r13, r13, r1\n  LD " << dreg() << ", r13, 0\n";
    } else if (k < 78) {
      o << "  ST " << dreg() << ", r1, " << 8 * pick(0, 63) << "\n";
    } else if (k < 84) {
      o << "  ANDI r13, " << dreg() << ", 504\n  ADD r13, r13, r1\n  ST " << dreg() << ", r13, 0\n";
    } else if (k < 92) {
      auto l = "f" + std::to_string(labels++);
      static const char* br[] = {"BEQ", "BNE", "BLT", "BGE"};
      o << "  " << br[pick(0, 3)] << " " << dreg() << ", " << dreg() << ", " << l << "\n";
      pending.push_back({pick(1, 4), l});
    } else if (k < 95) {
      // almost never taken: bias bait
      auto l = "f" + std::to_string(labels++);
      o << "  BEQ r14, r15, " << l << "\n";
      pending.push_back({pick(1, 3), l});
    } else {
      o << "  CALL func\n";
    }
  };
  os << "  ADDI r15, r0, -7\nouter:\n";
  const int len = pick(6, 30);
  for (int i = 0; i < len; ++i) {
    if (pending.empty() && pick(0, 9) == 0) {
      auto l = "inner" + std::to_string(labels++);
      os << "  ADDI r16, r0, " << pick(2, 12) << "\n" << l << ":\n";
      for (int j = pick(2, 6); j > 0; --j) {
        // no forward branches inside the inner loop
        int k = pick(0, 3);
        if (k == 0) os << "  LD " << dreg() << ", r1, " << 8 * pick(0, 63) << "\n";
        else if (k == 1) os << "  ADD " << dreg() << ", " << dreg() << ", " << dreg() << "\n";
        else if (k == 2) os << "  ANDI r13, " << dreg() << ", 504\n  ADD r13, r13, r1\n  LD " << dreg() << ", r13, 0\n";
        else os << "  ADDI " << dreg() << ", " << dreg() << ", 3\n";
      }
      os << "  ADDI r16, r16, -1\n  BNE r16, r0, " << l << "\n";
      continue;
    }
    body_op(os);
    for (auto& [left, l] : pending) --left;
    for (auto it = pending.begin(); it != pending.end();)
      if (it->first <= 0) {
        os << it->second << ":\n";
        it = pending.erase(it);
      } else {
        ++it;
      }
  }
  for (auto& [left, l] : pending) os << l << ":\n";
  os << "  ADDI r14, r14, 1\n  ADDI r2, r2, -1\n  BNE r2, r0, outer\n  ST r3, r0, 8\n  HALT\n";
  os << "func:\n  ADD r12, r12, r3\n  LD r11, r1, " << 8 * pick(0, 63) << "\n  XOR r10, r10, r11\n  RET\n";
  return parse_program(os.str());
}

// Random skeleton with every control instruction present, random other
// members, and some conditional branches forced in a random direction.
inline SkeletonSet random_skeleton(const StaticProgram& p, std::uint64_t seed, double keep = 0.5,
                                   double convert = 0.2) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution member(keep), conv(convert), dir(0.5);
  SkeletonSet s;
  s.program_hash = program_hash(p);
  s.s_bits.assign(p.size(), false);
  for (int v = 0; v < kSkeletonVersions; ++v) {
    SkeletonMask m;
    m.version_id = v;
    m.bits.assign(p.size(), false);
    for (const auto& in : p.instrs) {
      m.bits[in.index] = is_control(in.opcode) || in.opcode == Opcode::HALT || member(rng);
      if (in.opcode == Opcode::BR_COND && conv(rng)) m.converted_branches[in.index] = dir(rng);
    }
    s.versions.push_back(std::move(m));
  }
  for (const auto& in : p.instrs)
    if (in.opcode == Opcode::LOAD && member(rng)) s.s_bits[in.index] = true;
  return s;
}

// Loop over pseudo-random lines of a 4 MB region. The loaded value has two
// consumers and the address is cheap to compute, so a look-ahead thread runs
// well ahead and sends value footnotes.
inline StaticProgram scatter_program(int iters, int work) {
  std::ostringstream os;
  os << "  ADDI r1, r0, 1\n  ADDI r2, r0, " << iters << "\n  ADDI r9, r0, 16777216\n  ADDI r8, r0, 1103515245\nloop:\n"
     << "  MUL r1, r1, r8\n  ADDI r1, r1, 12345\n  SRLI r6, r1, 16\n  ANDI r6, r6, 65535\n  SLLI r6, r6, 6\n"
     << "  ADD r6, r6, r9\n  LD r3, r6, 0\n  ADD r4, r4, r3\n  XOR r5, r5, r3\n";
  for (int k = 0; k < work; ++k) os << "  ADDI r" << 10 + k % 8 << ", r" << 10 + k % 8 << ", 1\n";
  os << "  ADDI r2, r2, -1\n  BNE r2, r0, loop\n  ST r4, r0, 8\n  ST r5, r0, 16\n  HALT\n";
  return parse_program(os.str());
}

inline std::vector<TraceEvent> reference_trace(const StaticProgram& p, std::uint64_t limit) {
  return run_trace(p, limit);
}

}  // namespace r3dla::testing
