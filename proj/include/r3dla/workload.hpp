// Synthetic workload generators. Each emits assembly text and parses it, so
// every generated program goes through the same validation as user programs.
#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "r3dla/assembler.hpp"

namespace r3dla {

enum class WorkloadKind { strided_loop, pointer_chase, branchy, mixed_phases };

inline std::string_view workload_name(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::strided_loop: return "strided_loop";
    case WorkloadKind::pointer_chase: return "pointer_chase";
    case WorkloadKind::branchy: return "branchy";
    case WorkloadKind::mixed_phases: return "mixed_phases";
  }
  return "?";
}

inline std::optional<WorkloadKind> workload_from_name(std::string_view s) {
  for (auto k : {WorkloadKind::strided_loop, WorkloadKind::pointer_chase, WorkloadKind::branchy,
                 WorkloadKind::mixed_phases})
    if (workload_name(k) == s) return k;
  return std::nullopt;
}

using WorkloadParams = std::map<std::string, std::int64_t>;

class WorkloadError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Default parameters per kind; also the set of accepted keys.
inline WorkloadParams workload_defaults(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::strided_loop:
      return {{"stride", 64}, {"iters", 100}, {"base", 1 << 20}};
    case WorkloadKind::pointer_chase:
      return {{"len", 1000}, {"work", 0}, {"base", 1 << 24}, {"spacing", 64}};
    case WorkloadKind::branchy:
      return {{"iters", 1000}, {"taken_pct", 50}, {"base", 1 << 20}};
    case WorkloadKind::mixed_phases:
      return {{"iters", 20000}, {"reps", 2}, {"chase_len", 4096}, {"chase_work", 24}, {"mix_chain", 12}};
  }
  return {};
}

namespace detail {

inline WorkloadParams merge_params(WorkloadKind k, const WorkloadParams& given) {
  auto p = workload_defaults(k);
  for (auto& [key, v] : given) {
    if (!p.count(key)) throw WorkloadError(std::string(workload_name(k)) + ": unknown param '" + key + "'");
    p[key] = v;
  }
  return p;
}

// Emits a pointer ring of `len` nodes, one per `spacing` bytes, in random order.
// Returns the head address.
inline Addr emit_ring(std::ostringstream& os, std::int64_t base, std::int64_t len, std::int64_t spacing,
                      std::mt19937_64& rng) {
  std::vector<std::int64_t> slot(static_cast<std::size_t>(len));
  std::iota(slot.begin(), slot.end(), 0);
  std::shuffle(slot.begin(), slot.end(), rng);
  auto addr = [&](std::int64_t k) { return base + slot[static_cast<std::size_t>(k)] * spacing; };
  for (std::int64_t k = 0; k < len; ++k) os << ".data " << addr(k) << " " << addr((k + 1) % len) << "\n";
  return addr(0);
}

inline std::string describe(const WorkloadParams& p, std::uint64_t seed) {
  std::ostringstream os;
  for (auto& [k, v] : p) os << k << "=" << v << " ";
  os << "seed=" << seed;
  return os.str();
}

}  // namespace detail

inline StaticProgram gen_workload(WorkloadKind kind, const WorkloadParams& given, std::uint64_t seed) {
  auto p = detail::merge_params(kind, given);
  std::mt19937_64 rng(seed);
  std::ostringstream os;
  os << ".name " << workload_name(kind) << "\n";

  switch (kind) {
    case WorkloadKind::strided_loop: {
      auto stride = p["stride"], iters = p["iters"], base = p["base"];
      if (stride == 0 || iters <= 0) throw WorkloadError("strided_loop: need stride != 0 and iters > 0");
      if (base + std::min<std::int64_t>(0, stride) * iters < 0) throw WorkloadError("strided_loop: addresses go negative");
      std::uniform_int_distribution<int> val(0, 999);
      for (std::int64_t i = 0; i < iters; ++i) os << ".data " << base + i * stride << " " << val(rng) << "\n";
      os << "  ADDI r1, r0, " << base << "\n"
         << "  ADDI r2, r0, " << iters << "\n"
         << "  ADDI r4, r0, 0\n"
         << "loop:\n"
         << "  LD r3, r1, 0\n"
         << "  ADD r4, r4, r3\n"
         << "  ADDI r1, r1, " << stride << "\n"
         << "  ADDI r2, r2, -1\n"
         << "  BNE r2, r0, loop\n"
         << "  ST r4, r0, 8\n"
         << "  HALT\n";
      break;
    }
    case WorkloadKind::pointer_chase: {
      auto len = p["len"], work = p["work"], base = p["base"], spacing = p["spacing"];
      if (len <= 0 || work < 0 || spacing < 8 || base < 0) throw WorkloadError("pointer_chase: invalid params");
      Addr head = detail::emit_ring(os, base, len, spacing, rng);
      os << "  ADDI r1, r0, " << head << "\n"
         << "  ADDI r2, r0, " << len << "\n"
         << "loop:\n"
         << "  LD r1, r1, 0\n";
      for (std::int64_t k = 0; k < work; ++k) {
        int r = 5 + static_cast<int>(k % 8);
        os << "  ADDI r" << r << ", r" << r << ", " << (k % 7) + 1 << "\n";
      }
      os << "  ADDI r2, r2, -1\n"
         << "  BNE r2, r0, loop\n"
         << "  ST r1, r0, 8\n"
         << "  HALT\n";
      break;
    }
    case WorkloadKind::branchy: {
      auto iters = p["iters"], pct = p["taken_pct"], base = p["base"];
      if (iters <= 0 || pct < 0 || pct > 100 || base < 0) throw WorkloadError("branchy: invalid params");
      std::uniform_int_distribution<int> val(0, 99);
      for (std::int64_t i = 0; i < iters; ++i) os << ".data " << base + 8 * i << " " << val(rng) << "\n";
      os << "  ADDI r1, r0, " << base << "\n"
         << "  ADDI r2, r0, " << iters << "\n"
         << "  ADDI r6, r0, " << pct << "\n"
         << "loop:\n"
         << "  LD r3, r1, 0\n"
         << "  BLT r3, r6, skip\n"
         << "  ADDI r4, r4, 1\n"
         << "  XOR r5, r5, r3\n"
         << "skip:\n"
         << "  ADD r7, r7, r3\n"
         << "  ADDI r1, r1, 8\n"
         << "  ADDI r2, r2, -1\n"
         << "  BNE r2, r0, loop\n"
         << "  ST r4, r0, 8\n"
         << "  ST r5, r0, 16\n"
         << "  HALT\n";
      break;
    }
    case WorkloadKind::mixed_phases: {
      // Phase A walks a pointer ring with independent filler work: look-ahead
      // prefetching of the chase pays off. Phase B runs a loop whose rarely-taken
      // exit test depends on a long multiply chain: converting that biased branch
      // frees the look-ahead thread from the chain.
      auto iters = p["iters"], reps = p["reps"], clen = p["chase_len"], cwork = p["chase_work"],
           chain = p["mix_chain"];
      if (iters <= 0 || reps <= 0 || clen <= 0 || cwork < 0 || chain <= 0)
        throw WorkloadError("mixed_phases: invalid params");
      Addr head = detail::emit_ring(os, 1 << 24, clen, 64, rng);
      os << "  ADDI r30, r0, " << head << "\n";
      for (std::int64_t r = 0; r < reps; ++r) os << "  CALL phase_a\n  CALL phase_b\n";
      os << "  ST r1, r0, 8\n"
         << "  ST r14, r0, 16\n"
         << "  HALT\n";
      // Phase A: r1 chases from the saved ring position in r30.
      os << "phase_a:\n"
         << "  ADD r1, r30, r0\n"
         << "  ADDI r2, r0, " << iters << "\n"
         << "a_loop:\n"
         << "  LD r1, r1, 0\n";
      for (std::int64_t k = 0; k < cwork; ++k) {
        int r = 5 + static_cast<int>(k % 8);
        os << "  ADDI r" << r << ", r" << r << ", 1\n";
      }
      os << "  ADDI r2, r2, -1\n"
         << "  BNE r2, r0, a_loop\n"
         << "  ADD r30, r1, r0\n"
         << "  RET\n";
      // Phase B: r14 accumulates a hash chain; the exit test on it never fires.
      os << "phase_b:\n"
         << "  ADDI r12, r0, " << iters << "\n"
         << "  ADDI r15, r0, -1\n"
         << "b_loop:\n"
         << "  ADDI r14, r14, 7\n";
      for (std::int64_t k = 0; k < chain; ++k) os << "  MUL r14, r14, r14\n  ADDI r14, r14, " << 3 + k << "\n";
      os << "  BEQ r14, r15, b_out\n"
         << "  ADDI r16, r16, 1\n"
         << "  ADDI r17, r17, 2\n"
         << "  ADDI r12, r12, -1\n"
         << "  BNE r12, r0, b_loop\n"
         << "b_out:\n"
         << "  RET\n";
      break;
    }
  }
  auto prog = parse_program(os.str());
  prog.meta.name = std::string(workload_name(kind));
  prog.meta.params = detail::describe(p, seed);
  return prog;
}

}  // namespace r3dla
