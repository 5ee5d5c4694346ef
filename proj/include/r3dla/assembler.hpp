// Line-oriented assembly reader/writer for the micro-ISA.
//
//   ADD  rd, rs1, rs2      ADDI rd, rs1, imm      MUL rd, rs1, rs2
//   LD   rd, rbase, off    ST   rsrc, rbase, off
//   BEQ/BNE/BLT/BGE rs1, rs2, label              JMP label
//   CALL label             RET                    HALT
//
// Labels are `name:`; `@N` names instruction N directly. `#` starts a comment.
// Directives: `.data ADDR VALUE`, `.entry label`, `.name text`.
#pragma once

#include <cctype>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "r3dla/isa.hpp"

namespace r3dla {

class ParseError : public ProgramError {
 public:
  ParseError(int line, const std::string& msg)
      : ProgramError("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

struct Mnemonic {
  std::string_view name;
  Opcode op;
  AluFunc func = AluFunc::add;
  BranchCond cond = BranchCond::eq;
};

inline constexpr Mnemonic kMnemonics[] = {
    {"ADD", Opcode::ALU, AluFunc::add},     {"SUB", Opcode::ALU, AluFunc::sub},
    {"AND", Opcode::ALU, AluFunc::band},    {"OR", Opcode::ALU, AluFunc::bor},
    {"XOR", Opcode::ALU, AluFunc::bxor},    {"SLL", Opcode::ALU, AluFunc::sll},
    {"SRL", Opcode::ALU, AluFunc::srl},     {"SLT", Opcode::ALU, AluFunc::slt},
    {"ADDI", Opcode::ALUI, AluFunc::add},   {"SUBI", Opcode::ALUI, AluFunc::sub},
    {"ANDI", Opcode::ALUI, AluFunc::band},  {"ORI", Opcode::ALUI, AluFunc::bor},
    {"XORI", Opcode::ALUI, AluFunc::bxor},  {"SLLI", Opcode::ALUI, AluFunc::sll},
    {"SRLI", Opcode::ALUI, AluFunc::srl},   {"SLTI", Opcode::ALUI, AluFunc::slt},
    {"MUL", Opcode::MUL},                   {"LD", Opcode::LOAD},
    {"ST", Opcode::STORE},                  {"BEQ", Opcode::BR_COND, AluFunc::add, BranchCond::eq},
    {"BNE", Opcode::BR_COND, AluFunc::add, BranchCond::ne},
    {"BLT", Opcode::BR_COND, AluFunc::add, BranchCond::lt},
    {"BGE", Opcode::BR_COND, AluFunc::add, BranchCond::ge},
    {"JMP", Opcode::BR_UNCOND},             {"CALL", Opcode::CALL},
    {"RET", Opcode::RET},                   {"HALT", Opcode::HALT},
};

inline std::string_view mnemonic_of(const StaticInstr& in) {
  for (const auto& m : kMnemonics) {
    if (m.op != in.opcode) continue;
    if ((m.op == Opcode::ALU || m.op == Opcode::ALUI) && m.func != in.func) continue;
    if (m.op == Opcode::BR_COND && m.cond != in.cond) continue;
    return m.name;
  }
  return "?";
}

inline std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline bool is_label_name(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace detail

inline StaticProgram parse_program(const std::string& text) {
  using namespace detail;
  struct Pending {
    std::uint32_t instr;
    std::string label;
    int line;
  };
  StaticProgram prog;
  std::unordered_map<std::string, std::uint32_t> labels;
  std::vector<Pending> fixups;
  std::optional<std::pair<std::string, int>> entry_label;

  auto parse_int = [](const std::string& tok, int line) -> std::int64_t {
    try {
      std::size_t used = 0;
      auto v = std::stoll(tok, &used, 0);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line, "bad integer '" + tok + "'");
    }
  };
  auto parse_reg = [&](const std::string& tok, int line) -> Reg {
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R')) throw ParseError(line, "expected register, got '" + tok + "'");
    auto v = parse_int(tok.substr(1), line);
    if (v < 0 || v >= kNumRegs) throw ParseError(line, "register id out of range: " + tok);
    return static_cast<Reg>(v);
  };

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::string line = trim(raw);
    // Leading labels, possibly several.
    for (;;) {
      auto colon = line.find(':');
      if (colon == std::string::npos) break;
      auto name = trim(line.substr(0, colon));
      if (!is_label_name(name)) throw ParseError(lineno, "bad label '" + name + "'");
      if (labels.count(name)) throw ParseError(lineno, "duplicate label '" + name + "'");
      labels[name] = static_cast<std::uint32_t>(prog.instrs.size());
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) continue;

    std::string head = line, rest;
    if (auto sp = line.find_first_of(" \t"); sp != std::string::npos) {
      head = line.substr(0, sp);
      rest = trim(line.substr(sp));
    }

    if (head[0] == '.') {
      if (head == ".data") {
        std::istringstream ds(rest);
        std::string a, v;
        if (!(ds >> a >> v)) throw ParseError(lineno, ".data needs ADDR VALUE");
        auto addr = parse_int(a, lineno);
        if (addr < 0) throw ParseError(lineno, "negative data address");
        prog.data[addr] = parse_int(v, lineno);
      } else if (head == ".entry") {
        entry_label = {rest, lineno};
      } else if (head == ".name") {
        prog.meta.name = rest;
      } else {
        throw ParseError(lineno, "unknown directive " + head);
      }
      continue;
    }

    std::string upper;
    for (char c : head) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const Mnemonic* mn = nullptr;
    for (const auto& m : kMnemonics)
      if (m.name == upper) mn = &m;
    if (!mn) throw ParseError(lineno, "unknown opcode '" + head + "'");

    StaticInstr si;
    si.index = static_cast<std::uint32_t>(prog.instrs.size());
    si.opcode = mn->op;
    si.func = mn->func;
    si.cond = mn->cond;
    auto ops = split_operands(rest);
    auto want = [&](std::size_t n) {
      if (ops.size() != n)
        throw ParseError(lineno, std::string(mn->name) + " expects " + std::to_string(n) + " operands");
    };
    auto add_target = [&](const std::string& tok) {
      if (!tok.empty() && tok[0] == '@') {
        auto v = parse_int(tok.substr(1), lineno);
        if (v < 0) throw ParseError(lineno, "dangling branch target " + tok);
        si.target = static_cast<std::uint32_t>(v);
      } else {
        if (!is_label_name(tok)) throw ParseError(lineno, "bad target '" + tok + "'");
        fixups.push_back({si.index, tok, lineno});
        si.target = 0;
      }
    };
    switch (mn->op) {
      case Opcode::ALU:
      case Opcode::MUL:
        want(3);
        si.dst = parse_reg(ops[0], lineno);
        si.srcs = {parse_reg(ops[1], lineno), parse_reg(ops[2], lineno)};
        break;
      case Opcode::ALUI:
        want(3);
        si.dst = parse_reg(ops[0], lineno);
        si.srcs = {parse_reg(ops[1], lineno)};
        si.imm = parse_int(ops[2], lineno);
        break;
      case Opcode::LOAD:
        want(3);
        si.dst = parse_reg(ops[0], lineno);
        si.mem_base = parse_reg(ops[1], lineno);
        si.srcs = {*si.mem_base};
        si.mem_offset = parse_int(ops[2], lineno);
        break;
      case Opcode::STORE:
        want(3);
        si.mem_base = parse_reg(ops[1], lineno);
        si.srcs = {parse_reg(ops[0], lineno), *si.mem_base};
        si.mem_offset = parse_int(ops[2], lineno);
        break;
      case Opcode::BR_COND:
        want(3);
        si.srcs = {parse_reg(ops[0], lineno), parse_reg(ops[1], lineno)};
        add_target(ops[2]);
        break;
      case Opcode::BR_UNCOND:
      case Opcode::CALL:
        want(1);
        add_target(ops[0]);
        break;
      case Opcode::RET:
      case Opcode::HALT:
        want(0);
        break;
    }
    prog.instrs.push_back(std::move(si));
  }

  if (prog.instrs.empty()) throw ProgramError("empty program");
  for (const auto& f : fixups) {
    auto it = labels.find(f.label);
    if (it == labels.end() || it->second >= prog.size())
      throw ParseError(f.line, "dangling branch target '" + f.label + "'");
    prog.instrs[f.instr].target = it->second;
  }
  for (const auto& in : prog.instrs)
    if (in.target && *in.target >= prog.size())
      throw ParseError(0, "dangling branch target @" + std::to_string(*in.target));
  if (entry_label) {
    auto it = labels.find(entry_label->first);
    if (it == labels.end()) throw ParseError(entry_label->second, "unknown entry label");
    prog.entry = it->second;
  }
  validate(prog);
  return prog;
}

inline std::string print_program(const StaticProgram& p) {
  std::vector<bool> is_target(p.size(), false);
  for (const auto& in : p.instrs)
    if (in.target) is_target[*in.target] = true;
  if (p.entry != 0) is_target[p.entry] = true;

  std::ostringstream os;
  if (!p.meta.name.empty()) os << ".name " << p.meta.name << "\n";
  if (!p.meta.params.empty()) os << "# params: " << p.meta.params << "\n";
  if (p.entry != 0) os << ".entry L" << p.entry << "\n";
  for (auto [a, v] : p.data) os << ".data " << a << " " << v << "\n";
  auto r = [](Reg x) { return "r" + std::to_string(x); };
  for (const auto& in : p.instrs) {
    if (is_target[in.index]) os << "L" << in.index << ":\n";
    os << "  " << detail::mnemonic_of(in);
    switch (in.opcode) {
      case Opcode::ALU:
      case Opcode::MUL:
        os << " " << r(*in.dst) << ", " << r(in.srcs[0]) << ", " << r(in.srcs[1]);
        break;
      case Opcode::ALUI:
        os << " " << r(*in.dst) << ", " << r(in.srcs[0]) << ", " << *in.imm;
        break;
      case Opcode::LOAD:
        os << " " << r(*in.dst) << ", " << r(*in.mem_base) << ", " << in.mem_offset;
        break;
      case Opcode::STORE:
        os << " " << r(in.srcs[0]) << ", " << r(*in.mem_base) << ", " << in.mem_offset;
        break;
      case Opcode::BR_COND:
        os << " " << r(in.srcs[0]) << ", " << r(in.srcs[1]) << ", L" << *in.target;
        break;
      case Opcode::BR_UNCOND:
      case Opcode::CALL:
        os << " L" << *in.target;
        break;
      default:
        break;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace r3dla
