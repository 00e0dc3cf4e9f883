// Pseudo-assembly programs: data model, text format and label resolution.
//
// Grammar, one instruction per line:
//
//   line    := [ident ":"] [instr] [";" comment]
//   instr   := ("jmp" | "call" | "jz" | "jnz" | "jc" | "jnc" | "cjne") ident
//            | ("nop" | "other") nat
//
// A label on a line of its own names the next instruction.
#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bdo/isa.hpp"

namespace bdo {

struct Jump {
  Mnemonic op;
  std::string dest;
  bool operator==(const Jump&) const = default;
};

/// Any non-branch instruction; only its size matters to the relaxation.
struct Other {
  std::string mnemonic;
  std::uint32_t size;
  bool operator==(const Other&) const = default;
};

struct PseudoInstruction {
  std::optional<std::string> label;
  std::variant<Jump, Other> body;
  std::size_t line = 0;  // 1-based source line, 0 when built in code

  bool is_branch() const noexcept { return std::holds_alternative<Jump>(body); }
  const Jump* jump() const noexcept { return std::get_if<Jump>(&body); }
  const Other* other() const noexcept { return std::get_if<Other>(&body); }

  /// Source line is not part of a program's identity.
  bool operator==(const PseudoInstruction& o) const { return label == o.label && body == o.body; }
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LabelError : public Error {
 public:
  LabelError(std::string label, std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what + " '" + label + "'"),
        label_(std::move(label)),
        line_(line) {}
  const std::string& label() const noexcept { return label_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string label_;
  std::size_t line_;
};

inline constexpr std::size_t kMaxProgramLength = std::size_t{1} << 16;

struct Program {
  std::vector<PseudoInstruction> instructions;

  std::size_t size() const noexcept { return instructions.size(); }
  bool empty() const noexcept { return instructions.empty(); }
  bool operator==(const Program&) const = default;
};

/// Builder helpers, mostly for tests and fixtures.
inline PseudoInstruction jump(Mnemonic op, std::string dest, std::optional<std::string> label = {}) {
  return {std::move(label), Jump{op, std::move(dest)}, 0};
}
inline PseudoInstruction other(std::uint32_t size, std::optional<std::string> label = {},
                               std::string mnemonic = "other") {
  return {std::move(label), Other{std::move(mnemonic), size}, 0};
}

inline const PseudoInstruction& fetch_pseudo_instruction(const Program& p, std::size_t ppc) {
  if (ppc >= p.size())
    throw ContractViolation("pseudo-address " + std::to_string(ppc) + " out of program of length " +
                            std::to_string(p.size()));
  return p.instructions[ppc];
}

inline std::size_t branch_count(const Program& p) {
  std::size_t n = 0;
  for (const auto& i : p.instructions) n += i.is_branch() ? 1 : 0;
  return n;
}

namespace detail {

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_ident(std::string_view s) {
  if (s.empty() || !is_ident_start(s.front())) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Concrete MCS-51 branch names are accepted; the optimizer picks the form.
inline std::optional<Mnemonic> branch_mnemonic(std::string_view op) {
  if (op == "sjmp" || op == "ajmp" || op == "ljmp") return Mnemonic::jmp;
  if (op == "acall" || op == "lcall") return Mnemonic::call;
  return mnemonic_from_string(op);
}

}  // namespace detail

inline Program parse_program(std::string_view text) {
  Program p;
  std::optional<std::string> pending_label;
  std::size_t pending_line = 0;
  std::size_t line_no = 0;

  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (auto semi = line.find(';'); semi != std::string_view::npos) line = line.substr(0, semi);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (auto colon = line.find(':'); colon != std::string_view::npos) {
      const auto name = detail::trim(line.substr(0, colon));
      if (!detail::is_ident(name)) throw ParseError(line_no, "malformed label '" + std::string(name) + "'");
      if (pending_label)
        throw ParseError(line_no, "instruction already labelled '" + *pending_label + "'");
      pending_label = std::string(name);
      pending_line = line_no;
      line = detail::trim(line.substr(colon + 1));
      if (line.empty()) continue;
    }

    const auto words = detail::split_ws(line);
    if (words.size() != 2)
      throw ParseError(line_no, "expected '<mnemonic> <operand>', got '" + std::string(line) + "'");

    PseudoInstruction instr;
    instr.label = std::move(pending_label);
    pending_label.reset();
    instr.line = line_no;

    std::string op(words[0]);
    for (char& c : op) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    if (auto m = detail::branch_mnemonic(op)) {
      if (!detail::is_ident(words[1]))
        throw ParseError(line_no, "bad branch destination '" + std::string(words[1]) + "'");
      instr.body = Jump{*m, std::string(words[1])};
    } else if (op == "nop" || op == "other") {
      std::uint64_t size = 0;
      const auto w = words[1];
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), size);
      if (ec != std::errc{} || ptr != w.data() + w.size())
        throw ParseError(line_no, "bad size '" + std::string(w) + "'");
      if (size < 1) throw ParseError(line_no, "instruction size must be at least 1");
      if (size > 0xFFFFFFFFull) throw ParseError(line_no, "instruction size too large");
      instr.body = Other{op, static_cast<std::uint32_t>(size)};
    } else {
      throw ParseError(line_no, "unknown mnemonic '" + std::string(words[0]) + "'");
    }
    p.instructions.push_back(std::move(instr));
  }

  if (pending_label) throw ParseError(pending_line, "label '" + *pending_label + "' names no instruction");
  if (p.size() >= kMaxProgramLength) throw ParseError(line_no, "program has too many instructions");
  return p;
}

inline std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& i : p.instructions) {
    if (i.label) os << *i.label << ": ";
    if (const auto* j = i.jump())
      os << to_string(j->op) << ' ' << j->dest;
    else
      os << i.other()->mnemonic << ' ' << i.other()->size;
    os << '\n';
  }
  return os.str();
}

/// Label -> pseudo-address.
class LabelMap {
 public:
  std::optional<std::size_t> find(std::string_view label) const {
    auto it = map_.find(label);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t at(std::string_view label) const {
    auto it = map_.find(label);
    if (it == map_.end()) throw ContractViolation("unresolved label '" + std::string(label) + "'");
    return it->second;
  }

  /// False if the label is already defined.
  bool define(std::string label, std::size_t ppc) { return map_.emplace(std::move(label), ppc).second; }

  std::size_t size() const noexcept { return map_.size(); }
  const std::map<std::string, std::size_t, std::less<>>& entries() const noexcept { return map_; }

 private:
  std::map<std::string, std::size_t, std::less<>> map_;
};

inline LabelMap build_label_map(const Program& p) {
  LabelMap labels;
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    const auto& i = p.instructions[ppc];
    if (!i.label) continue;
    if (!labels.define(*i.label, ppc))
      throw LabelError(*i.label, i.line, "duplicate label");
  }
  for (const auto& i : p.instructions)
    if (const auto* j = i.jump(); j && !labels.find(j->dest))
      throw LabelError(j->dest, i.line, "undefined jump destination");
  return labels;
}

/// Destination pseudo-address of each instruction; empty for non-branches.
inline std::vector<std::optional<std::size_t>> branch_targets(const Program& p, const LabelMap& labels) {
  std::vector<std::optional<std::size_t>> out(p.size());
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
    if (const auto* j = p.instructions[ppc].jump()) out[ppc] = labels.at(j->dest);
  return out;
}

}  // namespace bdo
