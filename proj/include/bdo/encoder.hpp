// MCS-51 code emission under a final policy, and a decoder that checks every
// emitted branch lands on its label.
//
// Branch forms:
//   SJMP  80 rel          AJMP  (a10..a8 << 5) | 01, a7..a0     LJMP  02 hi lo
//   ACALL (a10..a8 << 5) | 11, a7..a0                           LCALL 12 hi lo
//   JC 40  JNC 50  JZ 60  JNZ 70  CJNE B5: opcode, filler..., rel
// A long conditional is the inverted conditional skipping an LJMP; CJNE has
// no inverse and becomes CJNE +2, SJMP +3, LJMP.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdo/invariants.hpp"
#include "bdo/isa.hpp"
#include "bdo/program.hpp"
#include "bdo/sigma.hpp"

namespace bdo {

class EncodingError : public Error {
 public:
  EncodingError(std::size_t ppc, const std::string& what)
      : Error("ppc " + std::to_string(ppc) + ": " + what), ppc_(ppc) {}
  std::size_t ppc() const noexcept { return ppc_; }

 private:
  std::size_t ppc_;
};

struct BranchSite {
  std::size_t ppc;
  std::uint32_t address;
  JumpLength length;
};

struct MachineImage {
  std::vector<std::uint8_t> bytes;
  std::vector<BranchSite> branch_sites;
};

namespace op {
inline constexpr std::uint8_t sjmp = 0x80;
inline constexpr std::uint8_t ajmp = 0x01;
inline constexpr std::uint8_t ljmp = 0x02;
inline constexpr std::uint8_t acall = 0x11;
inline constexpr std::uint8_t lcall = 0x12;
inline constexpr std::uint8_t page_mask = 0x1F;
}  // namespace op

inline std::uint8_t conditional_opcode(Mnemonic m) {
  switch (m) {
    case Mnemonic::jc: return 0x40;
    case Mnemonic::jnc: return 0x50;
    case Mnemonic::jz: return 0x60;
    case Mnemonic::jnz: return 0x70;
    case Mnemonic::cjne: return 0xB5;
    default: throw ContractViolation("not a conditional branch");
  }
}

/// Encoding the assembler picks for a branch at `pc`: long when forced,
/// otherwise the shortest form whose reach condition holds.
inline JumpLength select_encoding(Mnemonic m, std::uint32_t pc, std::uint32_t target, bool forced_long,
                                  const IsaParams& isa) {
  return forced_long ? JumpLength::long_jump : jump_size(pc, target, m, isa);
}

namespace detail {

inline std::uint8_t rel8(std::size_t ppc, std::uint64_t pc_after, std::uint32_t target, const IsaParams& isa) {
  const auto c = short_jump_cond(static_cast<std::uint32_t>(pc_after), target, isa);
  if (!c.in_range) throw EncodingError(ppc, "relative displacement " + std::to_string(c.displacement) + " out of range");
  return static_cast<std::uint8_t>(static_cast<std::int8_t>(c.displacement));
}

inline void emit_branch(std::vector<std::uint8_t>& out, std::size_t ppc, Mnemonic m, JumpLength length,
                        std::uint32_t pc, std::uint32_t target, const IsaParams& isa) {
  const auto size = branch_size(m, length, isa);
  const std::uint32_t end = isa.wrap(std::uint64_t{pc} + size);
  const auto hi = static_cast<std::uint8_t>(target >> 8);
  const auto lo = static_cast<std::uint8_t>(target & 0xFF);
  const auto page = static_cast<std::uint8_t>(((target >> 8) & 0x07) << 5);

  if (kind_of(m) != BranchKind::conditional) {
    const bool is_call = m == Mnemonic::call;
    switch (length) {
      case JumpLength::short_jump:
        out.push_back(op::sjmp);
        out.push_back(rel8(ppc, end, target, isa));
        return;
      case JumpLength::absolute_jump:
        if (!absolute_jump_cond(end, target, isa)) throw EncodingError(ppc, "absolute target outside segment");
        out.push_back(page | (is_call ? op::acall : op::ajmp));
        out.push_back(lo);
        return;
      case JumpLength::long_jump:
        out.insert(out.end(), {is_call ? op::lcall : op::ljmp, hi, lo});
        return;
    }
  }

  const auto cond = isa.conditional_short_size[static_cast<std::size_t>(m)];
  const auto filler = cond - 2;
  if (length == JumpLength::short_jump) {
    out.push_back(conditional_opcode(m));
    out.insert(out.end(), filler, 0x00);
    out.push_back(rel8(ppc, end, target, isa));
    return;
  }
  if (is_negatable(m)) {
    out.push_back(conditional_opcode(negate(m)));
    out.insert(out.end(), filler, 0x00);
    out.push_back(static_cast<std::uint8_t>(isa.jump_size[2]));
  } else {
    out.push_back(conditional_opcode(m));
    out.insert(out.end(), filler, 0x00);
    out.push_back(static_cast<std::uint8_t>(isa.jump_size[0]));
    out.push_back(op::sjmp);
    out.push_back(static_cast<std::uint8_t>(isa.jump_size[2]));
  }
  out.insert(out.end(), {op::ljmp, hi, lo});
}

}  // namespace detail

inline MachineImage encode_program(const Program& p, const LabelMap& labels, const FinalPolicy& final,
                                   const IsaParams& isa = IsaParams{}) {
  if (final.sigma.size() != p.size() + 1 || final.forced_long.size() != p.size())
    throw ContractViolation("policy does not match the program");

  MachineImage img;
  img.bytes.reserve(final.program_size);
  std::vector<std::uint8_t> buf;
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    const auto& instr = p.instructions[ppc];
    const std::uint32_t pc = final.sigma[ppc];
    if (img.bytes.size() != pc && !(img.bytes.size() == isa.memory_size() && pc == 0))
      throw EncodingError(ppc, "policy places instruction at " + std::to_string(pc) + " but emission is at " +
                                   std::to_string(img.bytes.size()));
    buf.clear();
    if (const auto* j = instr.jump()) {
      const std::uint32_t target = final.sigma[labels.at(j->dest)];
      const auto length = select_encoding(j->op, pc, target, final.forced_long[ppc], isa);
      detail::emit_branch(buf, ppc, j->op, length, pc, target, isa);
      img.branch_sites.push_back({ppc, pc, length});
    } else {
      buf.assign(instr.other()->size, 0x00);
    }
    // distance to the next address, modulo memory for the exact-fit end
    const std::uint32_t expected = isa.wrap(std::uint64_t{final.sigma[ppc + 1]} + isa.memory_size() - pc);
    if (isa.wrap(std::uint64_t{pc} + buf.size()) != final.sigma[ppc + 1])
      throw EncodingError(ppc, "emitted " + std::to_string(buf.size()) + " bytes, policy expects " +
                                   std::to_string(expected));
    if (img.bytes.size() + buf.size() > isa.memory_size()) throw EncodingError(ppc, "image exceeds memory");
    img.bytes.insert(img.bytes.end(), buf.begin(), buf.end());
  }
  if (img.bytes.size() != final.program_size)
    throw EncodingError(p.size(), "image size differs from the policy's program size");
  return img;
}

namespace detail {

struct DecodedBranch {
  bool ok = false;
  std::string error;
  std::uint32_t size = 0;
  std::uint32_t target = 0;
};

inline DecodedBranch decode_fail(std::string why) { return {false, std::move(why), 0, 0}; }

/// Decodes the branch at `pc` the way the CPU would execute it.
/// `site_size` picks between the short and expanded CJNE forms, which share
/// their first byte.
inline DecodedBranch decode_branch(std::span<const std::uint8_t> mem, Mnemonic m, std::uint32_t pc,
                                   std::uint32_t site_size, const IsaParams& isa) {
  auto byte = [&](std::uint32_t off) -> int {
    const std::uint64_t a = std::uint64_t{pc} + off;
    return a < mem.size() ? mem[a] : -1;
  };
  auto after = [&](std::uint32_t n) { return isa.wrap(std::uint64_t{pc} + n); };
  auto rel_from = [&](std::uint32_t base, int b) {
    return isa.wrap(static_cast<std::uint64_t>(static_cast<std::int64_t>(base) + static_cast<std::int8_t>(b)) &
                    0xFFFFFFFFull);
  };
  auto abs16 = [&](std::uint32_t off) -> int {
    const int h = byte(off), l = byte(off + 1);
    return h < 0 || l < 0 ? -1 : (h << 8) | l;
  };

  const int b0 = byte(0);
  if (b0 < 0) return decode_fail("site outside image");

  if (kind_of(m) != BranchKind::conditional) {
    const bool is_call = m == Mnemonic::call;
    if (!is_call && b0 == op::sjmp) {
      const int b1 = byte(1);
      if (b1 < 0) return decode_fail("truncated SJMP");
      return {true, {}, 2, rel_from(after(2), b1)};
    }
    if ((b0 & op::page_mask) == (is_call ? op::acall : op::ajmp)) {
      const int b1 = byte(1);
      if (b1 < 0) return decode_fail("truncated absolute branch");
      const std::uint32_t seg_mask = ~(isa.segment_size() - 1) & (isa.memory_size() - 1);
      return {true, {}, 2, (after(2) & seg_mask) | (static_cast<std::uint32_t>(b0 >> 5) << 8) |
                               static_cast<std::uint32_t>(b1)};
    }
    if (b0 == (is_call ? op::lcall : op::ljmp)) {
      const int a = abs16(1);
      if (a < 0) return decode_fail("truncated long branch");
      return {true, {}, 3, static_cast<std::uint32_t>(a)};
    }
    return decode_fail("unexpected opcode for " + std::string(to_string(m)));
  }

  const auto cond = isa.conditional_short_size[static_cast<std::size_t>(m)];
  for (std::uint32_t k = 1; k + 1 < cond; ++k)
    if (byte(k) != 0x00) return decode_fail("operand filler byte changed");
  const int rel = byte(cond - 1);
  if (rel < 0) return decode_fail("truncated conditional");

  const bool expanded = is_negatable(m) ? b0 == conditional_opcode(negate(m))
                                        : b0 == conditional_opcode(m) && site_size != cond;
  if (!expanded) {
    if (b0 != conditional_opcode(m)) return decode_fail("unexpected opcode for " + std::string(to_string(m)));
    return {true, {}, cond, rel_from(after(cond), rel)};
  }

  // Expanded form: the fall-through path must reach the end of the site and
  // the taken path must reach an LJMP.
  std::uint32_t ljmp_off;
  std::uint32_t size;
  if (is_negatable(m)) {
    ljmp_off = cond;
    size = cond + 3;
    if (rel_from(after(cond), rel) != after(size)) return decode_fail("inverted branch does not skip the LJMP");
  } else {
    ljmp_off = cond + 2;
    size = cond + 5;
    if (rel_from(after(cond), rel) != after(ljmp_off)) return decode_fail("taken path misses the LJMP");
    if (byte(cond) != op::sjmp) return decode_fail("fall-through SJMP missing");
    const int skip = byte(cond + 1);
    if (skip < 0 || rel_from(after(cond + 2), skip) != after(size))
      return decode_fail("fall-through SJMP does not skip the LJMP");
  }
  if (byte(ljmp_off) != op::ljmp) return decode_fail("LJMP missing from expansion");
  const int a = abs16(ljmp_off + 1);
  if (a < 0) return decode_fail("truncated LJMP");
  return {true, {}, size, static_cast<std::uint32_t>(a)};
}

}  // namespace detail

/// Decodes every branch site from the raw bytes and checks that it is as
/// long as the policy says and jumps to its label's address.
inline CheckReport verify_targets(const MachineImage& img, const Program& p, const LabelMap& labels,
                                  const FinalPolicy& final, const IsaParams& isa = IsaParams{}) {
  const char* name = "verify_targets";
  std::size_t sites = 0;
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    const auto* j = p.instructions[ppc].jump();
    if (!j) continue;
    ++sites;
    const std::uint32_t pc = final.sigma[ppc];
    const std::uint32_t site_size = isa.wrap(std::uint64_t{final.sigma[ppc + 1]} + isa.memory_size() - pc);
    const auto d = detail::decode_branch(img.bytes, j->op, pc, site_size, isa);
    if (!d.ok) return CheckReport::fail(name, ppc, d.error);
    if (d.size != site_size)
      return CheckReport::fail(name, ppc, "decoded " + std::to_string(d.size) + " bytes, site is " +
                                              std::to_string(site_size));
    const std::uint32_t expected = final.sigma[labels.at(j->dest)];
    if (d.target != expected)
      return CheckReport::fail(name, ppc, "branch lands on " + detail::addr_str(d.target) + ", label is at " +
                                              detail::addr_str(expected));
  }
  if (sites != img.branch_sites.size())
    return CheckReport::fail(name, p.size(), "image records a different number of branch sites");
  return CheckReport::ok(name);
}

}  // namespace bdo
