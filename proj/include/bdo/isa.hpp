// MCS-51 branch instruction model: jump lengths, reach conditions, sizes and
// cycle counts for every branch form the assembler can emit.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <optional>

namespace bdo {

/// Raised when a caller breaks a precondition that the pipeline itself is
/// supposed to guarantee. Seeing one means there is a bug upstream.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Base for all user-facing failures (bad input, oversized programs, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class JumpLength : std::uint8_t { short_jump = 0, absolute_jump = 1, long_jump = 2 };

inline constexpr std::array<JumpLength, 3> kAllLengths = {
    JumpLength::short_jump, JumpLength::absolute_jump, JumpLength::long_jump};

/// short < absolute < long.
constexpr bool jmpleq(JumpLength a, JumpLength b) noexcept {
  return static_cast<int>(a) <= static_cast<int>(b);
}

/// Join used when re-encoding a branch. Lengths never shrink; a branch that
/// was absolute and now fits a short jump becomes long, because a short jump
/// can cross a segment border that the absolute form cannot.
constexpr JumpLength max_length(JumpLength old_length, JumpLength new_length) noexcept {
  if (old_length == JumpLength::absolute_jump && new_length == JumpLength::short_jump)
    return JumpLength::long_jump;
  return jmpleq(old_length, new_length) ? new_length : old_length;
}

constexpr std::string_view to_string(JumpLength l) noexcept {
  switch (l) {
    case JumpLength::short_jump: return "short";
    case JumpLength::absolute_jump: return "absolute";
    case JumpLength::long_jump: return "long";
  }
  return "?";
}

inline std::optional<JumpLength> jump_length_from_string(std::string_view s) {
  if (s == "short") return JumpLength::short_jump;
  if (s == "absolute") return JumpLength::absolute_jump;
  if (s == "long") return JumpLength::long_jump;
  return std::nullopt;
}

/// Source-level branch mnemonics. The assembler input does not say which
/// encoding to use, only what the branch means.
enum class Mnemonic : std::uint8_t { jmp, call, jz, jnz, jc, jnc, cjne };

inline constexpr std::array<Mnemonic, 7> kAllMnemonics = {
    Mnemonic::jmp, Mnemonic::call, Mnemonic::jz, Mnemonic::jnz,
    Mnemonic::jc,  Mnemonic::jnc,  Mnemonic::cjne};

constexpr std::string_view to_string(Mnemonic m) noexcept {
  switch (m) {
    case Mnemonic::jmp: return "jmp";
    case Mnemonic::call: return "call";
    case Mnemonic::jz: return "jz";
    case Mnemonic::jnz: return "jnz";
    case Mnemonic::jc: return "jc";
    case Mnemonic::jnc: return "jnc";
    case Mnemonic::cjne: return "cjne";
  }
  return "?";
}

inline std::optional<Mnemonic> mnemonic_from_string(std::string_view s) {
  for (Mnemonic m : kAllMnemonics)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

enum class BranchKind : std::uint8_t { unconditional_jump, call, conditional };

constexpr BranchKind kind_of(Mnemonic m) noexcept {
  switch (m) {
    case Mnemonic::jmp: return BranchKind::unconditional_jump;
    case Mnemonic::call: return BranchKind::call;
    default: return BranchKind::conditional;
  }
}

/// Conditionals with an inverse condition expand to two instructions when
/// long; the others need three.
constexpr bool is_negatable(Mnemonic m) noexcept {
  return m == Mnemonic::jz || m == Mnemonic::jnz || m == Mnemonic::jc || m == Mnemonic::jnc;
}

constexpr Mnemonic negate(Mnemonic m) {
  switch (m) {
    case Mnemonic::jz: return Mnemonic::jnz;
    case Mnemonic::jnz: return Mnemonic::jz;
    case Mnemonic::jc: return Mnemonic::jnc;
    case Mnemonic::jnc: return Mnemonic::jc;
    default: throw ContractViolation("branch has no inverse condition");
  }
}

constexpr bool is_admissible(BranchKind kind, JumpLength length) noexcept {
  switch (kind) {
    case BranchKind::unconditional_jump: return true;
    case BranchKind::call: return length != JumpLength::short_jump;
    case BranchKind::conditional: return length != JumpLength::absolute_jump;
  }
  return false;
}

constexpr bool is_admissible(Mnemonic m, JumpLength length) noexcept {
  return is_admissible(kind_of(m), length);
}

/// Shortest encoding a branch of this kind may use.
constexpr JumpLength minimal_length(Mnemonic m) noexcept {
  return kind_of(m) == BranchKind::call ? JumpLength::absolute_jump : JumpLength::short_jump;
}

struct IsaParams {
  std::string name = "mcs51";
  unsigned address_bits = 16;
  unsigned segment_offset_bits = 11;
  std::int32_t short_min = -128;
  std::int32_t short_max = 127;

  // SJMP / AJMP / LJMP, also ACALL / LCALL for the two call forms.
  std::array<std::uint32_t, 3> jump_size = {2, 2, 3};
  std::array<std::uint32_t, 3> jump_cycles = {2, 2, 3};

  /// Size of the short form of each conditional, indexed by Mnemonic.
  /// Entries for jmp and call are unused.
  std::array<std::uint32_t, kAllMnemonics.size()> conditional_short_size = {2, 2, 2, 2, 2, 2, 2};

  std::uint32_t memory_size() const noexcept { return std::uint32_t{1} << address_bits; }
  std::uint32_t segment_size() const noexcept { return std::uint32_t{1} << segment_offset_bits; }

  /// Reduces an address to the machine word, as the program counter does.
  std::uint32_t wrap(std::uint64_t address) const noexcept {
    return static_cast<std::uint32_t>(address & (memory_size() - 1));
  }

  static IsaParams mcs51() { return IsaParams{}; }
};

struct ShortCondition {
  bool in_range;
  std::int64_t displacement;
};

/// Displacement seen by a relative branch whose next instruction starts at
/// `pc_after`. No wraparound: the subtraction is done on signed integers.
inline ShortCondition short_jump_cond(std::uint32_t pc_after, std::uint32_t target,
                                      const IsaParams& isa = IsaParams{}) noexcept {
  const std::int64_t disp = static_cast<std::int64_t>(target) - static_cast<std::int64_t>(pc_after);
  return {disp >= isa.short_min && disp <= isa.short_max, disp};
}

/// True iff both addresses share the bits above the in-segment offset.
inline bool absolute_jump_cond(std::uint32_t pc_after, std::uint32_t target,
                               const IsaParams& isa = IsaParams{}) noexcept {
  return (pc_after >> isa.segment_offset_bits) == (target >> isa.segment_offset_bits);
}

/// Byte size of a branch with the given mnemonic encoded at `length`.
inline std::uint32_t branch_size(Mnemonic m, JumpLength length, const IsaParams& isa) {
  if (!is_admissible(m, length))
    throw ContractViolation(std::string(to_string(m)) + " cannot be encoded as a " +
                            std::string(to_string(length)) + " jump");
  const auto idx = static_cast<std::size_t>(length);
  if (kind_of(m) != BranchKind::conditional) return isa.jump_size[idx];

  const std::uint32_t cond = isa.conditional_short_size[static_cast<std::size_t>(m)];
  if (length == JumpLength::short_jump) return cond;
  const std::uint32_t ljmp = isa.jump_size[2];
  // inverted conditional over an LJMP, or conditional + SJMP + LJMP
  return is_negatable(m) ? cond + ljmp : cond + isa.jump_size[0] + ljmp;
}

/// Static cycle count of the emitted branch form; expansions add up their parts.
inline std::uint32_t branch_cycles(Mnemonic m, JumpLength length, const IsaParams& isa) {
  if (!is_admissible(m, length))
    throw ContractViolation("inadmissible branch encoding");
  const auto idx = static_cast<std::size_t>(length);
  if (kind_of(m) != BranchKind::conditional) return isa.jump_cycles[idx];
  const std::uint32_t cond = isa.jump_cycles[0];
  if (length == JumpLength::short_jump) return cond;
  const std::uint32_t ljmp = isa.jump_cycles[2];
  return is_negatable(m) ? cond + ljmp : cond + isa.jump_cycles[0] + ljmp;
}

/// Whether encoding `m` at `length`, starting at `pc`, reaches `target`.
/// Every candidate is judged at the address right after its own encoding.
inline bool reaches(Mnemonic m, JumpLength length, std::uint64_t pc, std::uint32_t target,
                    const IsaParams& isa) {
  if (!is_admissible(m, length)) return false;
  const std::uint32_t pc_after = isa.wrap(pc + branch_size(m, length, isa));
  switch (length) {
    case JumpLength::short_jump: return short_jump_cond(pc_after, target, isa).in_range;
    case JumpLength::absolute_jump: return absolute_jump_cond(pc_after, target, isa);
    case JumpLength::long_jump: return true;
  }
  return false;
}

/// Smallest admissible length whose reach condition holds.
inline JumpLength jump_size(std::uint64_t pc, std::uint32_t target, Mnemonic m,
                            const IsaParams& isa) {
  for (JumpLength l : kAllLengths)
    if (reaches(m, l, pc, target, isa)) return l;
  return JumpLength::long_jump;
}

}  // namespace bdo
