// Runtime checkers for the properties the relaxation must maintain. Each
// checker is pure and reports the first pseudo-address that breaks it.
#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bdo/isa.hpp"
#include "bdo/program.hpp"
#include "bdo/sigma.hpp"

namespace bdo {

struct Violation {
  std::size_t ppc;
  std::string detail;
};

struct CheckReport {
  std::string name;
  bool holds = true;
  std::optional<Violation> first_violation;

  static CheckReport ok(std::string name) { return {std::move(name), true, std::nullopt}; }
  static CheckReport fail(std::string name, std::size_t ppc, std::string detail) {
    return {std::move(name), false, Violation{ppc, std::move(detail)}};
  }
  explicit operator bool() const noexcept { return holds; }
};

namespace detail {

inline std::string addr_str(std::uint64_t a) {
  std::ostringstream os;
  os << a << " (0x" << std::hex << a << ")";
  return os.str();
}

}  // namespace detail

/// Keys 0..n are present, nothing above n is.
inline CheckReport check_out_of_program_none(const Program& p, const SigmaMap& sigma) {
  const char* name = "out_of_program_none";
  const std::size_t n = p.size();
  for (std::size_t i = 0; i <= n; ++i)
    if (!sigma.find(i)) return CheckReport::fail(name, i, "entry missing inside the program");
  for (std::size_t i = n + 1; i < sigma.key_bound(); ++i)
    if (sigma.find(i)) return CheckReport::fail(name, i, "entry present past the end of the program");
  return CheckReport::ok(name);
}

inline CheckReport check_not_jump_default(const Program& p, const SigmaMap& sigma) {
  const char* name = "not_jump_default";
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!p.instructions[i].is_branch() && sigma.length(i) != JumpLength::short_jump)
      return CheckReport::fail(name, i,
                               "non-branch stored as " + std::string(to_string(sigma.length(i))));
  return CheckReport::ok(name);
}

/// Lengths never decrease from one iteration to the next.
inline CheckReport check_jump_increase(const Program& p, const SigmaMap& old_sigma,
                                       const SigmaMap& new_sigma) {
  const char* name = "jump_increase";
  for (std::size_t i = 0; i <= p.size(); ++i) {
    const auto o = old_sigma.length(i);
    const auto n = new_sigma.length(i);
    if (!jmpleq(o, n))
      return CheckReport::fail(name, i,
                               std::string(to_string(o)) + " -> " + std::string(to_string(n)));
  }
  return CheckReport::ok(name);
}

/// Consecutive placement, sizing each branch by its stored length.
inline CheckReport check_sigma_compact_unsafe(const Program& p, const LabelMap& /*labels*/,
                                              const SigmaMap& sigma,
                                              const IsaParams& isa = IsaParams{}) {
  const char* name = "sigma_compact_unsafe";
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto cur = sigma.find(i);
    const auto next = sigma.find(i + 1);
    if (!cur || !next) return CheckReport::fail(name, i, "missing entry");
    const auto& instr = p.instructions[i];
    if (instr.jump() && !is_admissible(instr.jump()->op, cur->length))
      return CheckReport::fail(name, i, "inadmissible stored length");
    const auto size = instruction_size(instr, cur->length, isa);
    if (next->address != cur->address + size)
      return CheckReport::fail(name, i,
                               "next address " + detail::addr_str(next->address) + ", expected " +
                                   detail::addr_str(cur->address + size));
  }
  return CheckReport::ok(name);
}

/// Consecutive placement, sizing each branch from the distance to its target
/// under `sigma` itself; stored long forces the long form. Only expected to
/// hold once the iteration has converged.
inline CheckReport check_sigma_compact(const Program& p, const LabelMap& labels,
                                       const SigmaMap& sigma, const IsaParams& isa = IsaParams{}) {
  const char* name = "sigma_compact";
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto cur = sigma.find(i);
    const auto next = sigma.find(i + 1);
    if (!cur || !next) return CheckReport::fail(name, i, "missing entry");
    const auto& instr = p.instructions[i];
    std::uint32_t size;
    if (const auto* j = instr.jump()) {
      const auto target = isa.wrap(sigma.address(labels.at(j->dest)));
      const auto length = cur->length == JumpLength::long_jump
                              ? JumpLength::long_jump
                              : jump_size(cur->address, target, j->op, isa);
      size = branch_size(j->op, length, isa);
    } else {
      size = instr.other()->size;
    }
    if (next->address != cur->address + size)
      return CheckReport::fail(name, i,
                               "next address " + detail::addr_str(next->address) + ", expected " +
                                   detail::addr_str(cur->address + size));
  }
  return CheckReport::ok(name);
}

/// Every stored branch length is justified by its span:
///   short    -> admissible and in short range;
///   absolute -> admissible, same segment, and no admissible short fits;
///   long     -> no admissible shorter form fits.
/// A forward target is read from `old_sigma` shifted by the bytes added
/// before the branch in this iteration; a backward (or self) target is read
/// from `sigma`. `added` is the total growth of the iteration.
inline CheckReport check_sigma_safe(const Program& p, const LabelMap& labels, std::int64_t added,
                                    const SigmaMap& old_sigma, const SigmaMap& sigma,
                                    const IsaParams& isa = IsaParams{}) {
  const char* name = "sigma_safe";
  const std::size_t n = p.size();
  const auto total = static_cast<std::int64_t>(sigma.address(n)) - static_cast<std::int64_t>(old_sigma.address(n));
  if (total != added)
    return CheckReport::fail(name, n, "added is " + std::to_string(added) + " but the maps differ by " +
                                          std::to_string(total));

  for (std::size_t i = 0; i < n; ++i) {
    const auto* j = p.instructions[i].jump();
    if (!j) continue;
    const auto pc = sigma.address(i);
    const auto dest = labels.at(j->dest);
    std::uint64_t addr;
    if (dest <= i) {
      addr = sigma.address(dest);
    } else {
      const auto added_here = static_cast<std::int64_t>(pc) - static_cast<std::int64_t>(old_sigma.address(i));
      addr = static_cast<std::uint64_t>(static_cast<std::int64_t>(old_sigma.address(dest)) + added_here);
    }
    const auto target = isa.wrap(addr);
    const bool fits_short = reaches(j->op, JumpLength::short_jump, pc, target, isa);
    const bool fits_absolute = reaches(j->op, JumpLength::absolute_jump, pc, target, isa);
    const auto stored = sigma.length(i);

    switch (stored) {
      case JumpLength::short_jump:
        if (!is_admissible(j->op, stored))
          return CheckReport::fail(name, i, std::string(to_string(j->op)) + " stored short");
        if (!fits_short)
          return CheckReport::fail(name, i, "short jump out of range of " + detail::addr_str(target));
        break;
      case JumpLength::absolute_jump:
        if (!is_admissible(j->op, stored))
          return CheckReport::fail(name, i, std::string(to_string(j->op)) + " stored absolute");
        if (!fits_absolute)
          return CheckReport::fail(name, i, "absolute jump leaves its segment for " + detail::addr_str(target));
        if (fits_short) return CheckReport::fail(name, i, "absolute jump where a short jump fits");
        break;
      case JumpLength::long_jump:
        if (fits_short) return CheckReport::fail(name, i, "long jump where a short jump fits");
        if (fits_absolute) return CheckReport::fail(name, i, "long jump where an absolute jump fits");
        break;
    }
  }
  return CheckReport::ok(name);
}

/// added = 0 implies identical addresses; identical lengths imply added = 0.
inline CheckReport check_policy_equal(const Program& p, const SigmaMap& old_sigma,
                                      const SigmaMap& sigma, std::int64_t added) {
  const char* name = "policy_equal";
  const std::size_t n = p.size();
  if (added == 0) {
    for (std::size_t i = 0; i <= n; ++i)
      if (old_sigma.address(i) != sigma.address(i))
        return CheckReport::fail(name, i, "added is 0 but the address moved");
  }
  bool same_lengths = true;
  for (std::size_t i = 0; i < n && same_lengths; ++i)
    same_lengths = old_sigma.length(i) == sigma.length(i);
  if (same_lengths && added != 0)
    return CheckReport::fail(name, n, "no length changed but added is " + std::to_string(added));
  return CheckReport::ok(name);
}

/// The final contract: sigma(0) = 0, each instruction is placed right after
/// its predecessor with no overlap, and addresses strictly increase except
/// that a program filling all of memory ends at address 0.
inline CheckReport check_specification(const Program& p, const FinalPolicy& final,
                                       const IsaParams& isa = IsaParams{}) {
  const char* name = "specification";
  const std::size_t n = p.size();
  if (final.sigma.size() != n + 1 || final.forced_long.size() != n)
    return CheckReport::fail(name, 0, "policy does not cover the program");
  if (final.sigma[0] != 0) return CheckReport::fail(name, 0, "program does not start at 0");

  LabelMap labels;
  try {
    labels = build_label_map(p);
  } catch (const LabelError& e) {
    return CheckReport::fail(name, 0, e.what());
  }

  std::uint64_t total = 0;
  for (std::size_t ppc = 0; ppc < n; ++ppc) {
    const auto& instr = p.instructions[ppc];
    const std::uint32_t pc = final.sigma[ppc];
    std::uint32_t size;
    if (const auto* j = instr.jump()) {
      const auto target = final.sigma[labels.at(j->dest)];
      const auto length = final.forced_long[ppc] ? JumpLength::long_jump : jump_size(pc, target, j->op, isa);
      size = branch_size(j->op, length, isa);
    } else {
      if (final.forced_long[ppc]) return CheckReport::fail(name, ppc, "non-branch marked forced long");
      size = instr.other()->size;
    }
    total += size;
    if (total > isa.memory_size()) return CheckReport::fail(name, ppc, "program exceeds memory");
    const std::uint32_t next = final.sigma[ppc + 1];
    if (isa.wrap(std::uint64_t{pc} + size) != next)
      return CheckReport::fail(name, ppc,
                               "next address " + detail::addr_str(next) + ", expected " +
                                   detail::addr_str(isa.wrap(std::uint64_t{pc} + size)));
    const bool exact_fit_end = ppc + 1 == n && next == 0;
    if (!(pc < next) && !exact_fit_end)
      return CheckReport::fail(name, ppc, "addresses do not increase");
  }
  if (total != final.program_size)
    return CheckReport::fail(name, n, "program size " + std::to_string(final.program_size) +
                                          " but instructions add up to " + std::to_string(total));
  return CheckReport::ok(name);
}

}  // namespace bdo
