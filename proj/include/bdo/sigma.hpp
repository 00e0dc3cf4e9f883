// Address maps produced by the relaxation: the working map used while
// iterating, and the final pseudo-address -> machine-address policy.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bdo/isa.hpp"
#include "bdo/program.hpp"

namespace bdo {

/// Size of `instr` when its branch (if any) is encoded at `length`.
/// Non-branches ignore `length`.
inline std::uint32_t instruction_size(const PseudoInstruction& instr, JumpLength length,
                                      const IsaParams& isa) {
  if (const auto* j = instr.jump()) return branch_size(j->op, length, isa);
  return instr.other()->size;
}

struct SigmaEntry {
  std::uint64_t address = 0;
  JumpLength length = JumpLength::short_jump;
  bool operator==(const SigmaEntry&) const = default;
};

/// Working map pseudo-address -> (address, jump length), plus the program
/// size reached. Looking up an absent key gives {0, short}.
class SigmaMap {
 public:
  std::uint64_t program_size = 0;

  std::optional<SigmaEntry> find(std::size_t ppc) const {
    if (ppc < entries_.size()) return entries_[ppc];
    return std::nullopt;
  }
  SigmaEntry lookup(std::size_t ppc) const { return find(ppc).value_or(SigmaEntry{}); }
  std::uint64_t address(std::size_t ppc) const { return lookup(ppc).address; }
  JumpLength length(std::size_t ppc) const { return lookup(ppc).length; }

  void set(std::size_t ppc, SigmaEntry e) {
    if (ppc >= entries_.size()) entries_.resize(ppc + 1);
    entries_[ppc] = e;
  }
  void set_address(std::size_t ppc, std::uint64_t address) {
    auto e = lookup(ppc);
    e.address = address;
    set(ppc, e);
  }
  void set_length(std::size_t ppc, JumpLength length) {
    auto e = lookup(ppc);
    e.length = length;
    set(ppc, e);
  }
  void erase(std::size_t ppc) {
    if (ppc < entries_.size()) entries_[ppc].reset();
    while (!entries_.empty() && !entries_.back()) entries_.pop_back();
  }

  /// One past the highest key that may be present.
  std::size_t key_bound() const noexcept { return entries_.size(); }

  bool operator==(const SigmaMap&) const = default;

 private:
  std::vector<std::optional<SigmaEntry>> entries_;
};

/// The finished policy handed to the encoder.
struct FinalPolicy {
  std::vector<std::uint16_t> sigma;  // n + 1 machine addresses
  std::vector<bool> forced_long;     // n flags
  std::vector<JumpLength> lengths;   // n lengths; short for non-branches
  std::uint32_t program_size = 0;    // bytes, may be exactly 2^16
  std::size_t iterations_used = 0;

  std::size_t size() const noexcept { return forced_long.size(); }
};

/// Freezes a converged working map. Addresses wrap to the machine word, so a
/// program filling all of memory ends at address 0.
inline FinalPolicy to_final_policy(const Program& p, const SigmaMap& sigma, const IsaParams& isa,
                                   std::size_t iterations_used) {
  FinalPolicy f;
  f.sigma.reserve(p.size() + 1);
  for (std::size_t ppc = 0; ppc <= p.size(); ++ppc)
    f.sigma.push_back(static_cast<std::uint16_t>(isa.wrap(sigma.address(ppc))));
  f.forced_long.resize(p.size());
  f.lengths.resize(p.size());
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    f.lengths[ppc] = sigma.length(ppc);
    f.forced_long[ppc] = f.lengths[ppc] == JumpLength::long_jump;
  }
  f.program_size = static_cast<std::uint32_t>(sigma.program_size);
  f.iterations_used = iterations_used;
  return f;
}

/// Lays out `lengths` in one pass, as a working map.
inline SigmaMap layout(const Program& p, const std::vector<JumpLength>& lengths, const IsaParams& isa) {
  SigmaMap s;
  std::uint64_t pc = 0;
  s.set(0, {0, JumpLength::short_jump});
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    s.set_length(ppc, lengths[ppc]);
    pc += instruction_size(p.instructions[ppc], lengths[ppc], isa);
    s.set(ppc + 1, {pc, JumpLength::short_jump});
  }
  s.program_size = pc;
  return s;
}

/// Working map view of a final policy (un-wrapped addresses).
inline SigmaMap to_sigma_map(const Program& p, const FinalPolicy& f, const IsaParams& isa) {
  return layout(p, f.lengths, isa);
}

}  // namespace bdo
