// Least-fixed-point branch relaxation.
//
// Every branch starts at its shortest admissible encoding. Each iteration
// folds `step_instruction` over the program, re-deciding every branch from
// the addresses known so far; encodings only ever grow, so the loop reaches
// a fixed point after at most two changes per branch.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "bdo/invariants.hpp"
#include "bdo/isa.hpp"
#include "bdo/program.hpp"
#include "bdo/sigma.hpp"

namespace bdo {

class ProgramTooLarge : public Error {
 public:
  ProgramTooLarge(std::uint64_t size, std::uint32_t limit)
      : Error("program too large: " + std::to_string(size) + " bytes exceeds the " +
              std::to_string(limit / 1024) + " KB address space"),
        size_(size) {}
  std::uint64_t size() const noexcept { return size_; }

 private:
  std::uint64_t size_;
};

/// The iteration cap was hit before the encodings stabilised.
class NoFixpoint : public Error {
 public:
  explicit NoFixpoint(std::size_t iterations)
      : Error("no fixed point after " + std::to_string(iterations) + " iterations") {}
};

/// All branches at their minimal admissible length (calls start absolute).
inline SigmaMap initial_sigma(const Program& p, const IsaParams& isa) {
  std::vector<JumpLength> lengths(p.size(), JumpLength::short_jump);
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
    if (const auto* j = p.instructions[ppc].jump()) lengths[ppc] = minimal_length(j->op);
  return layout(p, lengths, isa);
}

struct StepAccumulator {
  std::int64_t added = 0;  // bytes grown so far in this iteration
  std::uint64_t pc = 0;
  SigmaMap sigma;
};

inline StepAccumulator start_accumulator() {
  StepAccumulator acc;
  acc.sigma.set(0, {0, JumpLength::short_jump});
  return acc;
}

/// One fold step: decide the encoding of the instruction at `ppc`.
inline StepAccumulator step_instruction(const LabelMap& labels, const SigmaMap& old_sigma,
                                        const PseudoInstruction& instr, std::size_t ppc,
                                        StepAccumulator acc, const IsaParams& isa) {
  JumpLength length = JumpLength::short_jump;
  if (const auto* j = instr.jump()) {
    const auto dest = labels.at(j->dest);
    std::uint64_t target;
    if (dest <= ppc) {
      target = acc.sigma.address(dest);  // already placed in this iteration
    } else {
      // not placed yet: last iteration's address, shifted by what we grew since
      target = static_cast<std::uint64_t>(static_cast<std::int64_t>(old_sigma.address(dest)) + acc.added);
    }
    length = jump_size(acc.pc, isa.wrap(target), j->op, isa);
  }

  const JumpLength old_length = old_sigma.length(ppc);
  const JumpLength new_length = max_length(old_length, length);
  const auto old_size = instruction_size(instr, old_length, isa);
  const auto new_size = instruction_size(instr, new_length, isa);

  acc.added += static_cast<std::int64_t>(new_size) - static_cast<std::int64_t>(old_size);
  acc.sigma.set_length(ppc, new_length);
  acc.sigma.set(ppc + 1, {acc.pc + new_size, JumpLength::short_jump});
  acc.pc += new_size;
  return acc;
}

struct IterationResult {
  bool changed = false;
  SigmaMap sigma;
  std::int64_t added = 0;
};

namespace detail {

inline StepAccumulator fold(const Program& p, const LabelMap& labels, const SigmaMap& old_sigma,
                            const IsaParams& isa) {
  StepAccumulator acc = start_accumulator();
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
    acc = step_instruction(labels, old_sigma, p.instructions[ppc], ppc, std::move(acc), isa);
  return acc;
}

}  // namespace detail

/// One pass over the program. Empty if the program no longer fits in memory;
/// a program of exactly 2^16 bytes still fits.
inline std::optional<IterationResult> iterate(const Program& p, const LabelMap& labels,
                                              const SigmaMap& old_sigma, const IsaParams& isa) {
  StepAccumulator acc = detail::fold(p, labels, old_sigma, isa);
  if (acc.pc > isa.memory_size()) return std::nullopt;

  IterationResult r;
  r.sigma = std::move(acc.sigma);
  r.sigma.program_size = acc.pc;
  r.added = acc.added;
  for (std::size_t ppc = 0; ppc < p.size() && !r.changed; ++ppc)
    r.changed = r.sigma.length(ppc) != old_sigma.length(ppc);
  return r;
}

/// Hooks for watching the fixed-point loop; all optional.
struct FixpointObserver {
  /// Called once with the starting map (iteration 0).
  std::function<void(const SigmaMap&)> on_start;
  /// Called after every successful iteration k >= 1.
  std::function<void(std::size_t k, const SigmaMap& old_sigma, const IterationResult&)> on_iteration;
  /// Called when iteration k overflowed; `old_sigma` is its input.
  std::function<void(std::size_t k, const SigmaMap& old_sigma)> on_overflow;
};

struct FixpointOptions {
  /// Overrides the default iteration cap.
  std::optional<std::size_t> max_iterations;
  FixpointObserver observer;
};

/// Iteration cap for a program of `n` instructions. Each branch changes at
/// most twice, so at most 2n iterations change something and one more
/// confirms the fixed point.
inline std::size_t iteration_bound(std::size_t n) noexcept { return 2 * n + 1; }

inline FinalPolicy fixpoint(const Program& p, const IsaParams& isa, const FixpointOptions& options = {}) {
  const LabelMap labels = build_label_map(p);
  SigmaMap old_sigma = initial_sigma(p, isa);
  if (old_sigma.program_size > isa.memory_size())
    throw ProgramTooLarge(old_sigma.program_size, isa.memory_size());
  if (options.observer.on_start) options.observer.on_start(old_sigma);

  const std::size_t cap = options.max_iterations.value_or(iteration_bound(p.size()));
  for (std::size_t k = 1; k <= cap; ++k) {
    auto r = iterate(p, labels, old_sigma, isa);
    if (!r) {
      if (options.observer.on_overflow) options.observer.on_overflow(k, old_sigma);
      throw ProgramTooLarge(detail::fold(p, labels, old_sigma, isa).pc, isa.memory_size());
    }
    if (options.observer.on_iteration) options.observer.on_iteration(k, old_sigma, *r);
    if (!r->changed) {
      if (auto c = check_sigma_compact(p, labels, r->sigma, isa); !c)
        throw ContractViolation("converged map is not compact at ppc " +
                                std::to_string(c.first_violation->ppc) + ": " + c.first_violation->detail);
      return to_final_policy(p, r->sigma, isa, k);
    }
    old_sigma = std::move(r->sigma);
  }
  if (options.max_iterations) throw NoFixpoint(cap);
  throw ContractViolation("no fixed point within " + std::to_string(cap) + " iterations");
}

}  // namespace bdo
