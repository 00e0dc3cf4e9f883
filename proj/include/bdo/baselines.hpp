// Reference strategies to compare the least fixed point against:
//   all_long_sigma        every branch long,
//   gfp_short_long        greatest fixed point over short/long only,
//   brute_force_optimal   exhaustive search over every admissible assignment.
// Also the two pathological programs where absolute jumps break the classic
// short/long reasoning.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bdo/encoder.hpp"
#include "bdo/invariants.hpp"
#include "bdo/isa.hpp"
#include "bdo/policy.hpp"
#include "bdo/program.hpp"
#include "bdo/sigma.hpp"

namespace bdo {

class TooManyBranches : public Error {
 public:
  TooManyBranches(std::size_t branches, std::size_t limit)
      : Error("too many branches for exhaustive search: " + std::to_string(branches) + " > " +
              std::to_string(limit)) {}
};

inline constexpr std::size_t kDefaultMaxBranches = 10;

namespace detail {

inline FinalPolicy policy_from_lengths(const Program& p, const std::vector<JumpLength>& lengths,
                                       const IsaParams& isa, std::size_t iterations) {
  const SigmaMap s = layout(p, lengths, isa);
  if (s.program_size > isa.memory_size()) throw ProgramTooLarge(s.program_size, isa.memory_size());
  return to_final_policy(p, s, isa, iterations);
}

}  // namespace detail

inline FinalPolicy all_long_sigma(const Program& p, const LabelMap& /*labels*/,
                                  const IsaParams& isa = IsaParams{}) {
  std::vector<JumpLength> lengths(p.size(), JumpLength::short_jump);
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
    if (p.instructions[ppc].is_branch()) lengths[ppc] = JumpLength::long_jump;
  return detail::policy_from_lengths(p, lengths, isa, 1);
}

/// Called with every intermediate policy of the shrinking loop that fits in
/// memory, starting from all-long.
using GfpObserver = std::function<void(std::size_t pass, const FinalPolicy&)>;

/// Starts with every branch long and shrinks to short whatever is in short
/// range at the current addresses, until nothing shrinks. Absolute forms are
/// never used, so calls stay long.
inline FinalPolicy gfp_short_long(const Program& p, const LabelMap& labels, const IsaParams& isa = IsaParams{},
                                  const GfpObserver& observer = {}) {
  const auto targets = branch_targets(p, labels);
  std::vector<JumpLength> lengths(p.size(), JumpLength::short_jump);
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
    if (targets[ppc]) lengths[ppc] = JumpLength::long_jump;

  for (std::size_t pass = 1;; ++pass) {
    const SigmaMap s = layout(p, lengths, isa);
    if (observer && s.program_size <= isa.memory_size()) observer(pass, to_final_policy(p, s, isa, pass));

    bool shrunk = false;
    for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
      if (!targets[ppc] || lengths[ppc] != JumpLength::long_jump) continue;
      const auto m = p.instructions[ppc].jump()->op;
      const auto target = isa.wrap(s.address(*targets[ppc]));
      if (reaches(m, JumpLength::short_jump, s.address(ppc), target, isa)) {
        lengths[ppc] = JumpLength::short_jump;
        shrunk = true;
      }
    }
    if (!shrunk) {
      if (s.program_size > isa.memory_size()) throw ProgramTooLarge(s.program_size, isa.memory_size());
      return to_final_policy(p, s, isa, pass);
    }
  }
}

/// Smallest program over all admissible length assignments that are
/// self-consistent: the addresses an assignment induces must let every branch
/// reach its target with the length it was given. Ties go to the
/// lexicographically smallest assignment (short < absolute < long, earlier
/// branches first).
inline FinalPolicy brute_force_optimal(const Program& p, const LabelMap& labels,
                                       std::size_t max_branches = kDefaultMaxBranches,
                                       const IsaParams& isa = IsaParams{}) {
  const auto targets = branch_targets(p, labels);
  std::vector<std::size_t> branches;
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
    if (targets[ppc]) branches.push_back(ppc);
  if (branches.size() > max_branches) throw TooManyBranches(branches.size(), max_branches);

  const std::size_t k = branches.size();
  // address(ppc) = fixed_before[ppc] + (sizes of the first branches_before[ppc] branches)
  std::vector<std::uint64_t> fixed_before(p.size() + 1, 0);
  std::vector<std::size_t> branches_before(p.size() + 1, 0);
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    const auto* o = p.instructions[ppc].other();
    fixed_before[ppc + 1] = fixed_before[ppc] + (o ? o->size : 0);
    branches_before[ppc + 1] = branches_before[ppc] + (o ? 0 : 1);
  }

  std::vector<Mnemonic> ops(k);
  std::vector<std::vector<JumpLength>> options(k);
  for (std::size_t b = 0; b < k; ++b) {
    ops[b] = p.instructions[branches[b]].jump()->op;
    for (JumpLength l : kAllLengths)
      if (is_admissible(ops[b], l)) options[b].push_back(l);
  }

  std::vector<std::size_t> choice(k, 0);
  std::vector<std::uint64_t> prefix(k + 1, 0);
  std::vector<std::size_t> best;
  std::uint64_t best_size = std::numeric_limits<std::uint64_t>::max();

  auto address = [&](std::size_t ppc) { return fixed_before[ppc] + prefix[branches_before[ppc]]; };

  for (;;) {
    for (std::size_t b = 0; b < k; ++b)
      prefix[b + 1] = prefix[b] + branch_size(ops[b], options[b][choice[b]], isa);
    const std::uint64_t total = address(p.size());

    if (total < best_size && total <= isa.memory_size()) {
      bool feasible = true;
      for (std::size_t b = 0; b < k && feasible; ++b) {
        const auto target = isa.wrap(address(*targets[branches[b]]));
        feasible = reaches(ops[b], options[b][choice[b]], address(branches[b]), target, isa);
      }
      if (feasible) {
        best_size = total;
        best = choice;
      }
    }

    // odometer, last branch fastest
    std::size_t b = k;
    while (b > 0 && ++choice[b - 1] == options[b - 1].size()) choice[--b] = 0;
    if (b == 0) break;
  }

  if (best_size == std::numeric_limits<std::uint64_t>::max()) {
    // all-long is always self-consistent, so this only happens when nothing fits
    throw ProgramTooLarge(address(p.size()), isa.memory_size());
  }
  std::vector<JumpLength> lengths(p.size(), JumpLength::short_jump);
  for (std::size_t b = 0; b < k; ++b) lengths[branches[b]] = options[b][best[b]];
  return detail::policy_from_lengths(p, lengths, isa, 1);
}

struct BranchEncoding {
  std::size_t ppc;
  JumpLength length;
};

struct StrategyReport {
  std::string strategy;
  std::uint32_t total_bytes = 0;
  std::uint64_t total_branch_cycles = 0;
  std::vector<BranchEncoding> branches;
};

/// Summarises a policy by the encodings the assembler actually emits.
inline StrategyReport make_report(std::string strategy, const Program& p, const LabelMap& labels,
                                  const FinalPolicy& final, const IsaParams& isa = IsaParams{}) {
  StrategyReport r;
  r.strategy = std::move(strategy);
  r.total_bytes = final.program_size;
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    const auto* j = p.instructions[ppc].jump();
    if (!j) continue;
    const auto length =
        select_encoding(j->op, final.sigma[ppc], final.sigma[labels.at(j->dest)], final.forced_long[ppc], isa);
    r.branches.push_back({ppc, length});
    r.total_branch_cycles += branch_cycles(j->op, length, isa);
  }
  return r;
}

// Pathological fixtures ------------------------------------------------------

/// A program shaped like
///
///       jmp T
///       jmp X
///       ...
///   L0: ...
///       jmp L0
///       ...
///   X:
///
/// At minimal sizes L0 sits on the last byte of the first 2 KB segment and
/// `jmp L0` lies beyond short range in the next segment, so judged from the
/// starting layout it needs a long jump. Growing `jmp X` to long pushes L0
/// across the border, and `jmp L0` ends up absolute. The leading `jmp T`
/// sits exactly at the edge of short range and only notices the growth one
/// iteration later, so convergence takes three iterations.
struct SegmentPullFixture {
  Program program;
  std::size_t jump_t_ppc;
  std::size_t jump_x_ppc;
  std::size_t target_ppc;  // jmp L0
};

/// Three far branches to L1 share a segment while L1 sits just before that
/// segment. Encoding the leading `jmp X` long moves L1 into their segment and
/// lets all three become absolute, which beats the least fixed point, where
/// `jmp X` stays short and they stay long.
struct SuboptimalFixture {
  Program program;
  std::size_t jump_x_ppc;
  std::vector<std::size_t> l1_branches;
};

namespace detail {

inline Program segment_pull_program() {
  Program p;
  auto& v = p.instructions;
  v.push_back(other(10));
  v.push_back(jump(Mnemonic::jmp, "T"));
  v.push_back(jump(Mnemonic::jmp, "X"));
  v.push_back(other(125));       // puts T exactly 127 bytes past jmp T
  v.push_back(other(1000, "T"));
  v.push_back(other(908));
  v.push_back(other(1, "L0"));   // address 0x7FF before any growth
  v.push_back(other(200));
  v.push_back(jump(Mnemonic::jmp, "L0"));
  v.push_back(other(10));
  v.push_back(other(1, "X"));
  return p;
}

inline Program suboptimal_program() {
  Program p;
  auto& v = p.instructions;
  v.push_back(jump(Mnemonic::jmp, "X", "L0"));
  v.push_back(other(0x7FD, "X"));
  v.push_back(other(1, "L1"));   // 0x7FF with jmp X short, 0x800 with it long
  v.push_back(other(200));
  v.push_back(jump(Mnemonic::jmp, "L1"));
  v.push_back(other(10));
  v.push_back(jump(Mnemonic::jmp, "L1"));
  v.push_back(other(10));
  v.push_back(jump(Mnemonic::jmp, "L1"));
  v.push_back(other(1));
  return p;
}

}  // namespace detail

/// Checks the claims made about the fixture; empty on success.
inline std::string segment_pull_self_test(const SegmentPullFixture& f, const IsaParams& isa = IsaParams{}) {
  const auto& p = f.program;
  const auto labels = build_label_map(p);
  const auto dest = labels.at("L0");
  const auto start = initial_sigma(p, isa);
  const auto at_start = jump_size(start.address(f.target_ppc), isa.wrap(start.address(dest)), Mnemonic::jmp, isa);
  if (at_start != JumpLength::long_jump) return "jmp L0 does not need a long jump in the starting layout";
  if (reaches(Mnemonic::jmp, JumpLength::short_jump, start.address(f.target_ppc), isa.wrap(start.address(dest)), isa))
    return "jmp L0 is within short range";

  const auto final = fixpoint(p, isa);
  if (final.lengths[f.target_ppc] != JumpLength::absolute_jump) return "jmp L0 does not converge to absolute";
  if (final.lengths[f.jump_x_ppc] != JumpLength::long_jump) return "jmp X does not converge to long";
  if (final.iterations_used < 3) return "converges in fewer than three iterations";
  if (!check_specification(p, final, isa)) return "fixed point violates the specification";
  return {};
}

inline std::string suboptimal_self_test(const SuboptimalFixture& f, const IsaParams& isa = IsaParams{}) {
  const auto& p = f.program;
  const auto labels = build_label_map(p);
  const auto lfp = fixpoint(p, isa);
  const auto best = brute_force_optimal(p, labels, kDefaultMaxBranches, isa);
  if (lfp.lengths[f.jump_x_ppc] != JumpLength::short_jump) return "least fixed point does not keep jmp X short";
  for (auto b : f.l1_branches) {
    if (lfp.lengths[b] != JumpLength::long_jump) return "least fixed point does not make the L1 branches long";
    if (best.lengths[b] != JumpLength::absolute_jump) return "optimum does not make the L1 branches absolute";
  }
  if (!(best.program_size < lfp.program_size)) return "optimum is not strictly smaller";
  return {};
}

inline SegmentPullFixture make_segment_pull_fixture() {
  SegmentPullFixture f{detail::segment_pull_program(), 1, 2, 8};
  if (auto why = segment_pull_self_test(f); !why.empty()) throw ContractViolation("segment-pull fixture rejected: " + why);
  return f;
}

inline SuboptimalFixture make_suboptimal_fixture() {
  SuboptimalFixture f{detail::suboptimal_program(), 0, {4, 6, 8}};
  if (auto why = suboptimal_self_test(f); !why.empty()) throw ContractViolation("suboptimal fixture rejected: " + why);
  return f;
}

}  // namespace bdo
