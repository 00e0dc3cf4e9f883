#include <gtest/gtest.h>

#include "bdo/isa.hpp"

namespace bdo {
namespace {

const IsaParams kIsa = IsaParams::mcs51();
constexpr auto S = JumpLength::short_jump;
constexpr auto A = JumpLength::absolute_jump;
constexpr auto L = JumpLength::long_jump;

TEST(ShortJumpCond, ZeroDisplacement) {
  const auto c = short_jump_cond(0x0100, 0x0100, kIsa);
  EXPECT_TRUE(c.in_range);
  EXPECT_EQ(c.displacement, 0);
}

TEST(ShortJumpCond, BackwardInRange) {
  const auto c = short_jump_cond(0x0100, 0x0090, kIsa);
  EXPECT_TRUE(c.in_range);
  EXPECT_EQ(c.displacement, -112);
}

TEST(ShortJumpCond, ForwardOutOfRange) {
  const auto c = short_jump_cond(0x00F0, 0x0200, kIsa);
  EXPECT_FALSE(c.in_range);
  EXPECT_EQ(c.displacement, 272);
}

TEST(ShortJumpCond, RangeEdges) {
  EXPECT_TRUE(short_jump_cond(0x1000, 0x1000 + 127, kIsa).in_range);
  EXPECT_FALSE(short_jump_cond(0x1000, 0x1000 + 128, kIsa).in_range);
  EXPECT_TRUE(short_jump_cond(0x1000, 0x1000 - 128, kIsa).in_range);
  EXPECT_FALSE(short_jump_cond(0x1000, 0x1000 - 129, kIsa).in_range);
}

TEST(AbsoluteJumpCond, SameSegment) { EXPECT_TRUE(absolute_jump_cond(0x00F0, 0x0200, kIsa)); }

TEST(AbsoluteJumpCond, NeighbouringSegments) { EXPECT_FALSE(absolute_jump_cond(0x07FE, 0x0802, kIsa)); }

TEST(AbsoluteJumpCond, Reflexive) {
  for (std::uint32_t a : {0u, 0x7FFu, 0x800u, 0x1234u, 0xFFFFu}) EXPECT_TRUE(absolute_jump_cond(a, a, kIsa));
}

TEST(JumpSize, BackwardShort) { EXPECT_EQ(jump_size(1, 0, Mnemonic::jmp, kIsa), S); }

TEST(JumpSize, ForwardSameSegmentIsAbsolute) { EXPECT_EQ(jump_size(0x00F0, 0x0200, Mnemonic::jmp, kIsa), A); }

TEST(JumpSize, ConditionalCannotBeAbsolute) { EXPECT_EQ(jump_size(0x00F0, 0x0200, Mnemonic::jz, kIsa), L); }

TEST(JumpSize, CallNeverShort) {
  EXPECT_EQ(jump_size(0x0100, 0x0102, Mnemonic::call, kIsa), A);
  EXPECT_EQ(jump_size(0x07F0, 0x0900, Mnemonic::call, kIsa), L);
}

TEST(JumpSize, ShortReachWrapsAroundMemory) {
  EXPECT_EQ(jump_size(0xFFFE, 0x0000, Mnemonic::jmp, kIsa), S);
}

TEST(JumpSize, CrossSegmentFarIsLong) { EXPECT_EQ(jump_size(0x0100, 0x0900, Mnemonic::jmp, kIsa), L); }

TEST(BranchSize, TableSizes) {
  EXPECT_EQ(branch_size(Mnemonic::jmp, S, kIsa), 2u);
  EXPECT_EQ(branch_size(Mnemonic::jmp, A, kIsa), 2u);
  EXPECT_EQ(branch_size(Mnemonic::jmp, L, kIsa), 3u);
  EXPECT_EQ(branch_size(Mnemonic::call, A, kIsa), 2u);
  EXPECT_EQ(branch_size(Mnemonic::call, L, kIsa), 3u);
  EXPECT_EQ(branch_size(Mnemonic::jz, S, kIsa), 2u);
  EXPECT_EQ(branch_size(Mnemonic::jz, L, kIsa), 5u);
  EXPECT_EQ(branch_size(Mnemonic::cjne, L, kIsa), 7u);
}

TEST(BranchSize, InadmissibleIsContractViolation) {
  EXPECT_THROW(branch_size(Mnemonic::call, S, kIsa), ContractViolation);
  EXPECT_THROW(branch_size(Mnemonic::jnc, A, kIsa), ContractViolation);
}

TEST(BranchCycles, ExpandedConditionalsSumTheirParts) {
  EXPECT_EQ(branch_cycles(Mnemonic::jmp, S, kIsa), 2u);
  EXPECT_EQ(branch_cycles(Mnemonic::jmp, L, kIsa), 3u);
  EXPECT_EQ(branch_cycles(Mnemonic::jc, L, kIsa), 5u);
  EXPECT_EQ(branch_cycles(Mnemonic::cjne, L, kIsa), 7u);
}

TEST(MaxLength, Join) {
  EXPECT_EQ(max_length(S, L), L);
  EXPECT_EQ(max_length(A, A), A);
  EXPECT_EQ(max_length(S, A), A);
  EXPECT_EQ(max_length(L, S), L);
}

TEST(MaxLength, AbsoluteThenShortGoesLong) { EXPECT_EQ(max_length(A, S), L); }

TEST(MaxLength, NeverShrinks) {
  for (auto a : kAllLengths)
    for (auto b : kAllLengths) {
      EXPECT_TRUE(jmpleq(a, max_length(a, b)));
      EXPECT_TRUE(jmpleq(b, max_length(a, b)));
    }
}

TEST(Admissibility, ByKind) {
  EXPECT_TRUE(is_admissible(Mnemonic::jmp, S));
  EXPECT_TRUE(is_admissible(Mnemonic::jmp, A));
  EXPECT_FALSE(is_admissible(Mnemonic::call, S));
  EXPECT_FALSE(is_admissible(Mnemonic::cjne, A));
  for (auto m : kAllMnemonics) EXPECT_TRUE(is_admissible(m, L));
}

TEST(Names, RoundTrip) {
  for (auto m : kAllMnemonics) EXPECT_EQ(mnemonic_from_string(to_string(m)), m);
  for (auto l : kAllLengths) EXPECT_EQ(jump_length_from_string(to_string(l)), l);
  EXPECT_FALSE(mnemonic_from_string("ljmp").has_value());
}

// Exhaustive over a window of pc/target pairs: the chosen length reaches,
// and nothing smaller does.
TEST(JumpSize, MinimalAndReachingProperty) {
  for (auto m : kAllMnemonics)
    for (std::uint32_t pc = 0x7A0; pc < 0x860; pc += 3)
      for (std::uint32_t t = 0x600; t < 0xA00; t += 7) {
        const auto len = jump_size(pc, t, m, kIsa);
        ASSERT_TRUE(reaches(m, len, pc, t, kIsa));
        for (auto smaller : kAllLengths) {
          if (smaller < len) {
            ASSERT_FALSE(reaches(m, smaller, pc, t, kIsa));
          }
        }
      }
}

}  // namespace
}  // namespace bdo
