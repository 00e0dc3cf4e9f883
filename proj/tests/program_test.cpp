#include <gtest/gtest.h>

#include "bdo/program.hpp"
#include "support/random_program.hpp"

namespace bdo {
namespace {

TEST(Parse, MinimalProgram) {
  const auto p = parse_program("L0: nop 1\n sjmp L0");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.instructions[0].label, "L0");
  ASSERT_NE(p.instructions[0].other(), nullptr);
  EXPECT_EQ(p.instructions[0].other()->size, 1u);
  ASSERT_NE(p.instructions[1].jump(), nullptr);
  EXPECT_EQ(p.instructions[1].jump()->op, Mnemonic::jmp);
  EXPECT_EQ(p.instructions[1].jump()->dest, "L0");
}

TEST(Parse, EmptyInput) {
  EXPECT_TRUE(parse_program("").empty());
  EXPECT_TRUE(parse_program("\n  ; only a comment\n\n").empty());
}

TEST(Parse, UndefinedDestinationIsALabelError) {
  const auto p = parse_program("jz X");
  ASSERT_EQ(p.size(), 1u);
  try {
    build_label_map(p);
    FAIL() << "expected LabelError";
  } catch (const LabelError& e) {
    EXPECT_EQ(e.label(), "X");
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Parse, LabelOnItsOwnLine) {
  const auto p = parse_program("top:\n  other 4\n  jnz top\n");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.instructions[0].label, "top");
  EXPECT_EQ(p.instructions[0].line, 2u);
}

TEST(Parse, MnemonicsAreCaseInsensitive) {
  const auto p = parse_program("A: NOP 2\nCJNE A\nLCALL A\nAJMP A");
  EXPECT_EQ(p.instructions[1].jump()->op, Mnemonic::cjne);
  EXPECT_EQ(p.instructions[2].jump()->op, Mnemonic::call);
  EXPECT_EQ(p.instructions[3].jump()->op, Mnemonic::jmp);
}

TEST(Parse, Errors) {
  auto line_of = [](std::string_view text) -> std::size_t {
    try {
      parse_program(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("nop 1\nfoo 3"), 2u);
  EXPECT_EQ(line_of("nop 0"), 1u);
  EXPECT_EQ(line_of("nop x"), 1u);
  EXPECT_EQ(line_of("jmp"), 1u);
  EXPECT_EQ(line_of("jmp a b"), 1u);
  EXPECT_EQ(line_of("A:\nB: nop 1"), 2u);
  EXPECT_EQ(line_of("nop 1\nEND:"), 2u);
  EXPECT_EQ(line_of("1x: nop 1"), 1u);
}

TEST(LabelMap, FromParseExample) {
  const auto labels = build_label_map(parse_program("L0: nop 1\n sjmp L0"));
  EXPECT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels.at("L0"), 0u);
}

TEST(LabelMap, DuplicateNamesTheLabel) {
  const auto p = parse_program("L0: nop 1\nL0: nop 2\njmp L0");
  try {
    build_label_map(p);
    FAIL() << "expected LabelError";
  } catch (const LabelError& e) {
    EXPECT_EQ(e.label(), "L0");
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("L0"), std::string::npos);
  }
}

TEST(LabelMap, ThreeOfFive) {
  const auto p = parse_program("a: nop 1\nnop 1\nb: jmp c\nnop 1\nc: jmp a");
  const auto labels = build_label_map(p);
  EXPECT_EQ(labels.size(), 3u);
  for (const auto& [name, ppc] : labels.entries()) EXPECT_LT(ppc, 5u);
  EXPECT_EQ(labels.at("c"), 4u);
}

TEST(LabelMap, AtOnMissingIsContractViolation) {
  EXPECT_THROW(LabelMap{}.at("nowhere"), ContractViolation);
}

// Against a linear scan over random programs.
TEST(LabelMap, MatchesLinearScan) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto p = testing::random_program(seed);
    const auto labels = build_label_map(p);
    std::size_t count = 0;
    for (std::size_t ppc = 0; ppc < p.size(); ++ppc)
      if (p.instructions[ppc].label) {
        ++count;
        EXPECT_EQ(labels.at(*p.instructions[ppc].label), ppc);
      }
    EXPECT_EQ(labels.size(), count);
  }
}

TEST(Fetch, Bounds) {
  const auto p = parse_program("L0: nop 1\n sjmp L0");
  EXPECT_TRUE(fetch_pseudo_instruction(p, 0).other());
  EXPECT_TRUE(fetch_pseudo_instruction(p, 1).jump());
  EXPECT_THROW(fetch_pseudo_instruction(p, 2), ContractViolation);
}

TEST(Print, RoundTripsRandomPrograms) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto p = testing::random_program(seed);
    EXPECT_EQ(parse_program(print_program(p)), p);
  }
}

TEST(BranchCount, CountsJumps) {
  EXPECT_EQ(branch_count(parse_program("a: nop 1\ncall a\njc a\nnop 3")), 2u);
}

}  // namespace
}  // namespace bdo
