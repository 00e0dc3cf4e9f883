#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bdo/cli.hpp"

namespace bdo {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bdo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto path = (dir_ / name).string();
    std::ofstream(path, std::ios::binary) << text;
    return path;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run_cfg(const RunConfig& cfg) {
    out_.str("");
    err_.str("");
    return run(cfg, out_, err_);
  }

  RunConfig config_for(const std::string& text, Strategy s = Strategy::lfp) {
    RunConfig cfg;
    cfg.input = write("in.asm", text);
    cfg.strategy = s;
    return cfg;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string segment_pull_text() { return print_program(make_segment_pull_fixture().program); }
std::string suboptimal_text() { return print_program(make_suboptimal_fixture().program); }

TEST_F(CliTest, MinimalProgramReport) {
  auto cfg = config_for("L0: nop 1\njmp L0\n");
  cfg.report = true;
  ASSERT_EQ(run_cfg(cfg), 0) << err_.str();
  EXPECT_NE(out_.str().find("total_bytes: 3"), std::string::npos);
  EXPECT_NE(out_.str().find("lfp        3"), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("iterations_used: 1 (bound 2n = 4)"), std::string::npos);
}

TEST_F(CliTest, TooLargeProgram) {
  ASSERT_EQ(run_cfg(config_for("other 70000\n")), kExitTooLarge);
  EXPECT_NE(err_.str().find("64 KB"), std::string::npos) << err_.str();
}

TEST_F(CliTest, OverflowDuringIteration) {
  EXPECT_EQ(run_cfg(config_for("jmp X\nother 65533\nX: nop 1\n")), kExitTooLarge);
  EXPECT_NE(err_.str().find("65537"), std::string::npos) << err_.str();
}

TEST_F(CliTest, OptimalRejectsManyBranches) {
  std::string text = "L: nop 1\n";
  for (int i = 0; i < 20; ++i) text += "jmp L\n";
  EXPECT_EQ(run_cfg(config_for(text, Strategy::optimal)), kExitInputError);
  EXPECT_NE(err_.str().find("too many branches"), std::string::npos) << err_.str();
}

TEST_F(CliTest, ParseAndLabelErrorsNameTheLine) {
  EXPECT_EQ(run_cfg(config_for("nop 1\nbogus 2\n")), kExitInputError);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
  EXPECT_EQ(run_cfg(config_for("nop 1\njz nowhere\n")), kExitInputError);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos);
  EXPECT_NE(err_.str().find("nowhere"), std::string::npos);
}

TEST_F(CliTest, IoErrors) {
  RunConfig cfg;
  cfg.input = path("missing.asm");
  EXPECT_EQ(run_cfg(cfg), kExitIo);
  auto ok = config_for("nop 1\n");
  ok.dump_sigma = (dir_ / "no" / "such" / "dir" / "d.jsonl").string();
  EXPECT_EQ(run_cfg(ok), kExitIo);
}

TEST_F(CliTest, UnknownIsa) {
  auto cfg = config_for("nop 1\n");
  cfg.isa = "z80";
  EXPECT_EQ(run_cfg(cfg), kExitInputError);
}

TEST_F(CliTest, EmptyProgramDump) {
  auto cfg = config_for("");
  cfg.dump_sigma = path("d.jsonl");
  ASSERT_EQ(run_cfg(cfg), 0) << err_.str();
  EXPECT_EQ(slurp(path("d.jsonl")),
            "{\"address\":0,\"address_hex\":\"0x0000\",\"forced_long\":false,\"length\":\"short\",\"ppc\":0}\n"
            "{\"iterations_used\":1,\"total_bytes\":0}\n");
}

TEST_F(CliTest, DumpRoundTrips) {
  for (auto s : {Strategy::lfp, Strategy::all_long, Strategy::gfp, Strategy::optimal}) {
    auto cfg = config_for(segment_pull_text(), s);
    cfg.dump_sigma = path("d.jsonl");
    ASSERT_EQ(run_cfg(cfg), 0) << err_.str();
    std::ifstream in(path("d.jsonl"));
    const auto f = parse_sigma_dump(in);
    const auto p = parse_program(segment_pull_text());
    EXPECT_TRUE(check_specification(p, f, IsaParams::mcs51())) << to_string(s);
    EXPECT_EQ(f.sigma.size(), p.size() + 1);
  }
}

TEST_F(CliTest, SuboptimalDumpsDiffer) {
  auto lengths_of = [&](Strategy s) {
    auto cfg = config_for(suboptimal_text(), s);
    cfg.dump_sigma = path("d.jsonl");
    EXPECT_EQ(run_cfg(cfg), 0) << err_.str();
    std::ifstream in(path("d.jsonl"));
    return parse_sigma_dump(in).lengths;
  };
  const auto lfp = lengths_of(Strategy::lfp);
  const auto best = lengths_of(Strategy::optimal);
  ASSERT_EQ(lfp.size(), best.size());
  std::size_t differ = 0;
  for (std::size_t i = 0; i < lfp.size(); ++i) differ += lfp[i] != best[i];
  EXPECT_GE(differ, 3u);
}

TEST_F(CliTest, CheckInvariantsAllStrategies) {
  for (auto s : {Strategy::lfp, Strategy::all_long, Strategy::gfp, Strategy::optimal}) {
    auto cfg = config_for(suboptimal_text(), s);
    cfg.check_invariants = true;
    EXPECT_EQ(run_cfg(cfg), 0) << to_string(s) << "\n" << out_.str() << err_.str();
    EXPECT_NE(out_.str().find("specification"), std::string::npos);
    EXPECT_NE(out_.str().find("verify_targets"), std::string::npos);
  }
}

TEST_F(CliTest, IterationCapExitsThree) {
  auto cfg = config_for(segment_pull_text());
  cfg.max_iterations_override = 1;
  EXPECT_EQ(run_cfg(cfg), kExitInvariant);
  EXPECT_NE(err_.str().find("no fixed point"), std::string::npos);
}

TEST_F(CliTest, TraceShowsLongThenAbsolute) {
  const auto fx = make_segment_pull_fixture();
  auto cfg = config_for(print_program(fx.program));
  cfg.trace = path("t.jsonl");
  ASSERT_EQ(run_cfg(cfg), 0) << err_.str();
  std::ifstream in(path("t.jsonl"));
  std::string line;
  std::vector<std::string> required;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.at("ppc") == fx.target_ppc) required.push_back(j.at("required"));
  }
  ASSERT_EQ(required.size(), 4u);  // iterations 0..3
  EXPECT_EQ(required[0], "long");
  EXPECT_EQ(required.back(), "absolute");
}

TEST_F(CliTest, TraceRequiresLfp) {
  auto cfg = config_for("nop 1\n", Strategy::gfp);
  cfg.trace = path("t.jsonl");
  EXPECT_EQ(run_cfg(cfg), kExitInputError);
}

TEST_F(CliTest, IsaParamsWidenCjne) {
  auto cfg = config_for("X: nop 1\ncjne X\n");
  cfg.isa_params = write("isa.json", R"({"conditional_short_size": {"cjne": 3}})");
  cfg.emit_bin = path("o.bin");
  ASSERT_EQ(run_cfg(cfg), 0) << err_.str();
  EXPECT_EQ(slurp(path("o.bin")), std::string("\x00\xB5\x00\xFC", 4));

  cfg.isa_params = write("bad.json", R"({"conditional_short_size": {"jmp": 3}})");
  EXPECT_EQ(run_cfg(cfg), kExitInputError);
  cfg.isa_params = write("bad2.json", "{not json");
  EXPECT_EQ(run_cfg(cfg), kExitInputError);
}

TEST_F(CliTest, ExactFitEndsAtZero) {
  auto cfg = config_for("L0: other 65533\njmp L0\n");
  cfg.dump_sigma = path("d.jsonl");
  cfg.emit_bin = path("o.bin");
  cfg.check_invariants = true;
  ASSERT_EQ(run_cfg(cfg), 0) << err_.str();
  std::ifstream in(path("d.jsonl"));
  const auto f = parse_sigma_dump(in);
  EXPECT_EQ(f.sigma.back(), 0u);
  EXPECT_EQ(f.program_size, 65536u);
  EXPECT_EQ(fs::file_size(path("o.bin")), 65536u);
}

// The real binary: same inputs give byte-identical outputs.
TEST_F(CliTest, BinaryIsDeterministic) {
  const std::string exe = BDO_CLI_PATH;
  const auto in = write("in.asm", suboptimal_text());
  std::string outputs[2];
  for (int k = 0; k < 2; ++k) {
    const auto tag = std::to_string(k);
    const std::string cmd = "\"" + exe + "\" \"" + in + "\" --report --check-invariants --emit-bin \"" +
                            path("o" + tag + ".bin") + "\" --dump-sigma \"" + path("d" + tag + ".jsonl") +
                            "\" > \"" + path("stdout" + tag) + "\"";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    outputs[k] = slurp(path("o" + tag + ".bin")) + slurp(path("d" + tag + ".jsonl")) + slurp(path("stdout" + tag));
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_FALSE(outputs[0].empty());
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string exe = BDO_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int rc = std::system(("\"" + exe + "\" " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  EXPECT_EQ(status("\"" + write("ok.asm", "L0: nop 1\njmp L0\n") + "\" --report"), 0);
  EXPECT_EQ(status("\"" + write("big.asm", "other 70000\n") + "\""), 2);
  EXPECT_EQ(status("\"" + write("bad.asm", "jz nowhere\n") + "\""), 1);
  EXPECT_EQ(status("\"" + path("missing.asm") + "\""), 4);
  EXPECT_EQ(status("\"" + path("ok.asm") + "\" --strategy fastest"), 1);
  EXPECT_EQ(status("--help"), 0);
}

}  // namespace
}  // namespace bdo
