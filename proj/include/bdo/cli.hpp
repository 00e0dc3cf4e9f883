// Command-line pipeline: parse -> relax -> check -> encode -> report.
#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdo/baselines.hpp"
#include "bdo/encoder.hpp"
#include "bdo/invariants.hpp"
#include "bdo/isa.hpp"
#include "bdo/policy.hpp"
#include "bdo/program.hpp"
#include "bdo/sigma.hpp"

namespace bdo {

enum class Strategy { lfp, all_long, gfp, optimal };

inline std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::lfp: return "lfp";
    case Strategy::all_long: return "all-long";
    case Strategy::gfp: return "gfp";
    case Strategy::optimal: return "optimal";
  }
  return "?";
}

inline std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (auto v : {Strategy::lfp, Strategy::all_long, Strategy::gfp, Strategy::optimal})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitTooLarge = 2,
  kExitInvariant = 3,
  kExitIo = 4,
};

struct RunConfig {
  std::string input;
  std::string isa = "mcs51";
  std::optional<std::string> isa_params;
  Strategy strategy = Strategy::lfp;
  std::optional<std::string> emit_bin;
  std::optional<std::string> dump_sigma;
  std::optional<std::string> trace;
  bool check_invariants = false;
  bool report = false;
  std::optional<std::size_t> max_iterations_override;
  std::size_t max_branches = kDefaultMaxBranches;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ISA parameters file ---------------------------------------------------------
//
//   { "conditional_short_size": { "cjne": 3, "jz": 2 } }
//
// Only the sizes of the short conditional forms can be overridden; the jump
// table itself is fixed by the instruction set.

inline IsaParams load_isa(const std::string& name, const std::optional<std::string>& params_path) {
  if (name != "mcs51") throw Error("unknown isa '" + name + "' (only mcs51 is built in)");
  IsaParams isa = IsaParams::mcs51();
  if (!params_path) return isa;

  std::ifstream in(*params_path);
  if (!in) throw IoError("cannot read isa parameters '" + *params_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad isa parameters: " + std::string(e.what()));
  }
  if (!j.is_object()) throw Error("bad isa parameters: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "conditional_short_size") throw Error("bad isa parameters: unknown key '" + key + "'");
    if (!value.is_object()) throw Error("bad isa parameters: conditional_short_size must be an object");
    for (const auto& [mn, size] : value.items()) {
      const auto m = mnemonic_from_string(mn);
      if (!m || kind_of(*m) != BranchKind::conditional)
        throw Error("bad isa parameters: '" + mn + "' is not a conditional branch");
      if (!size.is_number_unsigned() || size.get<unsigned>() < 2 || size.get<unsigned>() > 16)
        throw Error("bad isa parameters: size of '" + mn + "' must be an integer in [2, 16]");
      isa.conditional_short_size[static_cast<std::size_t>(*m)] = size.get<std::uint32_t>();
    }
  }
  return isa;
}

// Sigma dump ------------------------------------------------------------------
//
// One JSON object per line: a record per pseudo-address 0..n, then a summary.
//   {"address":3,"address_hex":"0x0003","forced_long":false,"length":"short","ppc":1}
//   {"iterations_used":2,"total_bytes":3}

inline std::string hex16(std::uint32_t a) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << std::setw(4) << std::setfill('0') << a;
  return os.str();
}

inline void dump_sigma(const FinalPolicy& final, std::ostream& out) {
  for (std::size_t ppc = 0; ppc < final.sigma.size(); ++ppc) {
    const bool in_program = ppc < final.size();
    nlohmann::json rec = {
        {"ppc", ppc},
        {"address", final.sigma[ppc]},
        {"address_hex", hex16(final.sigma[ppc])},
        {"length", to_string(in_program ? final.lengths[ppc] : JumpLength::short_jump)},
        {"forced_long", in_program && final.forced_long[ppc]},
    };
    out << rec.dump() << '\n';
  }
  out << nlohmann::json{{"iterations_used", final.iterations_used}, {"total_bytes", final.program_size}}.dump()
      << '\n';
}

inline void dump_sigma(const FinalPolicy& final, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write sigma dump '" + path + "'");
  dump_sigma(final, out);
  if (!out) throw IoError("failed writing sigma dump '" + path + "'");
}

inline FinalPolicy parse_sigma_dump(std::istream& in) {
  FinalPolicy f;
  std::string line;
  bool summary = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (summary) throw Error("sigma dump: record after summary");
    const auto j = nlohmann::json::parse(line);
    if (j.contains("total_bytes")) {
      f.program_size = j.at("total_bytes").get<std::uint32_t>();
      f.iterations_used = j.at("iterations_used").get<std::size_t>();
      summary = true;
      continue;
    }
    if (j.at("ppc").get<std::size_t>() != f.sigma.size()) throw Error("sigma dump: records out of order");
    f.sigma.push_back(j.at("address").get<std::uint16_t>());
    const auto length = jump_length_from_string(j.at("length").get<std::string>());
    if (!length) throw Error("sigma dump: bad length");
    f.lengths.push_back(*length);
    f.forced_long.push_back(j.at("forced_long").get<bool>());
  }
  if (!summary || f.sigma.empty()) throw Error("sigma dump: missing records or summary");
  // the record for ppc = n is the end address only
  f.lengths.pop_back();
  f.forced_long.pop_back();
  return f;
}

// Iteration trace ---------------------------------------------------------------
//
// For each least-fixed-point iteration (0 = starting layout) and each branch:
// its address, stored length, and the length its span at that layout calls
// for ("required").

inline void trace_iteration(std::ostream& out, std::size_t iteration, const Program& p, const LabelMap& labels,
                            const SigmaMap& sigma, const IsaParams& isa) {
  for (std::size_t ppc = 0; ppc < p.size(); ++ppc) {
    const auto* j = p.instructions[ppc].jump();
    if (!j) continue;
    const auto required = jump_size(sigma.address(ppc), isa.wrap(sigma.address(labels.at(j->dest))), j->op, isa);
    out << nlohmann::json{{"iteration", iteration},
                          {"ppc", ppc},
                          {"address", sigma.address(ppc)},
                          {"length", to_string(sigma.length(ppc))},
                          {"required", to_string(required)}}
               .dump()
        << '\n';
  }
}

// Pipeline --------------------------------------------------------------------

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void print_checks(std::ostream& out, const std::vector<CheckReport>& reports) {
  out << "invariant                 result  first violation\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(26) << r.name << std::setw(8) << (r.holds ? "ok" : "FAIL");
    if (r.first_violation) out << "ppc " << r.first_violation->ppc << ": " << r.first_violation->detail;
    out << '\n';
  }
}

inline void print_report(std::ostream& out, const std::vector<StrategyReport>& reports,
                         const std::vector<std::string>& skipped) {
  out << "strategy   bytes   branch cycles  short  absolute  long\n";
  for (const auto& r : reports) {
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& b : r.branches) ++counts[static_cast<int>(b.length)];
    out << std::left << std::setw(11) << r.strategy << std::setw(8) << r.total_bytes << std::setw(15)
        << r.total_branch_cycles << std::setw(7) << counts[0] << std::setw(10) << counts[1] << counts[2] << '\n';
  }
  for (const auto& s : skipped) out << s << '\n';
}

struct Produced {
  FinalPolicy final;
  std::vector<SigmaMap> iterations;  // lfp only: starting map then every iteration
  std::vector<std::int64_t> added;   // growth of each iteration
};

inline Produced produce(Strategy s, const Program& p, const LabelMap& labels, const IsaParams& isa,
                        const RunConfig& cfg) {
  Produced out;
  switch (s) {
    case Strategy::lfp: {
      FixpointOptions opt;
      opt.max_iterations = cfg.max_iterations_override;
      opt.observer.on_start = [&](const SigmaMap& m) { out.iterations.push_back(m); };
      opt.observer.on_iteration = [&](std::size_t, const SigmaMap&, const IterationResult& r) {
        out.iterations.push_back(r.sigma);
        out.added.push_back(r.added);
      };
      out.final = fixpoint(p, isa, opt);
      break;
    }
    case Strategy::all_long: out.final = all_long_sigma(p, labels, isa); break;
    case Strategy::gfp: out.final = gfp_short_long(p, labels, isa); break;
    case Strategy::optimal: out.final = brute_force_optimal(p, labels, cfg.max_branches, isa); break;
  }
  return out;
}

inline std::vector<CheckReport> run_checks(Strategy s, const Program& p, const LabelMap& labels,
                                           const Produced& prod, const MachineImage& img, const IsaParams& isa) {
  std::vector<CheckReport> out;
  const SigmaMap final_map = to_sigma_map(p, prod.final, isa);
  out.push_back(check_specification(p, prod.final, isa));
  out.push_back(check_out_of_program_none(p, final_map));
  out.push_back(check_not_jump_default(p, final_map));
  out.push_back(check_sigma_compact_unsafe(p, labels, final_map, isa));
  out.push_back(check_sigma_compact(p, labels, final_map, isa));
  if (s == Strategy::lfp && prod.iterations.size() >= 2) {
    CheckReport inc = CheckReport::ok("jump_increase");
    for (std::size_t k = 1; k < prod.iterations.size() && inc; ++k)
      inc = check_jump_increase(p, prod.iterations[k - 1], prod.iterations[k]);
    out.push_back(inc);
    const auto& last = prod.iterations.back();
    const auto& before = prod.iterations[prod.iterations.size() - 2];
    out.push_back(check_sigma_safe(p, labels, prod.added.back(), before, last, isa));
    out.push_back(check_policy_equal(p, before, last, prod.added.back()));
  }
  out.push_back(verify_targets(img, p, labels, prod.final, isa));
  return out;
}

}  // namespace detail

inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const IsaParams isa = load_isa(cfg.isa, cfg.isa_params);
    const Program p = parse_program(detail::read_file(cfg.input));
    const LabelMap labels = build_label_map(p);

    auto prod = detail::produce(cfg.strategy, p, labels, isa, cfg);
    if (cfg.strategy == Strategy::lfp)
      out << "iterations_used: " << prod.final.iterations_used << " (bound 2n = " << 2 * p.size() << ")\n";

    const MachineImage img = encode_program(p, labels, prod.final, isa);
    out << "total_bytes: " << prod.final.program_size << '\n';

    int status = kExitOk;
    if (cfg.check_invariants) {
      const auto reports = detail::run_checks(cfg.strategy, p, labels, prod, img, isa);
      detail::print_checks(out, reports);
      for (const auto& r : reports)
        if (!r.holds) {
          err << "error: invariant " << r.name << " violated at ppc " << r.first_violation->ppc << ": "
              << r.first_violation->detail << '\n';
          status = kExitInvariant;
          break;
        }
    }

    if (cfg.report) {
      std::vector<StrategyReport> reports;
      std::vector<std::string> skipped;
      for (auto s : {Strategy::lfp, Strategy::all_long, Strategy::gfp, Strategy::optimal}) {
        try {
          const auto f = s == cfg.strategy ? prod.final : detail::produce(s, p, labels, isa, cfg).final;
          reports.push_back(make_report(std::string(to_string(s)), p, labels, f, isa));
        } catch (const Error& e) {
          skipped.push_back(std::string(to_string(s)) + ": skipped (" + e.what() + ")");
        }
      }
      detail::print_report(out, reports, skipped);
    }

    if (cfg.emit_bin) {
      std::ofstream bin(*cfg.emit_bin, std::ios::binary);
      if (!bin) throw IoError("cannot write '" + *cfg.emit_bin + "'");
      bin.write(reinterpret_cast<const char*>(img.bytes.data()), static_cast<std::streamsize>(img.bytes.size()));
      if (!bin) throw IoError("failed writing '" + *cfg.emit_bin + "'");
    }
    if (cfg.dump_sigma) dump_sigma(prod.final, *cfg.dump_sigma);
    if (cfg.trace) {
      if (cfg.strategy != Strategy::lfp) throw Error("--trace is only available for the lfp strategy");
      std::ofstream t(*cfg.trace, std::ios::binary);
      if (!t) throw IoError("cannot write '" + *cfg.trace + "'");
      for (std::size_t k = 0; k < prod.iterations.size(); ++k)
        trace_iteration(t, k, p, labels, prod.iterations[k], isa);
      if (!t) throw IoError("failed writing '" + *cfg.trace + "'");
    }
    return status;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ProgramTooLarge& e) {
    err << "error: " << e.what() << '\n';
    return kExitTooLarge;
  } catch (const NoFixpoint& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const EncodingError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const ContractViolation& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace bdo
