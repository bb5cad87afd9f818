#pragma once

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcsp/completion.hpp"
#include "pcsp/errors.hpp"
#include "pcsp/fpt_solvers.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/io.hpp"
#include "pcsp/machine.hpp"
#include "pcsp/partials.hpp"
#include "pcsp/random.hpp"

namespace pcsp::cli {

enum ExitCode : int {
  kYes = 0,          // satisfiable / accepted / pass
  kNo = 1,           // unsatisfiable / rejected / fail
  kUsage = 2,        // bad arguments or malformed document
  kNotApplicable = 3 // method preconditions do not hold for the input
};

// Raised for failures that must map to kNotApplicable.
struct MethodRefused : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_output(const std::string& path, const std::string& text,
                         std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

inline const std::vector<std::pair<std::string, LanguageProfile>>& profile_names() {
  static const std::vector<std::pair<std::string, LanguageProfile>> names = {
      {"w-finite", LanguageProfile::WFinite},
      {"w-cofinite", LanguageProfile::WCofinite},
      {"w-even", LanguageProfile::WEven},
      {"w-odd", LanguageProfile::WOdd},
      {"w-mixed", LanguageProfile::WMixed},
      {"parity", LanguageProfile::Parity},
      {"cw", LanguageProfile::CW},
      {"explicit", LanguageProfile::Explicit},
      {"mixed", LanguageProfile::Mixed},
      {"exact-one", LanguageProfile::ExactOne},
  };
  return names;
}

inline LanguageProfile profile_from_name(const std::string& name) {
  for (const auto& [n, p] : profile_names())
    if (n == name) return p;
  throw UsageError("unknown profile '" + name + "'");
}

inline std::string witness_line(const Instance& inst,
                                const std::optional<Assignment>& a) {
  if (!a) return "UNSAT\n";
  std::string line = "SAT";
  for (const auto& name : inst.names(*a)) line += " " + name;
  return line + "\n";
}

// Largest member size over the body, the d of the W^d pipeline.
inline std::uint32_t member_bound(const Instance& inst) {
  std::uint64_t d = 0;
  for (const auto& c : inst.body()) {
    const auto* w = c.relation.as_w();
    if (!w || w->weights.kind() != WeightKind::Finite)
      throw MethodRefused("the W^d pipeline needs finite W relations");
    if (!w->weights.values().empty())
      d = std::max<std::uint64_t>(d, w->weights.values().back());
  }
  return static_cast<std::uint32_t>(d);
}

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "brute", "fpt-kue", "fpt-kt", "appearance-machine", "cw-machine",
      "completion-pipeline"};
  return names;
}

// Decides `inst` with the named method. Every witness returned is over the
// variables of `inst`.
inline std::optional<Assignment> solve_with(const std::string& method,
                                            const Instance& inst,
                                            std::optional<std::uint32_t> d = {}) {
  try {
    if (method == "brute") return brute_force_solve(inst);
    if (method == "fpt-kue") return solve_w_kue(inst);
    if (method == "fpt-kt") return solve_w_kt(inst);
    const bool lift = inst.weight().kind == WeightMode::AtMost;
    const Instance exact = lift ? lift_kle_to_k(inst) : inst;
    std::optional<Assignment> found;
    if (method == "appearance-machine" || method == "cw-machine") {
      const auto m = method == "cw-machine" ? reduce_cw(exact)
                                            : reduce_appearance(exact);
      SimulateOptions opt;
      opt.prune = true;
      auto sim = simulate(m, opt);
      if (sim.accepted) found = sim.witness;
    } else if (method == "completion-pipeline") {
      found = solve_wd_pipeline(exact, d ? *d : member_bound(exact));
    } else {
      throw UsageError("unknown method '" + method + "'");
    }
    if (found && lift) {
      Assignment proj;
      for (VarId v : found->trueset)
        if (v < inst.num_variables()) proj.trueset.push_back(v);
      found = proj;
    }
    return found;
  } catch (const NotApplicable& e) {
    throw MethodRefused(e.what());
  } catch (const CapacityError& e) {
    throw MethodRefused(e.what());
  } catch (const UsageError& e) {
    if (std::string(e.what()).rfind("unknown method", 0) == 0) throw;
    throw MethodRefused(e.what());
  }
}

struct VerifyRow {
  std::uint64_t seed = 0;
  bool skipped = false;
  bool oracle = false;
  bool method = false;
  bool witness_ok = true;
};

inline LanguageProfile default_profile(const std::string& method, std::uint64_t i) {
  static constexpr LanguageProfile kWKinds[] = {
      LanguageProfile::WFinite, LanguageProfile::WCofinite,
      LanguageProfile::WEven, LanguageProfile::WOdd};
  if (method == "fpt-kue" || method == "fpt-kt") return kWKinds[i % 4];
  if (method == "cw-machine") return LanguageProfile::CW;
  if (method == "completion-pipeline") return LanguageProfile::ExactOne;
  return LanguageProfile::Mixed;
}

inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Weight-parameterized Boolean CSP toolkit", "pcsp"};
  app.require_subcommand(1);

  std::string input, output, method = "brute", target, profile_name;
  std::optional<std::uint32_t> d_opt;
  bool materialize = false, exhaustive = false, explore_all = false,
       budget_report = false, atmost = false;
  std::size_t constraint_index = 0;
  std::uint64_t seed = 1, count = 100;
  std::string report;
  GenConfig gen;

  auto* solve = app.add_subcommand("solve", "decide an instance");
  solve->add_option("instance", input, "instance file, - for stdin")->required();
  solve->add_option("--method", method)
      ->check(CLI::IsMember(method_names()));
  solve->add_option("--d", d_opt, "member size bound for completion-pipeline");

  auto* reduce = app.add_subcommand("reduce", "compile an instance");
  reduce->add_option("instance", input)->required();
  reduce->add_option("--to", target)
      ->required()
      ->check(CLI::IsMember({"appearance", "cw", "w-cw"}));
  reduce->add_option("--d", d_opt, "member size bound for w-cw");
  reduce->add_option("-o,--output", output);
  reduce->add_flag("--materialize-weight-constraint", materialize);

  auto* simulate_cmd = app.add_subcommand("simulate", "run a machine document");
  simulate_cmd->add_option("machine", input)->required();
  simulate_cmd->add_flag("--exhaustive", exhaustive,
                         "run every guess instead of pruning dead prefixes");
  simulate_cmd->add_flag("--explore-all", explore_all,
                         "keep going after the first accepting guess");
  simulate_cmd->add_flag("--budget-report", budget_report);

  auto* partials_cmd = app.add_subcommand("partials", "partial sets of one relation");
  partials_cmd->add_option("instance", input)->required();
  partials_cmd->add_option("--constraint", constraint_index, "0-based body index")
      ->required();

  auto* stats = app.add_subcommand("stats", "print the parameters");
  stats->add_option("instance", input)->required();

  std::vector<std::string> profiles;
  for (const auto& [n, _] : profile_names()) profiles.push_back(n);
  auto add_gen_options = [&](CLI::App* cmd) {
    cmd->add_option("--n", gen.n);
    cmd->add_option("--k", gen.k);
    cmd->add_flag("--atmost", atmost);
    cmd->add_option("--min-body", gen.min_body);
    cmd->add_option("--max-body", gen.max_body);
    cmd->add_option("--min-arity", gen.min_arity);
    cmd->add_option("--max-arity", gen.max_arity);
    cmd->add_option("--repeat-percent", gen.repeat_percent);
    cmd->add_option("--cw-bound", gen.cw_bound);
    cmd->add_option("--member-bound", gen.member_bound);
    cmd->add_option("--max-weight", gen.max_weight);
  };
  auto* gen_cmd = app.add_subcommand("gen", "generate a random instance");
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_option("--profile", profile_name)
      ->required()
      ->check(CLI::IsMember(profiles));
  gen_cmd->add_option("-o,--output", output);
  gen_cmd->add_flag("--materialize-weight-constraint", materialize);
  add_gen_options(gen_cmd);

  auto* verify = app.add_subcommand("verify", "cross-check a method against brute force");
  verify->add_option("--method", method)
      ->required()
      ->check(CLI::IsMember(method_names()));
  verify->add_option("--count", count);
  verify->add_option("--seed", seed);
  verify->add_option("--profile", profile_name)->check(CLI::IsMember(profiles));
  verify->add_option("--report", report, "CSV file with one row per instance");
  add_gen_options(verify);

  std::vector<std::string> argv_store{"pcsp"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kYes : kUsage;
  }

  try {
    if (*solve) {
      const auto inst = parse_instance(read_input(input));
      std::optional<Assignment> found;
      try {
        found = solve_with(method, inst, d_opt);
      } catch (const MethodRefused& e) {
        err << "not applicable: " << e.what() << "\n";
        return kNotApplicable;
      }
      out << witness_line(inst, found);
      return found ? kYes : kNo;
    }

    if (*reduce) {
      auto inst = parse_instance(read_input(input));
      try {
        if (target == "w-cw") {
          const auto exact =
              inst.weight().kind == WeightMode::AtMost ? lift_kle_to_k(inst) : inst;
          const auto red =
              reduce_completion(exact, d_opt ? *d_opt : member_bound(exact));
          write_output(output, serialize_instance(red.reduced, materialize), out);
          return kYes;
        }
        if (inst.weight().kind == WeightMode::AtMost) inst = lift_kle_to_k(inst);
        const auto m = target == "cw" ? reduce_cw(inst) : reduce_appearance(inst);
        write_output(output, serialize_machine(m), out);
        return kYes;
      } catch (const UsageError& e) {
        err << "not applicable: " << e.what() << "\n";
        return kNotApplicable;
      } catch (const CapacityError& e) {
        err << "not applicable: " << e.what() << "\n";
        return kNotApplicable;
      } catch (const MethodRefused& e) {
        err << "not applicable: " << e.what() << "\n";
        return kNotApplicable;
      }
    }

    if (*simulate_cmd) {
      const auto m = parse_machine(read_input(input));
      SimulateOptions opt;
      opt.prune = !exhaustive;
      opt.stop_at_first_accept = !explore_all;
      SimulationResult r;
      try {
        r = simulate(m, opt);
      } catch (const CapacityError& e) {
        err << "not applicable: " << e.what() << "\n";
        return kNotApplicable;
      }
      if (r.accepted) {
        out << "ACCEPT";
        for (VarId v : r.witness->trueset) out << " " << m.universe[v];
        out << "\n";
      } else {
        out << "REJECT\n";
      }
      if (budget_report)
        out << "budget " << m.budget << " max_branch_steps " << r.max_branch_steps
            << " branches " << r.branches << "\n";
      return r.accepted ? kYes : kNo;
    }

    if (*partials_cmd) {
      const auto inst = parse_instance(read_input(input));
      if (constraint_index >= inst.body().size())
        throw UsageError("--constraint " + std::to_string(constraint_index) +
                         " out of range (body has " +
                         std::to_string(inst.body().size()) + " constraints)");
      const auto& rel = inst.body()[constraint_index].relation;
      const auto table = compute_partials(rel);
      out << rel.to_string() << "\n";
      for (const auto& t : table.partials) {
        out << set_to_string(t) << " ->";
        for (const auto& u : table.completions.at(t)) out << " " << set_to_string(u);
        out << "\n";
      }
      return kYes;
    }

    if (*stats) {
      const auto inst = parse_instance(read_input(input));
      out << (inst.weight().kind == WeightMode::Exact ? "k=" : "k<=")
          << inst.weight().k << " u=" << param_u(inst) << " t=" << param_t(inst)
          << " e=" << param_e(inst) << "\n";
      return kYes;
    }

    gen.weight = atmost ? WeightMode::AtMost : WeightMode::Exact;

    if (*gen_cmd) {
      gen.profile = profile_from_name(profile_name);
      write_output(output, serialize_instance(random_instance(seed, gen), materialize),
                   out);
      return kYes;
    }

    if (*verify) {
      std::vector<VerifyRow> rows;
      std::uint64_t mismatches = 0, skipped = 0;
      for (std::uint64_t i = 0; i < count; ++i) {
        VerifyRow row;
        row.seed = seed + i;
        auto cfg = gen;
        cfg.profile = profile_name.empty() ? default_profile(method, i)
                                           : profile_from_name(profile_name);
        const auto inst = random_instance(row.seed, cfg);
        const auto oracle = brute_force_solve(inst);
        row.oracle = oracle.has_value();
        try {
          const auto got = solve_with(method, inst);
          row.method = got.has_value();
          row.witness_ok = !got || satisfies(inst, *got);
          if (row.method != row.oracle || !row.witness_ok) ++mismatches;
        } catch (const MethodRefused&) {
          row.skipped = true;
          ++skipped;
        }
        rows.push_back(row);
      }
      if (!report.empty()) {
        std::ostringstream csv;
        csv << "seed,skipped,oracle_sat,method_sat,witness_ok\n";
        for (const auto& r : rows)
          csv << r.seed << "," << r.skipped << "," << r.oracle << "," << r.method
              << "," << r.witness_ok << "\n";
        write_output(report, csv.str(), out);
      }
      const bool pass = mismatches == 0 && skipped < count;
      out << "verify " << method << ": " << count << " instances, " << skipped
          << " not applicable, " << mismatches << " mismatches: "
          << (pass ? "PASS" : "FAIL") << "\n";
      return pass ? kYes : kNo;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CapacityError& e) {
    err << "not applicable: " << e.what() << "\n";
    return kNotApplicable;
  } catch (const MethodRefused& e) {
    err << "not applicable: " << e.what() << "\n";
    return kNotApplicable;
  }
  return kUsage;
}

}  // namespace pcsp::cli
