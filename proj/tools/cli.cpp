#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "tmsr/circle.hpp"
#include "tmsr/dsl.hpp"
#include "tmsr/engine.hpp"
#include "tmsr/prob.hpp"
#include "tmsr/protocols.hpp"

namespace tmsr::cli {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Reachable:
      return kReachable;
    case Outcome::Unreachable:
      return kUnreachable;
    case Outcome::BoundExhausted:
      return kBoundExhausted;
  }
  return kBoundExhausted;
}

struct CheckFlags {
  std::optional<std::uint64_t> bound;
  std::optional<std::uint64_t> time_limit_ms;
  unsigned threads = 1;
  bool json = false;
};

SearchOptions options_from(const CheckFlags& f) {
  SearchOptions o;
  o.max_states = f.bound;
  if (f.time_limit_ms) o.time_limit = std::chrono::milliseconds(*f.time_limit_ms);
  o.threads = f.threads;
  return o;
}

nlohmann::json step_json(const PlanStep& s, std::size_t index) {
  nlohmann::json j;
  j["index"] = index;
  j["action"] = s.kind == PlanStep::Kind::Tick ? "tick" : s.rule_name;
  nlohmann::json bind = nlohmann::json::object();
  for (const auto& [name, value] : s.subst.terms) bind[name] = to_string(value);
  j["bindings"] = bind;
  j["circle"] = to_string(s.after);
  return j;
}

int report(const ReachabilityProblem& problem, const CheckFlags& flags, std::ostream& out) {
  const Verdict v = search(problem, options_from(flags));
  std::optional<ConcreteTrace> trace;
  if (v.plan) trace = replay(problem, *v.plan);
  if (flags.json) {
    nlohmann::json j;
    j["verdict"] = to_string(v.outcome);
    j["visited"] = v.visited;
    j["elapsed_ms"] = v.elapsed_ms;
    if (v.plan) {
      nlohmann::json steps = nlohmann::json::array();
      for (std::size_t i = 0; i < v.plan->steps.size(); ++i) steps.push_back(step_json(v.plan->steps[i], i + 1));
      nlohmann::json witness = nlohmann::json::array();
      for (const TimedConfiguration& s : trace->states) witness.push_back(to_string(s));
      j["plan"] = {{"steps", steps}, {"witness", witness}, {"goal_holds", trace->goal_holds}};
    }
    out << j.dump(2) << "\n";
  } else {
    out << "verdict: " << to_string(v.outcome) << "\n";
    out << "visited: " << v.visited << "\n";
    if (!v.reason.empty()) out << "stopped: " << v.reason << "\n";
    if (v.plan) out << format_plan(problem, *v.plan, trace ? &*trace : nullptr);
  }
  return exit_code(v.outcome);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reachability checker for timed multiset rewriting", "tmsr"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CheckFlags check_flags;
  std::string check_file;
  auto* check = app.add_subcommand("check", "Search for a plan reaching the goal");
  check->add_option("file", check_file, "Problem file")->required();
  check->add_option("--bound", check_flags.bound, "Maximum number of visited states");
  check->add_option("--time-limit", check_flags.time_limit_ms, "Wall-clock limit in ms");
  check->add_option("--threads", check_flags.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  check->add_flag("--json", check_flags.json, "JSON report");

  std::string plan_file;
  std::size_t plan_index = 0;
  unsigned plan_threads = 1;
  auto* plan = app.add_subcommand("plan", "Print the i-th step of the plan, or no");
  plan->add_option("file", plan_file, "Problem file")->required();
  plan->add_option("--index", plan_index, "1-based step index")->required();
  plan->add_option("--threads", plan_threads, "Worker threads")->check(CLI::Range(1u, 256u));

  std::string circle_file;
  std::optional<std::size_t> circle_at;
  auto* circle = app.add_subcommand("circle", "Print a circle-configuration");
  circle->add_option("file", circle_file, "Problem file")->required();
  circle->add_option("--at", circle_at, "State after this many plan steps");

  std::string equiv_a;
  std::string equiv_b;
  std::uint32_t equiv_dmax = 0;
  auto* equiv = app.add_subcommand("equiv", "Compare the initial configurations of two files");
  equiv->add_option("file1", equiv_a, "First problem file")->required();
  equiv->add_option("file2", equiv_b, "Second problem file")->required();
  equiv->add_option("--dmax", equiv_dmax, "Truncation bound")->required();

  std::uint32_t db_r = 0;
  std::uint32_t db_d = 0;
  bool db_eager = false;
  bool db_lazy = false;
  bool db_wire = false;
  bool db_check = false;
  std::string db_emit;
  CheckFlags db_flags;
  auto* db = app.add_subcommand("db", "Generate the distance-bounding theory");
  db->add_option("--r", db_r, "Response bound R")->required();
  db->add_option("--d", db_d, "One-way distance D(v,p)")->required();
  auto* eager_flag = db->add_flag("--eager", db_eager, "Record at the first tick (default)");
  db->add_flag("--lazy", db_lazy, "Record at any later tick")->excludes(eager_flag);
  db->add_flag("--wire", db_wire, "Consume messages on receipt");
  db->add_option("--emit", db_emit, "Write the theory to this file");
  db->add_flag("--check", db_check, "Search the generated theory");
  db->add_option("--bound", db_flags.bound, "Maximum number of visited states");
  db->add_option("--threads", db_flags.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  db->add_flag("--json", db_flags.json, "JSON report");

  double prob_h = 0;
  std::uint32_t prob_r = 3;
  std::optional<std::uint64_t> prob_mc;
  std::uint64_t prob_seed = 1;
  std::optional<double> prob_density;
  std::uint32_t prob_resolution = 400;
  std::string prob_out;
  unsigned prob_threads = 1;
  auto* prob = app.add_subcommand("prob", "Attack probability in between ticks");
  prob->set_help_flag("--help", "Print this help message and exit");
  prob->add_option("--h", prob_h, "Excess of the real round trip over R")->required();
  prob->add_option("--r", prob_r, "Response bound R");
  prob->add_option("--mc", prob_mc, "Monte Carlo sample count");
  prob->add_option("--seed", prob_seed, "Monte Carlo seed");
  prob->add_option("--density", prob_density, "Tabulate the density for this ell");
  prob->add_option("--resolution", prob_resolution, "Density table resolution");
  prob->add_option("--out", prob_out, "CSV output file");
  prob->add_option("--threads", prob_threads, "Worker threads")->check(CLI::Range(1u, 256u));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "tmsr: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*check) return report(parse_file(check_file), check_flags, out);

    if (*plan) {
      SearchOptions o;
      o.threads = plan_threads;
      const ReachabilityProblem p = parse_file(plan_file);
      auto step = schedule(p, plan_index, o);
      if (!step) {
        out << "no\n";
      } else {
        out << plan_index << ". " << format_step(*step) << "\n" << to_string(step->after) << "\n";
      }
      return 0;
    }

    if (*circle) {
      const ReachabilityProblem p = parse_file(circle_file);
      if (!circle_at || *circle_at == 0) {
        out << to_string(abstract(p.initial, p.dmax())) << "\n";
        return 0;
      }
      const Verdict v = search(p);
      if (!v.plan || *circle_at > v.plan->steps.size()) {
        out << "no\n";
        return 0;
      }
      out << to_string(v.plan->steps[*circle_at - 1].after) << "\n";
      return 0;
    }

    if (*equiv) {
      const ReachabilityProblem a = parse_file(equiv_a);
      const ReachabilityProblem b = parse_file(equiv_b);
      const bool same = equivalent(a.initial, b.initial, equiv_dmax);
      const bool keys = canonical_key(abstract(a.initial, equiv_dmax)) ==
                        canonical_key(abstract(b.initial, equiv_dmax));
      out << (same ? "equivalent" : "not equivalent") << "\n";
      out << "circle keys " << (keys ? "agree" : "differ") << "\n";
      return same ? 0 : 1;
    }

    if (*db) {
      DbParams params = DbParams::symmetric(db_r, db_d, db_lazy ? Recording::Lazy : Recording::Eager);
      if (db_wire) params.network = Network::Wire;
      const std::string text = emit_db(params);
      if (!db_emit.empty()) {
        std::ofstream file(db_emit, std::ios::binary);
        if (!file) {
          err << "tmsr: cannot write " << db_emit << "\n";
          return kDataError;
        }
        file << text;
      } else if (!db_check) {
        out << text;
      }
      if (db_check) return report(build_db(params), db_flags, out);
      return 0;
    }

    if (*prob) {
      out << num(prob::p_error(prob_h)) << "\n";
      if (prob_mc) {
        const double est = prob::mc_estimate(prob_r, prob_h, *prob_mc, prob_seed, prob_threads);
        out << "mc " << num(est) << " (N=" << *prob_mc << ", seed=" << prob_seed << ")\n";
      }
      if (prob_density) {
        const std::string csv = prob::density_csv(prob::density_table(*prob_density, prob_resolution));
        if (prob_out.empty()) {
          out << csv;
        } else {
          std::ofstream file(prob_out, std::ios::binary);
          if (!file) {
            err << "tmsr: cannot write " << prob_out << "\n";
            return kDataError;
          }
          file << csv;
        }
      }
      return 0;
    }
  } catch (const ParseError& e) {
    err << "tmsr: " << e.what() << "\n";
    return kDataError;
  } catch (const InvalidProblem& e) {
    err << "tmsr: invalid problem: " << e.what() << "\n";
    return kDataError;
  } catch (const std::domain_error& e) {
    err << "tmsr: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "tmsr: " << e.what() << "\n";
    return kUsage;
  } catch (const std::runtime_error& e) {
    err << "tmsr: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace tmsr::cli
