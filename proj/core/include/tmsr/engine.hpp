#pragma once

#include <chrono>
#include <functional>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmsr/circle.hpp"
#include "tmsr/problem.hpp"

namespace tmsr {

struct RuleReport {
  std::string name;
  std::size_t pre = 0;
  std::size_t post = 0;
  bool balanced() const { return pre == post; }
};

struct ValidationReport {
  std::vector<RuleReport> rules;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::size_t max_fact_size = 0;
  std::uint32_t dmax = 0;

  bool ok() const { return errors.empty(); }
  bool balanced() const;
};

/// Shape, balance, fact-size and numeral audit of a problem.
ValidationReport validate(const ReachabilityProblem& problem);

/// J^m (D + 2mk)^(mk) m^m (Dmax + 2)^(m - 1).
BigInt lt_bound(std::uint64_t m, std::uint64_t k, std::uint64_t dmax, std::uint64_t j,
                std::uint64_t d);

/// Inputs of lt_bound read off a problem: configuration size, largest fact,
/// number of predicates and number of constant and function symbols.
struct BoundInputs {
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  std::uint64_t dmax = 0;
  std::uint64_t j = 0;
  std::uint64_t d = 0;
};
BoundInputs bound_inputs(const ReachabilityProblem& problem);

/// Symbolic goal test.
bool goal_match(const CircleConfiguration& a, const Goal& goal);

struct PlanStep {
  enum class Kind : std::uint8_t { Rule, Tick };

  Kind kind = Kind::Tick;
  std::size_t rule = 0;  // index into the problem's rules
  std::string rule_name;
  std::vector<std::size_t> occurrences;
  Substitution subst;  // term and fresh bindings
  CircleConfiguration after;
};

struct Plan {
  CircleConfiguration initial;
  std::vector<PlanStep> steps;

  const CircleConfiguration& witness() const {
    return steps.empty() ? initial : steps.back().after;
  }
};

enum class Outcome : std::uint8_t { Reachable, Unreachable, BoundExhausted };

std::string to_string(Outcome o);

struct Verdict {
  Outcome outcome = Outcome::BoundExhausted;
  std::optional<Plan> plan;
  std::uint64_t visited = 0;
  std::uint64_t bound = 0;  // state limit in force, 0 when unlimited
  std::string reason;       // why the search stopped early
  double elapsed_ms = 0;
};

struct SearchOptions {
  std::optional<std::uint64_t> max_states;
  std::optional<std::chrono::milliseconds> time_limit;
  unsigned threads = 1;
  /// Leave out of the visited key the stamps no rule or goal can still
  /// observe (guards on T - t that are settled for good).
  bool settle_stamps = true;
  /// Called after each completed BFS layer with (depth, visited, frontier).
  std::function<void(std::size_t, std::uint64_t, std::size_t)> on_layer;
};

class InvalidProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Breadth-first search over circle-configurations. Throws InvalidProblem
/// when validation fails, or when a rule is unbalanced and no state bound
/// was given.
Verdict search(const ReachabilityProblem& problem, const SearchOptions& options = {});

/// The i-th step (1-based) of the plan found by search, if there is one.
std::optional<PlanStep> schedule(const ReachabilityProblem& problem, std::size_t i,
                                 const SearchOptions& options = {});

/// A concrete run that follows a plan step by step.
struct ConcreteTrace {
  std::vector<TimedConfiguration> states;  // states.size() == steps + 1
  std::vector<std::string> labels;         // one per step
  bool goal_holds = false;
};

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replays `plan` from the concrete initial configuration, ticking by
/// next_epsilon and checking after each step that the state abstracts to
/// the plan's circle-configuration. Throws ReplayError on divergence.
ConcreteTrace replay(const ReachabilityProblem& problem, const Plan& plan);

/// Numbered steps with the circle-configuration after each, followed by the
/// concrete witness trace.
std::string format_plan(const ReachabilityProblem& problem, const Plan& plan,
                        const ConcreteTrace* trace = nullptr);

std::string format_step(const PlanStep& step);

}  // namespace tmsr
