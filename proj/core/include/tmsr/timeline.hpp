#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmsr/rational.hpp"
#include "tmsr/terms.hpp"

namespace tmsr {

/// F@t with F ground and t >= 0.
struct TimedFact {
  Fact fact;
  Rational stamp;

  bool operator==(const TimedFact& other) const = default;
};

/// A multiset of timestamped facts with exactly one Time fact.
class TimedConfiguration {
 public:
  TimedConfiguration() = default;
  /// Throws std::invalid_argument unless there is exactly one Time fact, every
  /// fact is ground and every stamp is non-negative.
  explicit TimedConfiguration(std::vector<TimedFact> facts);

  const std::vector<TimedFact>& facts() const { return facts_; }
  std::size_t size() const { return facts_.size(); }
  std::size_t time_index() const { return time_index_; }
  const Rational& now() const { return facts_[time_index_].stamp; }

  /// Facts sorted by stamp, ties broken by rendered fact text.
  std::vector<TimedFact> canonical() const;

  /// Largest nonce index in use, if any.
  std::optional<std::uint64_t> max_nonce() const;

  bool operator==(const TimedConfiguration& other) const = default;

 private:
  std::vector<TimedFact> facts_;
  std::size_t time_index_ = 0;
};

std::string to_string(const TimedConfiguration& s);

enum class Relation : std::uint8_t { Greater, GreaterEq, Equal };

/// left REL right + offset, over two time variables.
struct TimeConstraint {
  std::string left;
  std::string right;
  Relation relation = Relation::Greater;
  std::int64_t offset = 0;

  bool operator==(const TimeConstraint& other) const = default;
};

std::string to_string(const TimeConstraint& c);

/// Truth of `diff REL offset` where diff = left - right.
bool compare_difference(const Rational& diff, Relation relation, std::int64_t offset);

/// Throws UnboundVariable if either side is missing from `binding`.
bool eval_constraint(const TimeConstraint& c, const std::map<std::string, Rational>& binding);

/// A pattern fact together with the time variable of its stamp (F@T1).
struct StampedPattern {
  Fact fact;
  std::string time_var;

  bool operator==(const StampedPattern& other) const = default;
};

/// A post-condition fact. Created facts carry a delay and are stamped
/// time_var + delay, where time_var is the variable of Time; preserved facts
/// carry no delay and repeat a pre-condition fact verbatim.
struct RhsFact {
  Fact fact;
  std::string time_var;
  std::optional<std::uint32_t> delay;

  bool created() const { return delay.has_value(); }
  bool operator==(const RhsFact& other) const = default;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time@T, W..., F... | guard -> exists X. [Time@T, W..., Q1@(T+D1), ...]
struct InstantaneousAction {
  std::string name;
  std::vector<StampedPattern> lhs;
  std::vector<TimeConstraint> guard;
  std::vector<std::string> fresh;
  std::vector<RhsFact> rhs;

  // Derived by make_action.
  std::vector<bool> lhs_preserved;
  std::size_t time_slot = 0;

  const std::string& time_var() const { return lhs[time_slot].time_var; }
  std::size_t created_count() const;
  std::size_t consumed_count() const;
  bool balanced() const { return lhs.size() == rhs.size(); }

  bool operator==(const InstantaneousAction& other) const {
    return name == other.name && lhs == other.lhs && guard == other.guard &&
           fresh == other.fresh && rhs == other.rhs;
  }
};

/// Builds an action and checks that it has the instantaneous shape. An rhs
/// fact without delay is preserved if an identical, not yet paired lhs fact
/// with the same time variable exists (first such occurrence wins); otherwise
/// it must be stamped with Time's variable and is created with delay 0.
/// Throws ShapeError.
InstantaneousAction make_action(std::string name, std::vector<StampedPattern> lhs,
                                std::vector<TimeConstraint> guard, std::vector<std::string> fresh,
                                std::vector<RhsFact> rhs);

/// {F1@T1, ..., Fn@Tn} | guard.
struct Goal {
  std::vector<StampedPattern> facts;
  std::vector<TimeConstraint> guard;

  bool operator==(const Goal& other) const = default;
};

/// Smallest natural d with d > n + 1 for every numeral n.
std::uint32_t compute_dmax(std::span<const Rational> numerals);

/// A concrete rule instance: the configuration index chosen for each lhs
/// pattern plus the bindings (term, time, and fresh variables).
struct Instance {
  std::vector<std::size_t> occurrences;
  Substitution subst;

  bool operator==(const Instance& other) const = default;
};

/// All instances of `r` whose pre-condition occurs in `s` and whose guard
/// holds. Fresh variables are left unbound.
std::vector<Instance> find_instances(const TimedConfiguration& s, const InstantaneousAction& r);

class RuleNotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Allocates globally new nonce indices.
class NonceCounter {
 public:
  explicit NonceCounter(std::uint64_t next = 0) : next_(next) {}
  std::uint64_t allocate() { return next_.fetch_add(1, std::memory_order_relaxed); }
  /// Ensures future allocations exceed every nonce in `s`.
  void observe(const TimedConfiguration& s);

 private:
  std::atomic<std::uint64_t> next_;
};

/// Binds every fresh variable of `r` to a newly allocated nonce.
Instance bind_fresh(const InstantaneousAction& r, Instance inst, NonceCounter& nonces);

/// (S \ consumed) plus created facts stamped now + D. The instance must bind
/// every fresh variable to a nonce absent from `s`. Throws RuleNotApplicable
/// when the chosen occurrences do not match or the guard fails.
TimedConfiguration apply_instantaneous(const TimedConfiguration& s, const InstantaneousAction& r,
                                       const Instance& inst);

/// Variant that locates the occurrences from the bindings alone.
TimedConfiguration apply_instantaneous(const TimedConfiguration& s, const InstantaneousAction& r,
                                       const Substitution& subst);

/// Advances Time by epsilon > 0. Throws std::invalid_argument otherwise.
TimedConfiguration apply_tick(const TimedConfiguration& s, const Rational& epsilon);

/// Concrete goal test: some grounding maps the goal facts onto distinct
/// occurrences and satisfies the guard.
bool goal_holds(const TimedConfiguration& s, const Goal& goal);

/// Brute-force check of configuration equivalence: a nonce bijection aligns
/// the canonically sorted facts and both sides agree on every constraint
/// t_i > t_j + d and t_i = t_j + d for |d| <= dmax.
bool equivalent(const TimedConfiguration& a, const TimedConfiguration& b, std::uint32_t dmax);

}  // namespace tmsr
