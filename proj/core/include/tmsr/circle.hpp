#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmsr/timeline.hpp"

namespace tmsr {

/// Truncated gap value standing for any difference above dmax.
inline constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::int64_t kDeltaInf = std::numeric_limits<std::int64_t>::max();

/// Gap arithmetic with infinity absorbing and truncation above dmax.
std::uint32_t add_gaps(std::uint32_t a, std::uint32_t b, std::uint32_t dmax);

/// A ground fact stored once per process; circle entries point at it.
struct Atom {
  Fact fact;
  std::string text;
  std::string masked;
  bool has_nonce = false;
  std::uint32_t id = 0;  // dense, in order of first interning
};

/// Returns the unique atom for `f`. Thread-safe; atoms live until exit.
const Atom* intern(const Fact& f);

/// One fact of a circle-configuration with its delta class and circle class.
/// Circle class 0 is the zero point; classes 1..k run clockwise.
struct CircleEntry {
  const Atom* atom = nullptr;
  std::uint32_t delta_class = 0;
  std::uint32_t circle_class = 0;

  const Fact& fact() const { return atom->fact; }
  const std::string& text() const { return atom->text; }

  bool operator==(const CircleEntry& other) const = default;
};

/// Raised when a step would need the exact size of an infinite gap.
class FutureFinitenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The pair (delta-configuration, unit circle) of a timed configuration.
class CircleConfiguration {
 public:
  CircleConfiguration() = default;

  /// Builds from raw parts and normalizes entry order. Throws
  /// std::invalid_argument if classes are empty, gaps are out of range or
  /// Time does not occur exactly once.
  CircleConfiguration(std::vector<CircleEntry> entries, std::vector<std::uint32_t> gaps,
                      std::uint32_t circle_classes, std::uint32_t dmax);

  const std::vector<CircleEntry>& entries() const { return entries_; }
  const std::vector<std::uint32_t>& gaps() const { return gaps_; }
  std::uint32_t delta_class_count() const { return static_cast<std::uint32_t>(gaps_.size() + 1); }
  std::uint32_t circle_class_count() const { return circle_classes_; }
  std::uint32_t dmax() const { return dmax_; }
  std::size_t time_entry() const { return time_; }
  std::size_t size() const { return entries_.size(); }

  /// Fact texts per delta class, sorted within each class.
  std::vector<std::vector<std::string>> delta_groups() const;
  /// Zero point texts.
  std::vector<std::string> zero_point() const;
  /// Texts of circle classes 1..k.
  std::vector<std::vector<std::string>> circle_groups() const;

  /// Signed truncated integer difference Int(p) - Int(q) between two entries,
  /// kDeltaInf or -kDeltaInf once its magnitude exceeds dmax.
  std::int64_t delta_between(std::size_t p, std::size_t q) const;

  bool operator==(const CircleConfiguration& other) const = default;

 private:
  void normalize();

  std::vector<CircleEntry> entries_;
  std::vector<std::uint32_t> gaps_;
  std::uint32_t circle_classes_ = 0;
  std::uint32_t dmax_ = 0;
  std::size_t time_ = 0;
};

/// `⟨{M,R} 1 {P} ∞ {Time}⟩ / [{S}Z {M} {R} {P,Time}]`
std::string to_string(const CircleConfiguration& a);

/// Circle-configuration of `s`. When `entry_of` is given it receives, for
/// each fact index of `s`, the index of the corresponding entry.
CircleConfiguration abstract(const TimedConfiguration& s, std::uint32_t dmax,
                             std::vector<std::size_t>* entry_of = nullptr);

/// Decides `left REL right + offset` for the entries bound to its variables.
/// Throws UnboundVariable, or std::domain_error when |offset| >= dmax.
bool satisfies(const CircleConfiguration& a, const TimeConstraint& c,
               const std::map<std::string, std::size_t>& binding);

/// A symbolic rule instance: entry indices per lhs pattern, term bindings and
/// the entry bound to each time variable.
struct SymbolicInstance {
  std::vector<std::size_t> occurrences;
  Substitution subst;
  std::map<std::string, std::size_t> time_binding;

  bool operator==(const SymbolicInstance& other) const = default;
};

/// All instances of the patterns occurring in `a` whose guard holds. A time
/// variable used twice requires both entries to share delta and circle class.
std::vector<SymbolicInstance> find_symbolic_instances(const CircleConfiguration& a,
                                                      std::span<const StampedPattern> patterns,
                                                      std::span<const TimeConstraint> guard);

std::vector<SymbolicInstance> find_symbolic_instances(const CircleConfiguration& a,
                                                      const InstantaneousAction& r);

/// True iff some instance of the patterns satisfies the guard.
bool any_symbolic_instance(const CircleConfiguration& a, std::span<const StampedPattern> patterns,
                           std::span<const TimeConstraint> guard);

/// Receives the rule index, the matched entries and the successor.
using SuccessorVisitor =
    std::function<void(std::size_t, const std::vector<std::size_t>&, CircleConfiguration&&)>;

/// Applies every symbolic instance of every rule to `a`, rules in order and
/// instances in match order. Fresh variables get the smallest unused nonces.
void for_each_rule_successor(const CircleConfiguration& a, std::span<const InstantaneousAction> rules,
                             const SuccessorVisitor& visit);

/// Smallest nonce indices not used in `a`.
std::vector<std::uint64_t> unused_nonces(const CircleConfiguration& a, std::size_t count);

/// Removes consumed entries, fusing emptied classes, then inserts created
/// facts at distance D from Time's delta class in Time's circle class. Fresh
/// variables left unbound in the instance get the smallest unused nonces.
/// Throws RuleNotApplicable on a mismatch or violated guard and
/// FutureFinitenessError when an insertion falls inside an infinite gap.
CircleConfiguration apply_instantaneous_symbolic(const CircleConfiguration& a,
                                                 const InstantaneousAction& r,
                                                 const SymbolicInstance& inst);

enum class NextRule : std::uint8_t {
  LeaveZero,      // Time in the zero point
  MergeForward,   // Time alone in a non-last class
  SplitForward,   // Time shares a non-last class
  SplitLast,      // Time shares the last class
  WrapSplit,      // alone in the last class, shares its delta class
  WrapMove,       // alone in the last class and its delta class
};

/// Which successor case applies to `a`. Exactly one always does.
NextRule next_rule(const CircleConfiguration& a);

/// The one-step time advancement successor.
CircleConfiguration next(const CircleConfiguration& a);

/// The concrete representative: integer parts from cumulative gaps with
/// infinity read as dmax + 1, circle class i of k at decimal i/(k+1).
TimedConfiguration concretize(const CircleConfiguration& a);

/// A tick that moves the concrete configuration `s` exactly one next-step:
/// half way to the next decimal point when Time is shared or at the zero
/// point, all the way otherwise.
Rational next_epsilon(const TimedConfiguration& s);

/// Byte string equal for two configurations iff they are equal up to a
/// bijective renaming of nonces.
std::string canonical_key(const CircleConfiguration& a);

/// Renames nonces in first-occurrence order of the canonical serialization.
CircleConfiguration canonical_form(const CircleConfiguration& a);

/// Compact binary key with the same equality as canonical_key, built from
/// atom ids. Only comparable within one process.
void compact_key(const CircleConfiguration& a, std::string& out);

/// Key of `a` with the flagged entries kept only as facts: equal for two
/// configurations iff, up to nonce renaming, they agree once those entries
/// are removed and the removed facts agree as a multiset. Time must not be
/// flagged.
void compact_key(const CircleConfiguration& a, const std::vector<char>& timeless, std::string& out);

}  // namespace tmsr
