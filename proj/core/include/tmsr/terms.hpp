#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmsr/rational.hpp"

namespace tmsr {

/// First-order term: a constant, a variable, a nonce (fresh value) or the
/// application of a function symbol to arguments.
struct Term {
  enum class Kind : std::uint8_t { Constant, Variable, Nonce, Application };

  Kind kind = Kind::Constant;
  std::string name;         // symbol name; empty for nonces
  std::uint64_t nonce = 0;  // index, meaningful for Kind::Nonce only
  std::vector<Term> args;   // arguments, Kind::Application only

  static Term constant(std::string name);
  static Term variable(std::string name);
  static Term fresh(std::uint64_t index);
  static Term apply(std::string function, std::vector<Term> args);

  bool is_ground() const;
  bool operator==(const Term& other) const = default;
};

/// P(u1, ..., un). Arity zero facts such as Time carry no arguments.
struct Fact {
  std::string predicate;
  std::vector<Term> args;

  bool is_ground() const;
  bool operator==(const Fact& other) const = default;
};

inline const std::string kTimePredicate = "Time";

/// Ground substitution for term variables and time variables. The two
/// domains are kept apart; a name may not be bound in both.
struct Substitution {
  std::map<std::string, Term> terms;
  std::map<std::string, Rational> times;

  bool operator==(const Substitution& other) const = default;
};

class UnboundVariable : public std::runtime_error {
 public:
  explicit UnboundVariable(const std::string& name)
      : std::runtime_error("unbound variable '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

std::string to_string(const Term& t);
std::string to_string(const Fact& f);

/// Rendering with every nonce replaced by "n(?)"; invariant under nonce
/// renaming.
std::string masked_string(const Fact& f);

bool contains_nonce(const Fact& f);
void collect_nonces(const Fact& f, std::vector<std::uint64_t>& out);
Fact rename_nonces(const Fact& f, const std::map<std::uint64_t, std::uint64_t>& mapping);

/// Homomorphic replacement; variables without a binding are left in place.
Term apply_subst(const Term& t, const Substitution& s);
Fact apply_subst(const Fact& f, const Substitution& s);

/// Like apply_subst but throws UnboundVariable if the result is not ground.
Fact ground(const Fact& f, const Substitution& s);

/// Number of predicate, function, constant, nonce and variable symbols.
std::size_t fact_size(const Fact& f);

/// One way of matching a pattern sequence: the substitution and the index of
/// the target occurrence chosen for each pattern.
struct Match {
  Substitution subst;
  std::vector<std::size_t> occurrences;
};

/// Extends `s` so that `pattern` instantiated by it equals the ground term
/// `target`. Returns false (leaving `s` in an unspecified state) on clash.
bool match_term(const Term& pattern, const Term& target, Substitution& s);
bool match_fact(const Fact& pattern, const Fact& target, Substitution& s);

/// Every choice of pairwise distinct target occurrences, in the order given,
/// together with its substitution. Patterns are tried left to right and
/// targets in index order, so the result order is deterministic.
std::vector<Match> match_occurrences(std::span<const Fact> patterns, std::span<const Fact> target,
                                     const Substitution& seed = {});

/// The set of substitutions under which the patterns occur in the ground
/// multiset `target` (occurrence choices collapsed). Sorted and unique.
std::vector<Substitution> match(std::span<const Fact> patterns, std::span<const Fact> target);

bool operator<(const Term& a, const Term& b);
bool operator<(const Fact& a, const Fact& b);
bool operator<(const Substitution& a, const Substitution& b);

}  // namespace tmsr
