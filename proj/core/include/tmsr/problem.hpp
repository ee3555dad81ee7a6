#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmsr/timeline.hpp"

namespace tmsr {

/// Initial configuration, rules and goal, plus the truncation bound.
struct ReachabilityProblem {
  std::string name;
  TimedConfiguration initial;
  std::vector<InstantaneousAction> rules;
  Goal goal;
  std::optional<std::uint32_t> dmax_override;

  /// Every numeral of the problem: initial stamps, guard offsets (absolute
  /// values) and creation delays.
  std::vector<Rational> numerals() const;

  /// The override when present, compute_dmax otherwise.
  std::uint32_t dmax() const;

  /// An override is valid iff every numeral is below dmax + 1.
  bool dmax_override_valid() const;

  bool operator==(const ReachabilityProblem& other) const = default;
};

}  // namespace tmsr
