#include "tmsr/problem.hpp"

#include <cstdlib>

namespace tmsr {

std::vector<Rational> ReachabilityProblem::numerals() const {
  std::vector<Rational> out;
  for (const TimedFact& tf : initial.facts()) out.push_back(tf.stamp);
  auto add_guard = [&](const std::vector<TimeConstraint>& guard) {
    for (const TimeConstraint& c : guard) out.emplace_back(std::llabs(c.offset));
  };
  for (const InstantaneousAction& r : rules) {
    add_guard(r.guard);
    for (const RhsFact& q : r.rhs) {
      if (q.delay) out.emplace_back(*q.delay);
    }
  }
  add_guard(goal.guard);
  return out;
}

std::uint32_t ReachabilityProblem::dmax() const {
  if (dmax_override) return *dmax_override;
  const auto all = numerals();
  return compute_dmax(all);
}

bool ReachabilityProblem::dmax_override_valid() const {
  if (!dmax_override) return true;
  for (const Rational& n : numerals()) {
    if (Rational(*dmax_override) + 1 <= n) return false;
  }
  return true;
}

}  // namespace tmsr
