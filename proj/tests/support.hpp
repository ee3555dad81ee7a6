#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tmsr/circle.hpp"
#include "tmsr/engine.hpp"
#include "tmsr/timeline.hpp"

namespace tmsr::testing {

/// Fact from text like "P(a,n(1))" or "Time". Capitalized arguments are
/// variables.
Fact fact(const std::string& text);

/// Configuration from pairs like {"Time", "1.5"}.
TimedConfiguration config(const std::vector<std::pair<std::string, std::string>>& facts);

/// The S1 example with Dmax 4.
TimedConfiguration s1();

/// Random configuration: up to `max_facts` facts besides Time over a small
/// alphabet, stamps with denominators up to `max_den` and integer parts
/// below `max_int`.
TimedConfiguration random_config(std::mt19937_64& rng, std::size_t max_facts, int max_den,
                                 int max_int);

/// Random relative constraint over two named variables with |offset| < dmax.
TimeConstraint random_constraint(std::mt19937_64& rng, const std::string& left,
                                 const std::string& right, std::uint32_t dmax);

/// Independent grouping oracle: checks integer classes, gaps, zero point and
/// circle order of `a` against the stamps of `s` by sort and scan.
bool grouping_agrees(const TimedConfiguration& s, const CircleConfiguration& a, std::string* why);

/// Smallest number of next steps leading from `from` to `to`, or -1 when
/// none within `limit`.
int next_distance(const CircleConfiguration& from, const CircleConfiguration& to, int limit);

}  // namespace tmsr::testing

namespace tmsr::testing {

/// Random circle-configuration built directly from its parts.
CircleConfiguration random_circle(std::mt19937_64& rng, std::size_t max_facts, std::uint32_t dmax);

}  // namespace tmsr::testing
