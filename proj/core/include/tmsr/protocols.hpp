#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "tmsr/problem.hpp"

namespace tmsr {

enum class Recording : std::uint8_t { Lazy, Eager };
enum class Network : std::uint8_t { Radio, Wire };

/// Parameters of the distance-bounding theory.
struct DbParams {
  std::uint32_t r = 3;  // accepted measured round trip, in verifier ticks
  std::map<std::pair<std::string, std::string>, std::uint32_t> distances;
  std::string verifier = "v";
  std::string prover = "p";
  std::string prover_nonce = "np";
  std::string verifier_nonce = "nv";
  Recording recording = Recording::Eager;
  Network network = Network::Radio;
  std::uint32_t empty_facts = 6;

  /// Two participants at one-way distance d in both directions.
  static DbParams symmetric(std::uint32_t r, std::uint32_t d, Recording recording);

  /// One-way minimum transmission time; throws std::invalid_argument if
  /// the pair is missing.
  std::uint32_t distance(const std::string& from, const std::string& to) const;
};

/// Throws std::invalid_argument on R = 0, asymmetric or missing distances,
/// or clashing names.
void check(const DbParams& p);

/// The verifier/prover rules, the verifier clock, one network rule per
/// direction and the attack goal Start@T1, Stop@T2, NS_V(ok(P))@T3 with
/// T2 > T1 + R.
ReachabilityProblem build_db(const DbParams& p);

/// The `.tmsr` text of build_db(p).
std::string emit_db(const DbParams& p);

}  // namespace tmsr
