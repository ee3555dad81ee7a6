#include "tmsr/protocols.hpp"

#include <cctype>
#include <stdexcept>

#include "tmsr/dsl.hpp"

namespace tmsr {

DbParams DbParams::symmetric(std::uint32_t r, std::uint32_t d, Recording recording) {
  DbParams p;
  p.r = r;
  p.recording = recording;
  p.distances[{p.verifier, p.prover}] = d;
  p.distances[{p.prover, p.verifier}] = d;
  return p;
}

std::uint32_t DbParams::distance(const std::string& from, const std::string& to) const {
  auto it = distances.find({from, to});
  if (it == distances.end()) throw std::invalid_argument("no distance from " + from + " to " + to);
  return it->second;
}

void check(const DbParams& p) {
  if (p.r < 1) throw std::invalid_argument("R must be at least 1");
  const std::string names[] = {p.verifier, p.prover, p.prover_nonce, p.verifier_nonce};
  for (std::size_t i = 0; i < 4; ++i) {
    if (names[i].empty() || !std::islower(static_cast<unsigned char>(names[i][0]))) {
      throw std::invalid_argument("names must start with a lowercase letter: '" + names[i] + "'");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (names[i] == names[j]) throw std::invalid_argument("name '" + names[i] + "' used twice");
    }
  }
  for (const auto& [pair, d] : p.distances) {
    auto back = p.distances.find({pair.second, pair.first});
    if (back == p.distances.end() || back->second != d) {
      throw std::invalid_argument("distance from " + pair.first + " to " + pair.second +
                                  " is not symmetric");
    }
  }
  p.distance(p.verifier, p.prover);
}

namespace {

Term c(const std::string& name) { return Term::constant(name); }
Term v(const std::string& name) { return Term::variable(name); }
Fact f(std::string pred, std::vector<Term> args = {}) { return Fact{std::move(pred), std::move(args)}; }

StampedPattern at(Fact fact, std::string tv) { return {std::move(fact), std::move(tv)}; }
RhsFact keep(Fact fact, std::string tv) { return {std::move(fact), std::move(tv), std::nullopt}; }
RhsFact make(Fact fact) { return {std::move(fact), "T", 0}; }

TimeConstraint con(std::string l, Relation rel, std::string r, std::int64_t k = 0) {
  return {std::move(l), std::move(r), rel, k};
}

std::vector<Term> session() { return {v("P"), v("NP"), v("NV")}; }

std::vector<Term> tagged(const char* state) {
  std::vector<Term> out{c(state)};
  for (Term& t : session()) out.push_back(std::move(t));
  return out;
}

const Fact kTime = f(kTimePredicate);

}  // namespace

ReachabilityProblem build_db(const DbParams& p) {
  check(p);
  const bool eager = p.recording == Recording::Eager;
  ReachabilityProblem out;
  out.name = std::string("db_") + (eager ? "eager" : "lazy") + "_r" + std::to_string(p.r) + "_d" +
             std::to_string(p.distance(p.verifier, p.prover));
  if (p.network == Network::Wire) out.name += "_wire";

  std::vector<TimedFact> init{
      {kTime, 0},
      {f("Clock_V"), 0},
      {f("V0", {c(p.prover), c(p.prover_nonce), c(p.verifier_nonce)}), 0},
      {f("P0", {c(p.verifier), c(p.verifier_nonce), c(p.prover_nonce)}), 0},
  };
  for (std::uint32_t i = 0; i < p.empty_facts; ++i) init.push_back({f("E"), 0});
  out.initial = TimedConfiguration(std::move(init));

  std::vector<TimeConstraint> start_guard{con("T", Relation::GreaterEq, "T1")};
  if (eager) start_guard.push_back(con("T1", Relation::Greater, "T", -1));

  auto& rules = out.rules;
  rules.push_back(make_action(
      "v_send",
      {at(kTime, "T"), at(f("V0", session()), "T1"), at(f("E"), "T2"), at(f("E"), "T3")}, {}, {},
      {keep(kTime, "T"), make(f("V1", tagged("pending"))), make(f("NS_V", {v("NP")})),
       make(f("Start", session()))}));
  rules.push_back(make_action(
      "v_start",
      {at(kTime, "T"), at(f("V1", tagged("pending")), "T1"), at(f("Clock_V"), "T"), at(f("E"), "T2")},
      start_guard, {},
      {keep(kTime, "T"), make(f("V1", tagged("start"))), keep(f("Clock_V"), "T"),
       make(f("Start_V", session()))}));
  rules.push_back(make_action(
      "p_respond",
      {at(kTime, "T"), at(f("P0", {v("V"), v("NV"), v("NP")}), "T1"), at(f("NR_P", {v("NP")}), "T2")},
      {con("T", Relation::GreaterEq, "T2")}, {},
      {keep(kTime, "T"), make(f("P1", {v("V"), v("NV"), v("NP")})), make(f("NS_P", {v("NV")}))}));
  rules.push_back(make_action(
      "v_receive",
      {at(kTime, "T"), at(f("V1", tagged("start")), "T1"), at(f("NR_V", {v("NV")}), "T2")}, {}, {},
      {keep(kTime, "T"), make(f("V2", tagged("pending"))), make(f("Stop", session()))}));
  rules.push_back(make_action(
      "v_stop",
      {at(kTime, "T"), at(f("V2", tagged("pending")), "T1"), at(f("Clock_V"), "T"), at(f("E"), "T2")},
      start_guard, {},
      {keep(kTime, "T"), make(f("V2", tagged("stop"))), keep(f("Clock_V"), "T"),
       make(f("Stop_V", session()))}));
  rules.push_back(make_action(
      "v_accept",
      {at(kTime, "T"), at(f("Start_V", session()), "T1"), at(f("Stop_V", session()), "T2"),
       at(f("V2", tagged("stop")), "T3")},
      {con("T1", Relation::GreaterEq, "T2", -static_cast<std::int64_t>(p.r)),
       con("T", Relation::GreaterEq, "T3")},
      {},
      {keep(kTime, "T"), make(f("V3", {v("P")})), make(f("NS_V", {Term::apply("ok", {v("P")})})),
       make(f("E"))}));
  rules.push_back(make_action("clock", {at(kTime, "T"), at(f("Clock_V"), "T1")},
                              {con("T", Relation::Equal, "T1", 1)}, {},
                              {keep(kTime, "T"), make(f("Clock_V"))}));

  auto network = [&](const std::string& from, const std::string& to, const char* x, const char* y) {
    const std::int64_t d = p.distance(from, to);
    const Fact sent = f(std::string("NS_") + x, {v("M")});
    const Fact received = f(std::string("NR_") + y, {v("M")});
    const std::string name = std::string("net_") + x + "_" + y;
    const std::vector<TimeConstraint> guard{con("T", Relation::GreaterEq, "T1", d)};
    if (p.network == Network::Radio) {
      rules.push_back(make_action(name, {at(kTime, "T"), at(sent, "T1"), at(f("E"), "T2")}, guard, {},
                                  {keep(kTime, "T"), keep(sent, "T1"), make(received)}));
    } else {
      rules.push_back(make_action(name, {at(kTime, "T"), at(sent, "T1")}, guard, {},
                                  {keep(kTime, "T"), make(received)}));
    }
  };
  network(p.verifier, p.prover, "V", "P");
  network(p.prover, p.verifier, "P", "V");

  out.goal.facts = {at(f("Start", session()), "T1"), at(f("Stop", session()), "T2"),
                    at(f("NS_V", {Term::apply("ok", {v("P")})}), "T3")};
  out.goal.guard = {con("T2", Relation::Greater, "T1", p.r)};
  return out;
}

std::string emit_db(const DbParams& p) {
  const bool eager = p.recording == Recording::Eager;
  std::string head = "# Distance bounding, " + std::string(eager ? "eager" : "lazy") +
                     " recording, R = " + std::to_string(p.r) +
                     ", D(v,p) = " + std::to_string(p.distance(p.verifier, p.prover)) + "\n";
  return head + serialize(build_db(p));
}

}  // namespace tmsr
