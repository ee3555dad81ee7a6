#include <gtest/gtest.h>

#include "support.hpp"
#include "tmsr/engine.hpp"
#include "tmsr/protocols.hpp"

namespace tmsr {
namespace {

using testing::config;

const InstantaneousAction& rule(const ReachabilityProblem& p, const std::string& name) {
  for (const auto& r : p.rules) {
    if (r.name == name) return r;
  }
  throw std::out_of_range(name);
}

TEST(BuildDb, Shape) {
  const auto p = build_db(DbParams::symmetric(4, 2, Recording::Eager));
  EXPECT_EQ(p.name, "db_eager_r4_d2");
  EXPECT_EQ(p.initial.size(), 10u);
  EXPECT_EQ(p.rules.size(), 9u);
  EXPECT_EQ(p.dmax(), 6u);
  EXPECT_EQ(build_db(DbParams::symmetric(2, 2, Recording::Eager)).dmax(), 4u);
  const auto report = validate(p);
  EXPECT_TRUE(report.ok());
  EXPECT_TRUE(report.balanced());
  EXPECT_LE(report.max_fact_size, 5u);
}

TEST(BuildDb, RecordingGuards) {
  const auto eager = build_db(DbParams::symmetric(3, 2, Recording::Eager));
  const auto lazy = build_db(DbParams::symmetric(3, 2, Recording::Lazy));
  EXPECT_EQ(rule(eager, "v_start").guard.size(), 2u);
  EXPECT_EQ(rule(lazy, "v_start").guard.size(), 1u);
  EXPECT_EQ(to_string(rule(eager, "v_stop").guard[1]), "T1 > T - 1");
  EXPECT_EQ(to_string(rule(lazy, "v_accept").guard[0]), "T1 >= T2 - 3");
}

TEST(BuildDb, NetworkVariants) {
  auto params = DbParams::symmetric(3, 2, Recording::Eager);
  const auto radio = build_db(params);
  EXPECT_EQ(to_string(rule(radio, "net_V_P").guard[0]), "T >= T1 + 2");
  EXPECT_FALSE(rule(radio, "net_V_P").lhs_preserved.empty());
  params.network = Network::Wire;
  const auto wire = build_db(params);
  EXPECT_TRUE(validate(wire).balanced());
  // The message itself is consumed instead of an empty slot.
  EXPECT_EQ(rule(wire, "net_V_P").lhs.size(), 2u);
  EXPECT_EQ(rule(wire, "net_V_P").consumed_count(), 1u);
  EXPECT_EQ(rule(radio, "net_V_P").lhs.size(), 3u);
}

TEST(BuildDb, InvalidParams) {
  EXPECT_THROW(build_db(DbParams::symmetric(0, 2, Recording::Eager)), std::invalid_argument);
  auto p = DbParams::symmetric(3, 2, Recording::Eager);
  p.distances[{"p", "v"}] = 3;
  EXPECT_THROW(build_db(p), std::invalid_argument);
  p = DbParams::symmetric(3, 2, Recording::Eager);
  p.prover = p.verifier;
  EXPECT_THROW(build_db(p), std::invalid_argument);
}

// The lazy trace: the accepting rule fires although the goal holds.
TEST(BuildDb, LazyHandFedTrace) {
  const auto p = build_db(DbParams::symmetric(3, 2, Recording::Lazy));
  const auto s = config({{"Time", "5"},
                         {"Clock_V", "5"},
                         {"Start_V(p,np,nv)", "2"},
                         {"Stop_V(p,np,nv)", "5"},
                         {"V2(stop,p,np,nv)", "5"},
                         {"Start(p,np,nv)", "1.7"},
                         {"Stop(p,np,nv)", "4.9"}});
  const auto& accept = rule(p, "v_accept");
  const auto found = find_instances(s, accept);
  ASSERT_EQ(found.size(), 1u);
  const auto after = apply_instantaneous(s, accept, found[0]);
  EXPECT_TRUE(goal_holds(after, p.goal));
  EXPECT_TRUE(goal_match(abstract(after, p.dmax()), p.goal));
}

TEST(BuildDb, EagerAttackWitness) {
  const auto p = build_db(DbParams::symmetric(4, 2, Recording::Eager));
  const auto v = search(p);
  ASSERT_EQ(v.outcome, Outcome::Reachable);
  const auto trace = replay(p, *v.plan);
  ASSERT_TRUE(trace.goal_holds);
  ASSERT_GE(trace.states.size(), 2u);
  const auto& last = trace.states[trace.states.size() - 2];
  auto stamp = [&](const std::string& text) {
    for (const auto& tf : last.facts()) {
      if (to_string(tf.fact) == text) return tf.stamp;
    }
    throw std::out_of_range(text);
  };
  EXPECT_LE(stamp("Stop_V(p,np,nv)") - stamp("Start_V(p,np,nv)"), 4);
  EXPECT_GT(stamp("Stop(p,np,nv)") - stamp("Start(p,np,nv)"), 4);
}

TEST(BuildDb, EagerShortRangeSafe) {
  const auto p = build_db(DbParams::symmetric(2, 2, Recording::Eager));
  const auto v = search(p);
  EXPECT_EQ(v.outcome, Outcome::Unreachable);
  const auto in = bound_inputs(p);
  EXPECT_LE(BigInt(v.visited), lt_bound(in.m, in.k, in.dmax, in.j, in.d));
}

// Invariants over every plan the search returns.
TEST(BuildDb, PlanInvariants) {
  for (std::uint32_t r : {3u, 4u, 5u}) {
    const auto p = build_db(DbParams::symmetric(r, 2, r == 3 ? Recording::Lazy : Recording::Eager));
    const auto v = search(p);
    ASSERT_EQ(v.outcome, Outcome::Reachable) << r;
    const auto trace = replay(p, *v.plan);
    for (std::size_t i = 0; i < v.plan->steps.size(); ++i) {
      const auto& s = trace.states[i + 1];
      std::size_t clocks = 0;
      for (const auto& tf : s.facts()) {
        if (tf.fact.predicate == "Clock_V") {
          ++clocks;
          EXPECT_EQ(fractional_part(tf.stamp), 0);
          EXPECT_LE(tf.stamp, s.now());
        }
      }
      EXPECT_EQ(clocks, 1u);
      const auto& step = v.plan->steps[i];
      if (step.kind == PlanStep::Kind::Rule && step.rule_name.rfind("net_", 0) == 0) {
        const auto& before = trace.states[i];
        // Receive time is at least send time + D.
        const std::string msg = to_string(step.subst.terms.at("M"));
        const std::string send = (step.rule_name == "net_V_P" ? "NS_V(" : "NS_P(") + msg + ")";
        bool ok = false;
        for (const auto& tf : before.facts()) {
          if (to_string(tf.fact) == send && s.now() >= tf.stamp + 2) ok = true;
        }
        EXPECT_TRUE(ok) << step.rule_name;
      }
    }
  }
}

}  // namespace
}  // namespace tmsr
