#include <gtest/gtest.h>

#include "support.hpp"
#include "tmsr/dsl.hpp"
#include "tmsr/engine.hpp"
#include "tmsr/protocols.hpp"

namespace tmsr {
namespace {

using testing::config;

const char* const kToggle = R"(
problem toggle
init { Time@0, A@0 }
rule flip: Time@T, A@T1 | { T >= T1 + 1 } -> Time@T, B@T
rule back: Time@T, B@T1 | { T > T1 } -> Time@T, A@T
goal { C@T1 }
)";

const char* const kDelay = R"(
problem delay
init { Time@0, Go@0, E@0 }
rule start: Time@T, Go@T1, E@T2 -> Time@T, Go@T1, Done@(T + 2)
goal { Done@T1, Go@T2 } | { T1 >= T2 + 2 }
)";

TEST(Validate, UnbalancedWarning) {
  const auto p = parse(R"(
init { Time@0, F1@0 }
rule grow: Time@T, F1@T1 -> Time@T, F1@T1, F1@T, F2@T
goal { F2@T1 }
)");
  const auto report = validate(p);
  EXPECT_TRUE(report.ok());
  EXPECT_FALSE(report.balanced());
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_EQ(report.warnings[0], "rule grow is unbalanced (2 vs 4)");
}

TEST(Validate, PaddedIsBalanced) {
  const auto p = parse(R"(
init { Time@0, F1@0, E@0, E@0 }
rule grow: Time@T, F1@T1, E@T2, E@T3 -> Time@T, F1@T1, F1@T, F2@T
goal { F2@T1 }
)");
  const auto report = validate(p);
  EXPECT_TRUE(report.balanced());
  EXPECT_TRUE(report.warnings.empty());
}

TEST(Validate, DbTheory) {
  const auto report = validate(build_db(DbParams::symmetric(4, 2, Recording::Eager)));
  EXPECT_TRUE(report.ok());
  EXPECT_TRUE(report.balanced());
  EXPECT_EQ(report.max_fact_size, 5u);
}

TEST(Validate, OffsetBeyondDmax) {
  auto p = parse(kToggle);
  p.dmax_override = 2;
  p.rules[0].guard[0].offset = 2;
  const auto report = validate(p);
  EXPECT_FALSE(report.ok());
}

TEST(LtBound, Examples) {
  EXPECT_EQ(lt_bound(2, 1, 1, 2, 1), 1200);
  EXPECT_EQ(lt_bound(1, 1, 0, 1, 0), 2);
  const BigInt big = lt_bound(10, 5, 6, 20, 10);
  EXPECT_GT(big, BigInt(std::numeric_limits<std::uint64_t>::max()));
  EXPECT_LT(msb(big), 64u * 64u);
}

TEST(GoalMatch, AttackTraceState) {
  auto goal_for = [](std::uint32_t r) { return build_db(DbParams::symmetric(r, 2, Recording::Lazy)).goal; };
  const auto s = config({{"Time", "5"}, {"Start(p,np,nv)", "1.7"}, {"Stop(p,np,nv)", "4.9"}, {"NS_V(ok(p))", "5"}});
  EXPECT_TRUE(goal_match(abstract(s, 6), goal_for(3)));
  EXPECT_FALSE(goal_match(abstract(s, 6), goal_for(4)));
  EXPECT_TRUE(goal_match(abstract(s, 6), Goal{}));
}

TEST(Search, GoalInInitialState) {
  const auto p = parse("init { Time@0 } goal { Time@T }");
  const auto v = search(p);
  EXPECT_EQ(v.outcome, Outcome::Reachable);
  ASSERT_TRUE(v.plan);
  EXPECT_TRUE(v.plan->steps.empty());
  EXPECT_EQ(v.visited, 1u);
}

TEST(Search, ToyExhaustsWithinBound) {
  const auto p = parse(kToggle);
  const auto v = search(p);
  EXPECT_EQ(v.outcome, Outcome::Unreachable);
  const auto in = bound_inputs(p);
  EXPECT_LE(BigInt(v.visited), lt_bound(in.m, in.k, in.dmax, in.j, in.d));
  EXPECT_GT(v.visited, 3u);
}

TEST(Search, DelayedGoalPlanReplays) {
  const auto p = parse(kDelay);
  const auto v = search(p);
  ASSERT_EQ(v.outcome, Outcome::Reachable);
  const auto trace = replay(p, *v.plan);
  EXPECT_TRUE(trace.goal_holds);
  EXPECT_EQ(trace.states.size(), v.plan->steps.size() + 1);
  EXPECT_EQ(v.plan->steps.front().rule_name, "start");
}

TEST(Search, ShortestPlan) {
  const auto p = parse(R"(
init { Time@0, A@0 }
rule ab: Time@T, A@T1 -> Time@T, B@T
rule bc: Time@T, B@T1 -> Time@T, C@T
rule ac: Time@T, A@T1 | { T >= T1 + 1 } -> Time@T, C@T
goal { C@T1 }
)");
  const auto v = search(p);
  ASSERT_EQ(v.outcome, Outcome::Reachable);
  EXPECT_EQ(v.plan->steps.size(), 2u);
  EXPECT_EQ(format_step(v.plan->steps[0]), "ab");
}

TEST(Search, UnbalancedNeedsBound) {
  const auto p = parse(R"(
init { Time@0, F@0 }
rule grow: Time@T, F@T1 -> Time@T, F@T1, F@T
goal { G@T1 }
)");
  EXPECT_THROW(search(p), InvalidProblem);
  SearchOptions o;
  o.max_states = 50;
  const auto v = search(p, o);
  EXPECT_EQ(v.outcome, Outcome::BoundExhausted);
  EXPECT_EQ(v.visited, 50u);
}

TEST(Search, StateBoundReported) {
  SearchOptions o;
  o.max_states = 4;
  const auto v = search(parse(kToggle), o);
  EXPECT_EQ(v.outcome, Outcome::BoundExhausted);
  EXPECT_EQ(v.bound, 4u);
  EXPECT_EQ(v.reason, "state bound reached");
}

TEST(Search, InvariantUnderEquivalentInitial) {
  auto p = parse(kDelay);
  const auto base = search(p);
  std::vector<TimedFact> shifted = p.initial.facts();
  for (auto& tf : shifted) tf.stamp += Rational(3, 1);
  p.initial = TimedConfiguration(shifted);
  p.dmax_override = base.plan->initial.dmax();
  const auto moved = search(p);
  EXPECT_EQ(moved.outcome, base.outcome);
  EXPECT_EQ(moved.plan->steps.size(), base.plan->steps.size());
}

TEST(Search, DeterministicAcrossThreads) {
  const auto p = build_db(DbParams::symmetric(4, 2, Recording::Lazy));
  SearchOptions one;
  one.max_states = 20000;
  SearchOptions many = one;
  many.threads = 3;
  const auto a = search(p, one);
  const auto b = search(p, many);
  EXPECT_EQ(a.outcome, b.outcome);
  EXPECT_EQ(a.visited, b.visited);
  ASSERT_EQ(a.plan.has_value(), b.plan.has_value());
  if (a.plan) EXPECT_EQ(format_plan(p, *a.plan), format_plan(p, *b.plan));
}

TEST(Search, LazyDbAttackFound) {
  const auto p = build_db(DbParams::symmetric(4, 2, Recording::Lazy));
  const auto v = search(p);
  ASSERT_EQ(v.outcome, Outcome::Reachable);
  const auto trace = replay(p, *v.plan);
  EXPECT_TRUE(trace.goal_holds);
}

// Random small balanced theories: settling stamps must not change verdicts.
std::string random_theory(std::mt19937_64& rng) {
  const char* const preds[] = {"A", "B", "C", "D"};
  const char* const rels[] = {">", ">=", "="};
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  auto offset = [&] {
    const int o = pick(5) - 2;
    return o == 0 ? std::string() : (o > 0 ? " + " : " - ") + std::to_string(std::abs(o));
  };
  std::string text = "dmax 3\ninit { Time@0";
  const char* const stamps[] = {"0", "0.5", "1", "1.5"};
  const int facts = 1 + pick(3);
  for (int i = 0; i < facts; ++i) text += std::string(", ") + preds[pick(4)] + "@" + stamps[pick(4)];
  text += " }\n";
  const int rules = 1 + pick(3);
  for (int r = 0; r < rules; ++r) {
    const int n = 1 + pick(2);
    std::vector<std::string> vars;
    std::vector<std::string> lhs;
    text += "rule r" + std::to_string(r) + ": Time@T";
    for (int i = 0; i < n; ++i) {
      std::string v = pick(5) == 0 ? "T" : "T" + std::to_string(i + 1);
      vars.push_back(v);
      lhs.push_back(preds[pick(4)]);
      text += ", " + lhs.back() + "@" + v;
    }
    std::vector<std::string> guard;
    const int g = pick(3);
    for (int i = 0; i < g; ++i) {
      std::string a = pick(2) == 0 ? "T" : vars[static_cast<std::size_t>(pick(n))];
      std::string b = vars[static_cast<std::size_t>(pick(n))];
      if (pick(2) == 0) std::swap(a, b);
      guard.push_back(a + " " + rels[pick(3)] + " " + b + offset());
    }
    if (!guard.empty()) {
      text += " | { ";
      for (std::size_t i = 0; i < guard.size(); ++i) text += (i ? ", " : "") + guard[i];
      text += " }";
    }
    text += " -> Time@T";
    for (int i = 0; i < n; ++i) {
      if (pick(3) == 0) {
        text += ", " + lhs[static_cast<std::size_t>(i)] + "@" + vars[static_cast<std::size_t>(i)];
      } else {
        const int d = pick(3);
        text += std::string(", ") + preds[pick(4)] + (d == 0 ? "@T" : "@(T + " + std::to_string(d) + ")");
      }
    }
    text += "\n";
  }
  text += std::string("goal { ") + preds[pick(4)] + "@T1, " + preds[pick(4)] + "@T2 }";
  if (pick(2) == 0) text += std::string(" | { T2 ") + rels[pick(3)] + " T1" + offset() + " }";
  return text + "\n";
}

TEST(Search, SettledStampsKeepVerdicts) {
  std::mt19937_64 rng(41);
  int compared = 0;
  int reachable = 0;
  for (int i = 0; i < 400; ++i) {
    const std::string text = random_theory(rng);
    ReachabilityProblem p;
    try {
      p = parse(text);
    } catch (const ParseError&) {
      continue;
    }
    SearchOptions full;
    full.settle_stamps = false;
    full.max_states = 200000;
    Verdict a, b;
    try {
      a = search(p, full);
      b = search(p);
    } catch (const FutureFinitenessError&) {
      continue;
    }
    if (a.outcome == Outcome::BoundExhausted) continue;
    EXPECT_EQ(a.outcome, b.outcome) << text;
    EXPECT_LE(b.visited, a.visited) << text;
    if (b.plan) EXPECT_TRUE(replay(p, *b.plan).goal_holds) << text;
    ++compared;
    if (a.outcome == Outcome::Reachable) ++reachable;
  }
  EXPECT_GT(compared, 200);
  EXPECT_GT(reachable, 20);
  EXPECT_GT(compared - reachable, 20);
}

TEST(Schedule, StepsAndNo) {
  const auto p = parse(kDelay);
  const auto v = search(p);
  const std::size_t n = v.plan->steps.size();
  const auto first = schedule(p, 1);
  ASSERT_TRUE(first);
  EXPECT_EQ(first->rule_name, "start");
  EXPECT_FALSE(schedule(p, n + 1));
  EXPECT_FALSE(schedule(p, 0));
  EXPECT_FALSE(schedule(parse(kToggle), 1));
}

TEST(Replay, DetectsTamperedPlan) {
  const auto p = parse(kDelay);
  auto plan = *search(p).plan;
  plan.steps.back().after = plan.initial;
  EXPECT_THROW(replay(p, plan), ReplayError);
}

TEST(FormatPlan, Layout) {
  const auto p = parse(kDelay);
  const auto v = search(p);
  const auto trace = replay(p, *v.plan);
  const std::string text = format_plan(p, *v.plan, &trace);
  EXPECT_EQ(text.rfind("plan: ", 0), 0u);
  EXPECT_NE(text.find("   1. start\n"), std::string::npos);
  EXPECT_NE(text.find("witness:\n"), std::string::npos);
  EXPECT_NE(text.find("goal holds concretely: yes"), std::string::npos);
}

}  // namespace
}  // namespace tmsr
