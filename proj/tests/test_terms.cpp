#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "support.hpp"
#include "tmsr/terms.hpp"

namespace tmsr {
namespace {

using testing::fact;

std::vector<Fact> facts(std::initializer_list<const char*> texts) {
  std::vector<Fact> out;
  for (const char* t : texts) out.push_back(fact(t));
  return out;
}

TEST(Match, SingleUnifier) {
  auto subs = match(facts({"P(X)"}), facts({"P(a)"}));
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].terms.at("X"), Term::constant("a"));
}

TEST(Match, FinaltaskPrecondition) {
  // Time stamps live on the configuration side; here only the facts.
  auto subs = match(facts({"Time", "Finaltask(X,done)", "Deadline"}),
                    facts({"Time", "Finaltask(c0,done)", "Deadline"}));
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].terms.at("X"), Term::constant("c0"));
}

TEST(Match, MultisetOccurrences) {
  const auto pats = facts({"P(X)", "P(Y)"});
  const auto target = facts({"P(a)", "P(a)", "P(b)"});
  EXPECT_EQ(match_occurrences(pats, target).size(), 6u);
  auto subs = match(pats, target);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& s : subs) got.emplace(to_string(s.terms.at("X")), to_string(s.terms.at("Y")));
  std::set<std::pair<std::string, std::string>> want{{"a", "a"}, {"a", "b"}, {"b", "a"}};
  EXPECT_EQ(got, want);
}

TEST(Match, NoMatchIsEmpty) {
  EXPECT_TRUE(match(facts({"P(X)", "P(X)"}), facts({"P(a)", "P(b)"})).empty());
  EXPECT_TRUE(match(facts({"Q"}), facts({"P(a)"})).empty());
}

TEST(Match, SharedVariableAcrossPatterns) {
  auto subs = match(facts({"P(X,Y)", "Q(Y)"}), facts({"P(a,b)", "P(b,a)", "Q(a)"}));
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].terms.at("X"), Term::constant("b"));
}

TEST(Match, FunctionTermsAndNonces) {
  auto subs = match(facts({"NS(ok(P))"}), facts({"NS(ok(p))", "NS(n(3))"}));
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].terms.at("P"), Term::constant("p"));
  subs = match(facts({"NS(M)"}), facts({"NS(ok(p))", "NS(n(3))"}));
  EXPECT_EQ(subs.size(), 2u);
}

// Brute force: every assignment of variables to subterms of the target.
void collect_subterms(const Term& t, std::set<std::string>& seen, std::vector<Term>& out) {
  if (seen.insert(to_string(t)).second) out.push_back(t);
  for (const Term& a : t.args) collect_subterms(a, seen, out);
}

TEST(Match, CompleteAgainstBruteForce) {
  std::mt19937_64 rng(7);
  const char* const pool[] = {"P(a)", "P(b)", "P(f(a))", "Q(a,b)", "Q(b,b)", "Q(a,a)", "R", "P(n(1))"};
  const std::vector<std::vector<Fact>> pattern_sets{
      facts({"P(X)", "Q(X,Y)"}), facts({"Q(X,X)"}), facts({"P(X)", "P(Y)"}),
      facts({"Q(X,b)", "P(X)", "R"}), facts({"P(f(X))", "Q(X,Y)"})};
  for (int round = 0; round < 60; ++round) {
    std::vector<Fact> target;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) target.push_back(fact(pool[rng() % 8]));
    std::vector<Term> domain;
    std::set<std::string> seen;
    for (const Fact& f : target) {
      for (const Term& t : f.args) collect_subterms(t, seen, domain);
    }
    for (const auto& pats : pattern_sets) {
      std::set<std::string> vars;
      for (const Fact& p : pats) {
        for (const Term& t : p.args) {
          std::vector<Term> stack{t};
          while (!stack.empty()) {
            Term x = stack.back();
            stack.pop_back();
            if (x.kind == Term::Kind::Variable) vars.insert(x.name);
            for (const Term& a : x.args) stack.push_back(a);
          }
        }
      }
      std::vector<std::string> vlist(vars.begin(), vars.end());
      std::set<Substitution> brute;
      std::vector<std::size_t> pick(vlist.size(), 0);
      if (!domain.empty() || vlist.empty()) {
        while (true) {
          Substitution s;
          for (std::size_t i = 0; i < vlist.size(); ++i) s.terms[vlist[i]] = domain[pick[i]];
          // Check a multiset embedding exists.
          std::vector<Fact> inst;
          for (const Fact& p : pats) inst.push_back(apply_subst(p, s));
          std::vector<Fact> pool_left = target;
          bool ok = true;
          for (const Fact& f : inst) {
            auto it = std::find(pool_left.begin(), pool_left.end(), f);
            if (it == pool_left.end()) {
              ok = false;
              break;
            }
            pool_left.erase(it);
          }
          if (ok) brute.insert(s);
          std::size_t k = 0;
          while (k < pick.size() && ++pick[k] == domain.size()) pick[k++] = 0;
          if (k == pick.size()) break;
        }
      }
      auto got = match(pats, target);
      std::set<Substitution> got_set(got.begin(), got.end());
      EXPECT_EQ(got_set, brute);
      for (const Match& m : match_occurrences(pats, target)) {
        for (std::size_t i = 0; i < pats.size(); ++i) {
          EXPECT_EQ(apply_subst(pats[i], m.subst), target[m.occurrences[i]]);
        }
      }
    }
  }
}

TEST(Match, DeterministicOrder) {
  const auto pats = facts({"P(X)", "P(Y)"});
  const auto target = facts({"P(a)", "P(b)", "P(c)"});
  auto a = match_occurrences(pats, target);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a[0].occurrences, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(a[1].occurrences, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(a[2].occurrences, (std::vector<std::size_t>{1, 0}));
}

TEST(ApplySubst, Examples) {
  Substitution s;
  s.terms["X"] = Term::constant("a");
  EXPECT_EQ(to_string(apply_subst(fact("P(X)"), s)), "P(a)");
  Substitution t;
  t.terms["N"] = Term::constant("nn");
  t.terms["X"] = Term::constant("c");
  EXPECT_EQ(to_string(apply_subst(fact("File(N,X,pending)"), t)), "File(nn,c,pending)");
  EXPECT_EQ(apply_subst(fact("Q(X)"), Substitution{}), fact("Q(X)"));
}

TEST(ApplySubst, GroundRequiresBinding) {
  EXPECT_THROW(ground(fact("Q(X)"), Substitution{}), UnboundVariable);
  Substitution s;
  s.terms["X"] = Term::constant("a");
  EXPECT_EQ(ground(fact("Q(f(X))"), s), fact("Q(f(a))"));
}

TEST(ApplySubst, Idempotent) {
  Substitution s;
  s.terms["X"] = Term::apply("f", {Term::constant("a")});
  const Fact once = apply_subst(fact("P(X,Y)"), s);
  EXPECT_EQ(apply_subst(once, s), once);
}

TEST(FactSize, Examples) {
  EXPECT_EQ(fact_size(fact("P(f(a),X,a)")), 5u);
  EXPECT_EQ(fact_size(fact("Time")), 1u);
  EXPECT_EQ(fact_size(fact("V1(pending,p,n(0),n(10))")), 5u);
}

TEST(FactSize, GrowsUnderSubstitution) {
  Substitution s;
  s.terms["X"] = Term::apply("f", {Term::constant("a")});
  const Fact f = fact("P(X,b)");
  EXPECT_GE(fact_size(apply_subst(f, s)), fact_size(f));
}

TEST(Nonces, RenderingAndRenaming) {
  const Fact f = fact("F(n(7),n(3),b)");
  EXPECT_EQ(to_string(f), "F(n(7),n(3),b)");
  EXPECT_EQ(masked_string(f), "F(n(?),n(?),b)");
  EXPECT_TRUE(contains_nonce(f));
  EXPECT_EQ(to_string(rename_nonces(f, {{7, 0}, {3, 1}})), "F(n(0),n(1),b)");
  std::vector<std::uint64_t> ids;
  collect_nonces(f, ids);
  EXPECT_EQ(ids, (std::vector<std::uint64_t>{7, 3}));
}

}  // namespace
}  // namespace tmsr
