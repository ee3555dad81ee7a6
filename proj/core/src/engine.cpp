#include "tmsr/engine.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <thread>
#include <memory>
#include <mutex>
#include <string_view>

namespace tmsr {

bool ValidationReport::balanced() const {
  return std::all_of(rules.begin(), rules.end(), [](const RuleReport& r) { return r.balanced(); });
}

namespace {

void symbols(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Constant || t.kind == Term::Kind::Application) out.insert(t.name);
  for (const Term& a : t.args) symbols(a, out);
}

template <typename F>
void for_each_fact(const ReachabilityProblem& p, F&& f) {
  for (const TimedFact& tf : p.initial.facts()) f(tf.fact);
  for (const InstantaneousAction& r : p.rules) {
    for (const StampedPattern& s : r.lhs) f(s.fact);
    for (const RhsFact& q : r.rhs) f(q.fact);
  }
  for (const StampedPattern& s : p.goal.facts) f(s.fact);
}

}  // namespace

ValidationReport validate(const ReachabilityProblem& problem) {
  ValidationReport report;
  report.dmax = problem.dmax();

  std::map<std::string, std::size_t> arity;
  for_each_fact(problem, [&](const Fact& f) {
    report.max_fact_size = std::max(report.max_fact_size, fact_size(f));
    auto [it, inserted] = arity.try_emplace(f.predicate, f.args.size());
    if (!inserted && it->second != f.args.size()) {
      report.errors.push_back("predicate " + f.predicate + " used with arities " +
                              std::to_string(it->second) + " and " + std::to_string(f.args.size()));
      it->second = f.args.size();
    }
  });

  for (const InstantaneousAction& r : problem.rules) {
    report.rules.push_back({r.name, r.lhs.size(), r.rhs.size()});
    std::vector<RhsFact> rhs = r.rhs;
    try {
      InstantaneousAction again = make_action(r.name, r.lhs, r.guard, r.fresh, rhs);
      if (again.lhs_preserved != r.lhs_preserved || again.time_slot != r.time_slot) {
        report.errors.push_back("rule " + r.name + ": preserved facts are inconsistent");
      }
    } catch (const ShapeError& e) {
      report.errors.push_back(e.what());
    }
    if (r.lhs.size() != r.rhs.size()) {
      report.warnings.push_back("rule " + r.name + " is unbalanced (" + std::to_string(r.lhs.size()) +
                                " vs " + std::to_string(r.rhs.size()) + ")");
    }
  }

  std::set<std::string> goal_vars;
  for (const StampedPattern& s : problem.goal.facts) goal_vars.insert(s.time_var);
  for (const TimeConstraint& c : problem.goal.guard) {
    for (const std::string* v : {&c.left, &c.right}) {
      if (!goal_vars.count(*v)) {
        report.errors.push_back("goal guard variable " + *v + " does not occur in the goal");
      }
    }
  }

  if (!problem.dmax_override_valid()) {
    report.errors.push_back("dmax " + std::to_string(report.dmax) +
                            " is too small: every numeral must be below dmax + 1");
  }
  auto offset_ok = [&](const std::vector<TimeConstraint>& guard, const std::string& where) {
    for (const TimeConstraint& c : guard) {
      if (std::llabs(c.offset) >= static_cast<long long>(report.dmax)) {
        report.errors.push_back(where + ": offset in " + to_string(c) + " is not below dmax");
      }
    }
  };
  for (const InstantaneousAction& r : problem.rules) offset_ok(r.guard, "rule " + r.name);
  offset_ok(problem.goal.guard, "goal");

  if (report.errors.empty()) {
    const CircleConfiguration a = abstract(problem.initial, report.dmax);
    const std::uint32_t t = a.entries()[a.time_entry()].delta_class;
    for (std::uint32_t c = t; c + 1 < a.delta_class_count(); ++c) {
      if (a.gaps()[c] == kInf) {
        report.errors.push_back("initial configuration has a fact more than dmax ahead of Time");
        break;
      }
    }
  }
  return report;
}

BigInt lt_bound(std::uint64_t m, std::uint64_t k, std::uint64_t dmax, std::uint64_t j,
                std::uint64_t d) {
  using boost::multiprecision::pow;
  const auto mk = static_cast<unsigned>(m * k);
  BigInt out = pow(BigInt(j), static_cast<unsigned>(m));
  out *= pow(BigInt(d + 2 * m * k), mk);
  out *= pow(BigInt(m), static_cast<unsigned>(m));
  if (m > 0) out *= pow(BigInt(dmax + 2), static_cast<unsigned>(m - 1));
  return out;
}

BoundInputs bound_inputs(const ReachabilityProblem& problem) {
  BoundInputs in;
  in.m = problem.initial.size();
  in.dmax = problem.dmax();
  std::set<std::string> preds;
  std::set<std::string> syms;
  for_each_fact(problem, [&](const Fact& f) {
    in.k = std::max<std::uint64_t>(in.k, fact_size(f));
    preds.insert(f.predicate);
    for (const Term& t : f.args) symbols(t, syms);
  });
  in.j = preds.size();
  in.d = syms.size();
  return in;
}

bool goal_match(const CircleConfiguration& a, const Goal& goal) {
  return any_symbolic_instance(a, goal.facts, goal.guard);
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Reachable:
      return "Reachable";
    case Outcome::Unreachable:
      return "Unreachable";
    case Outcome::BoundExhausted:
      return "BoundExhausted";
  }
  return "?";
}

namespace {

constexpr std::int32_t kTickRule = -1;
constexpr std::size_t kChunk = 2048;

struct Node {
  std::uint32_t parent;
  std::int32_t rule;
  std::uint32_t occ_begin;
  std::uint32_t occ_len;
};

// Whether a fact's stamp can still influence a rule or the goal. Each pattern
// that can match the fact contributes its conditions on T - t, where T is the
// global time and t the stamp. Lower bounds stay true once they hold and
// violated upper bounds stay violated, because T only grows. A fact whose
// every use is settled this way keeps its stamp out of the visited key.
class Relevance {
 public:
  Relevance(const ReachabilityProblem& p, bool enabled) : enabled_(enabled) {
    for (const InstantaneousAction& r : p.rules) {
      for (std::size_t i = 0; i < r.lhs.size(); ++i) {
        if (i == r.time_slot) continue;
        uses_.push_back(analyse(r.lhs, r.guard, i, r.time_var()));
      }
    }
    std::string goal_time;
    for (const StampedPattern& g : p.goal.facts) {
      if (g.fact.predicate == kTimePredicate && g.fact.args.empty()) goal_time = g.time_var;
    }
    for (std::size_t i = 0; i < p.goal.facts.size(); ++i) {
      if (p.goal.facts[i].time_var == goal_time) continue;
      uses_.push_back(analyse(p.goal.facts, p.goal.guard, i, goal_time));
    }
  }

  bool enabled() const { return enabled_; }

  // Flags the entries of `a` whose stamps no longer matter.
  void timeless(const CircleConfiguration& a, std::vector<char>& out) const {
    out.assign(a.size(), 0);
    const std::size_t time = a.time_entry();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i == time) continue;
      const Info& info = lookup(a.entries()[i].atom);
      bool settled = true;
      for (const Use* u : info.uses) {
        if (!use_settled(*u, a, time, i)) {
          settled = false;
          break;
        }
      }
      out[i] = settled ? 1 : 0;
    }
  }

 private:
  struct Cond {
    std::int64_t u;
    bool upper;
    bool strict;
  };
  struct Use {
    Fact pattern;
    bool other = false;  // tied to another non-Time stamp
    std::vector<Cond> conds;
  };
  struct Info {
    std::vector<const Use*> uses;
  };

  static Use analyse(const std::vector<StampedPattern>& pats, const std::vector<TimeConstraint>& guard,
                     std::size_t i, const std::string& now) {
    Use use;
    use.pattern = pats[i].fact;
    const std::string& x = pats[i].time_var;
    if (x == now) {
      use.conds.push_back({0, false, false});
      use.conds.push_back({0, true, false});
    }
    for (std::size_t j = 0; j < pats.size(); ++j) {
      if (j != i && pats[j].time_var == x && x != now) use.other = true;
    }
    for (const TimeConstraint& c : guard) {
      if (c.left != x && c.right != x) continue;
      if (c.left == c.right) continue;
      const std::string& y = c.left == x ? c.right : c.left;
      if (y != now || now.empty()) {
        use.other = true;
        continue;
      }
      const bool time_left = c.left == now;
      const std::int64_t u = time_left ? c.offset : -c.offset;
      switch (c.relation) {
        case Relation::Greater:
          use.conds.push_back({u, !time_left, true});
          break;
        case Relation::GreaterEq:
          use.conds.push_back({u, !time_left, false});
          break;
        case Relation::Equal:
          use.conds.push_back({u, false, false});
          use.conds.push_back({u, true, false});
          break;
      }
    }
    return use;
  }

  // T - t > u, or >= u when not strict.
  static bool exceeds(const CircleConfiguration& a, std::size_t time, std::size_t e, std::int64_t u, bool strict) {
    const std::int64_t d = a.delta_between(time, e);
    if (d != u) return d > u;
    const std::uint32_t ut = a.entries()[time].circle_class;
    const std::uint32_t ue = a.entries()[e].circle_class;
    return strict ? ut > ue : ut >= ue;
  }

  static bool use_settled(const Use& use, const CircleConfiguration& a, std::size_t time, std::size_t e) {
    bool has_upper = false;
    bool lower_hold = true;
    for (const Cond& c : use.conds) {
      if (c.upper) {
        has_upper = true;
        // Violated for good: T - t >= u (strict) or > u.
        if (exceeds(a, time, e, c.u, !c.strict)) return true;
      } else if (!exceeds(a, time, e, c.u, c.strict)) {
        lower_hold = false;
      }
    }
    return !use.other && !has_upper && lower_hold;
  }

  const Info& lookup(const Atom* atom) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (atom->id >= cache_.size()) cache_.resize(atom->id + 1);
    auto& slot = cache_[atom->id];
    if (!slot) {
      slot = std::make_unique<Info>();
      for (const Use& u : uses_) {
        Substitution s;
        if (match_fact(u.pattern, atom->fact, s)) slot->uses.push_back(&u);
      }
    }
    return *slot;
  }

  bool enabled_;
  std::vector<Use> uses_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<Info>> cache_;
};

struct Candidate {
  std::int32_t rule;
  std::vector<std::size_t> occurrences;
  CircleConfiguration state;
  std::string key;
  bool goal;
};

std::vector<Candidate> expand(const ReachabilityProblem& problem, const Relevance& relevance,
                              const CircleConfiguration& a) {
  std::vector<Candidate> out;
  std::vector<char> timeless;
  auto add = [&](std::int32_t rule, std::vector<std::size_t> occ, CircleConfiguration&& b) {
    Candidate c{rule, std::move(occ), std::move(b), {}, false};
    if (relevance.enabled()) {
      relevance.timeless(c.state, timeless);
      compact_key(c.state, timeless, c.key);
    } else {
      compact_key(c.state, c.key);
    }
    c.goal = any_symbolic_instance(c.state, problem.goal.facts, problem.goal.guard);
    out.push_back(std::move(c));
  };
  for_each_rule_successor(a, problem.rules,
                          [&](std::size_t ri, const std::vector<std::size_t>& occ, CircleConfiguration&& b) {
                            add(static_cast<std::int32_t>(ri), occ, std::move(b));
                          });
  add(kTickRule, {}, next(a));
  return out;
}

// Open-addressing set of byte strings stored back to back in one arena.
class KeySet {
 public:
  KeySet() : slots_(1 << 12, 0) {}

  bool insert(std::string_view key) {
    if ((count_ + 1) * 2 > slots_.size()) grow();
    const std::uint64_t h = std::hash<std::string_view>{}(key);
    std::size_t mask = slots_.size() - 1;
    for (std::size_t i = h & mask;; i = (i + 1) & mask) {
      const std::uint64_t slot = slots_[i];
      if (slot == 0) {
        slots_[i] = store(key, h);
        ++count_;
        return true;
      }
      if ((slot >> 48) == (h >> 48) && view(slot) == key) return false;
    }
  }

  std::size_t size() const { return count_; }

 private:
  // Slot layout: 16 bits of hash, 48 bits of arena offset plus one.
  std::uint64_t store(std::string_view key, std::uint64_t h) {
    const std::uint64_t off = arena_.size();
    std::size_t n = key.size();
    while (n >= 0x80) {
      arena_.push_back(static_cast<char>((n & 0x7F) | 0x80));
      n >>= 7;
    }
    arena_.push_back(static_cast<char>(n));
    arena_.append(key);
    return ((h >> 48) << 48) | (off + 1);
  }

  std::string_view view(std::uint64_t slot) const {
    std::size_t pos = (slot & 0xFFFFFFFFFFFFull) - 1;
    std::size_t n = 0;
    for (int shift = 0;; shift += 7) {
      const auto b = static_cast<unsigned char>(arena_[pos++]);
      n |= std::size_t{b & 0x7Fu} << shift;
      if (b < 0x80) break;
    }
    return std::string_view(arena_).substr(pos, n);
  }

  void grow() {
    std::vector<std::uint64_t> old(slots_.size() * 2, 0);
    old.swap(slots_);
    const std::size_t mask = slots_.size() - 1;
    for (std::uint64_t slot : old) {
      if (slot == 0) continue;
      const std::uint64_t h = std::hash<std::string_view>{}(view(slot));
      std::size_t i = h & mask;
      while (slots_[i] != 0) i = (i + 1) & mask;
      slots_[i] = slot;
    }
  }

  std::vector<std::uint64_t> slots_;
  std::string arena_;
  std::size_t count_ = 0;
};

PlanStep replay_step(const ReachabilityProblem& problem, const CircleConfiguration& a,
                     std::int32_t rule, const std::vector<std::size_t>& occurrences) {
  PlanStep step;
  if (rule == kTickRule) {
    step.kind = PlanStep::Kind::Tick;
    step.rule_name = "tick";
    step.after = next(a);
    return step;
  }
  const InstantaneousAction& r = problem.rules[static_cast<std::size_t>(rule)];
  step.kind = PlanStep::Kind::Rule;
  step.rule = static_cast<std::size_t>(rule);
  step.rule_name = r.name;
  step.occurrences = occurrences;
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    if (!match_fact(r.lhs[i].fact, a.entries()[occurrences[i]].fact(), step.subst)) {
      throw std::logic_error("plan reconstruction diverged at rule " + r.name);
    }
  }
  const auto ids = unused_nonces(a, r.fresh.size());
  for (std::size_t i = 0; i < r.fresh.size(); ++i) step.subst.terms[r.fresh[i]] = Term::fresh(ids[i]);
  SymbolicInstance inst{occurrences, step.subst, {}};
  step.after = apply_instantaneous_symbolic(a, r, inst);
  return step;
}

Plan build_plan(const ReachabilityProblem& problem, const CircleConfiguration& root,
                const std::vector<Node>& nodes, const std::vector<std::uint32_t>& pool,
                std::uint32_t last) {
  std::vector<std::uint32_t> path;
  for (std::uint32_t n = last; n != 0; n = nodes[n].parent) path.push_back(n);
  std::reverse(path.begin(), path.end());
  Plan plan;
  plan.initial = root;
  CircleConfiguration cur = root;
  for (std::uint32_t n : path) {
    const Node& node = nodes[n];
    std::vector<std::size_t> occ(pool.begin() + node.occ_begin,
                                 pool.begin() + node.occ_begin + node.occ_len);
    PlanStep step = replay_step(problem, cur, node.rule, occ);
    cur = step.after;
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

}  // namespace

Verdict search(const ReachabilityProblem& problem, const SearchOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const ValidationReport report = validate(problem);
  if (!report.ok()) throw InvalidProblem(report.errors.front());
  const bool balanced = report.balanced();
  if (!balanced && !options.max_states) {
    throw InvalidProblem("problem has unbalanced rules; an explicit state bound is required");
  }

  Verdict verdict;
  std::uint64_t limit = options.max_states.value_or(0);
  if (balanced) {
    const BoundInputs in = bound_inputs(problem);
    const BigInt lt = lt_bound(in.m, in.k, in.dmax, in.j, in.d);
    if (lt <= std::numeric_limits<std::uint64_t>::max()) {
      const auto lt64 = lt.convert_to<std::uint64_t>();
      limit = limit == 0 ? lt64 : std::min(limit, lt64);
    }
  }
  verdict.bound = limit;
  auto finish = [&](Outcome o) {
    verdict.outcome = o;
    verdict.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return verdict;
  };

  const std::uint32_t dmax = report.dmax;
  const CircleConfiguration root = abstract(problem.initial, dmax);
  const Relevance relevance(problem, options.settle_stamps);
  KeySet visited;
  {
    std::string key;
    std::vector<char> timeless;
    relevance.timeless(root, timeless);
    if (!relevance.enabled()) timeless.assign(root.size(), 0);
    compact_key(root, timeless, key);
    visited.insert(key);
  }
  verdict.visited = 1;
  if (goal_match(root, problem.goal)) {
    verdict.plan = Plan{root, {}};
    return finish(Outcome::Reachable);
  }

  std::vector<Node> nodes{{0, kTickRule, 0, 0}};
  std::vector<std::uint32_t> pool;
  std::vector<std::pair<std::uint32_t, CircleConfiguration>> frontier{{0, root}};
  const unsigned threads = std::max(1u, options.threads);
  std::size_t depth = 0;

  while (!frontier.empty()) {
    std::vector<std::pair<std::uint32_t, CircleConfiguration>> upcoming;
    for (std::size_t lo = 0; lo < frontier.size(); lo += kChunk) {
      if (options.time_limit &&
          std::chrono::steady_clock::now() - started > *options.time_limit) {
        verdict.reason = "time limit reached";
        return finish(Outcome::BoundExhausted);
      }
      const std::size_t hi = std::min(frontier.size(), lo + kChunk);
      std::vector<std::vector<Candidate>> results(hi - lo);
      if (threads == 1) {
        for (std::size_t i = lo; i < hi; ++i) results[i - lo] = expand(problem, relevance, frontier[i].second);
      } else {
        std::vector<std::thread> pool_threads;
        for (unsigned w = 0; w < threads; ++w) {
          pool_threads.emplace_back([&, w] {
            for (std::size_t i = lo + w; i < hi; i += threads) {
              results[i - lo] = expand(problem, relevance, frontier[i].second);
            }
          });
        }
        for (auto& t : pool_threads) t.join();
      }
      for (std::size_t i = lo; i < hi; ++i) {
        for (Candidate& c : results[i - lo]) {
          if (!visited.insert(c.key)) continue;
          ++verdict.visited;
          const auto id = static_cast<std::uint32_t>(nodes.size());
          nodes.push_back({frontier[i].first, c.rule, static_cast<std::uint32_t>(pool.size()),
                           static_cast<std::uint32_t>(c.occurrences.size())});
          for (std::size_t o : c.occurrences) pool.push_back(static_cast<std::uint32_t>(o));
          if (c.goal) {
            verdict.plan = build_plan(problem, root, nodes, pool, id);
            return finish(Outcome::Reachable);
          }
          if (limit != 0 && verdict.visited >= limit) {
            verdict.reason = "state bound reached";
            return finish(Outcome::BoundExhausted);
          }
          upcoming.emplace_back(id, std::move(c.state));
        }
      }
    }
    frontier = std::move(upcoming);
    ++depth;
    if (options.on_layer) options.on_layer(depth, verdict.visited, frontier.size());
  }
  if (!balanced) {
    verdict.reason = "unbalanced problem; frontier exhausted";
    return finish(Outcome::BoundExhausted);
  }
  return finish(Outcome::Unreachable);
}

std::optional<PlanStep> schedule(const ReachabilityProblem& problem, std::size_t i,
                                 const SearchOptions& options) {
  const Verdict v = search(problem, options);
  if (v.outcome != Outcome::Reachable || i == 0 || i > v.plan->steps.size()) return std::nullopt;
  return v.plan->steps[i - 1];
}

ConcreteTrace replay(const ReachabilityProblem& problem, const Plan& plan) {
  const std::uint32_t dmax = problem.dmax();
  ConcreteTrace trace;
  TimedConfiguration s = problem.initial;
  if (!(abstract(s, dmax) == plan.initial)) {
    throw ReplayError("initial configuration does not abstract to the plan's start");
  }
  trace.states.push_back(s);
  for (std::size_t n = 0; n < plan.steps.size(); ++n) {
    const PlanStep& step = plan.steps[n];
    if (step.kind == PlanStep::Kind::Tick) {
      const Rational eps = next_epsilon(s);
      s = apply_tick(s, eps);
      trace.labels.push_back("tick " + to_string(eps));
    } else {
      std::vector<std::size_t> entry_of;
      abstract(s, dmax, &entry_of);
      std::vector<std::size_t> fact_of(entry_of.size());
      for (std::size_t i = 0; i < entry_of.size(); ++i) fact_of[entry_of[i]] = i;
      const InstantaneousAction& r = problem.rules[step.rule];
      Instance inst;
      inst.subst.terms = step.subst.terms;
      for (std::size_t i = 0; i < r.lhs.size(); ++i) {
        const std::size_t k = fact_of[step.occurrences[i]];
        inst.occurrences.push_back(k);
        inst.subst.times[r.lhs[i].time_var] = s.facts()[k].stamp;
      }
      try {
        s = apply_instantaneous(s, r, inst);
      } catch (const RuleNotApplicable& e) {
        throw ReplayError("step " + std::to_string(n + 1) + ": " + e.what());
      }
      trace.labels.push_back(r.name);
    }
    if (!(abstract(s, dmax) == step.after)) {
      throw ReplayError("step " + std::to_string(n + 1) + " diverges from the symbolic plan");
    }
    trace.states.push_back(s);
  }
  trace.goal_holds = goal_holds(s, problem.goal);
  return trace;
}

std::string format_step(const PlanStep& step) {
  if (step.kind == PlanStep::Kind::Tick) return "tick";
  std::string out = step.rule_name;
  if (!step.subst.terms.empty()) {
    out += " [";
    bool first = true;
    for (const auto& [name, value] : step.subst.terms) {
      if (!first) out += ", ";
      first = false;
      out += name + "=" + to_string(value);
    }
    out += "]";
  }
  return out;
}

std::string format_plan(const ReachabilityProblem&, const Plan& plan, const ConcreteTrace* trace) {
  std::ostringstream out;
  out << "plan: " << plan.steps.size() << " steps\n";
  out << "   0. start\n      " << to_string(plan.initial) << "\n";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    out << (i + 1 < 10 ? "   " : i + 1 < 100 ? "  " : " ") << i + 1 << ". "
        << format_step(plan.steps[i]) << "\n      " << to_string(plan.steps[i].after) << "\n";
  }
  if (trace) {
    out << "witness:\n";
    for (std::size_t i = 0; i < trace->states.size(); ++i) {
      out << "   " << i << ". ";
      if (i > 0) out << trace->labels[i - 1] << " -> ";
      out << to_string(trace->states[i]) << "\n";
    }
    out << "goal holds concretely: " << (trace->goal_holds ? "yes" : "no") << "\n";
  }
  return out.str();
}

}  // namespace tmsr
