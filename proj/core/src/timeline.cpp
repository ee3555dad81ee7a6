#include "tmsr/timeline.hpp"

#include <algorithm>
#include <set>

namespace tmsr {

namespace {

std::vector<TimedFact> sorted_facts(std::vector<TimedFact> facts) {
  std::vector<std::pair<std::string, std::size_t>> keys;
  keys.reserve(facts.size());
  for (std::size_t i = 0; i < facts.size(); ++i) keys.emplace_back(to_string(facts[i].fact), i);
  std::vector<std::size_t> order(facts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (facts[a].stamp != facts[b].stamp) return facts[a].stamp < facts[b].stamp;
    return keys[a].first < keys[b].first;
  });
  std::vector<TimedFact> out;
  out.reserve(facts.size());
  for (std::size_t i : order) out.push_back(std::move(facts[i]));
  return out;
}

void term_variables(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Variable) out.insert(t.name);
  for (const Term& a : t.args) term_variables(a, out);
}

std::set<std::string> fact_variables(const Fact& f) {
  std::set<std::string> out;
  for (const Term& a : f.args) term_variables(a, out);
  return out;
}

}  // namespace

TimedConfiguration::TimedConfiguration(std::vector<TimedFact> facts) {
  std::size_t times = 0;
  for (const TimedFact& tf : facts) {
    if (!tf.fact.is_ground()) {
      throw std::invalid_argument("fact " + to_string(tf.fact) + " is not ground");
    }
    if (tf.stamp < 0) {
      throw std::invalid_argument("negative timestamp on " + to_string(tf.fact));
    }
    if (tf.fact.predicate == kTimePredicate) {
      if (!tf.fact.args.empty()) throw std::invalid_argument("Time takes no arguments");
      ++times;
    }
  }
  if (times != 1) {
    throw std::invalid_argument("configuration must contain exactly one Time fact, found " +
                                std::to_string(times));
  }
  facts_ = sorted_facts(std::move(facts));
  for (std::size_t i = 0; i < facts_.size(); ++i) {
    if (facts_[i].fact.predicate == kTimePredicate) time_index_ = i;
  }
}

std::vector<TimedFact> TimedConfiguration::canonical() const { return facts_; }

std::optional<std::uint64_t> TimedConfiguration::max_nonce() const {
  std::optional<std::uint64_t> best;
  std::vector<std::uint64_t> ids;
  for (const TimedFact& tf : facts_) {
    ids.clear();
    collect_nonces(tf.fact, ids);
    for (std::uint64_t id : ids) {
      if (!best || id > *best) best = id;
    }
  }
  return best;
}

std::string to_string(const TimedConfiguration& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.facts().size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(s.facts()[i].fact) + "@" + to_string(s.facts()[i].stamp);
  }
  return out + "}";
}

std::string to_string(const TimeConstraint& c) {
  std::string out = c.left;
  switch (c.relation) {
    case Relation::Greater:
      out += " > ";
      break;
    case Relation::GreaterEq:
      out += " >= ";
      break;
    case Relation::Equal:
      out += " = ";
      break;
  }
  out += c.right;
  if (c.offset > 0) out += " + " + std::to_string(c.offset);
  if (c.offset < 0) out += " - " + std::to_string(-c.offset);
  return out;
}

bool compare_difference(const Rational& diff, Relation relation, std::int64_t offset) {
  const Rational d(offset);
  switch (relation) {
    case Relation::Greater:
      return diff > d;
    case Relation::GreaterEq:
      return diff >= d;
    case Relation::Equal:
      return diff == d;
  }
  return false;
}

bool eval_constraint(const TimeConstraint& c, const std::map<std::string, Rational>& binding) {
  auto l = binding.find(c.left);
  if (l == binding.end()) throw UnboundVariable(c.left);
  auto r = binding.find(c.right);
  if (r == binding.end()) throw UnboundVariable(c.right);
  return compare_difference(l->second - r->second, c.relation, c.offset);
}

std::size_t InstantaneousAction::created_count() const {
  return static_cast<std::size_t>(
      std::count_if(rhs.begin(), rhs.end(), [](const RhsFact& f) { return f.created(); }));
}

std::size_t InstantaneousAction::consumed_count() const {
  return static_cast<std::size_t>(std::count(lhs_preserved.begin(), lhs_preserved.end(), false));
}

InstantaneousAction make_action(std::string name, std::vector<StampedPattern> lhs,
                                std::vector<TimeConstraint> guard, std::vector<std::string> fresh,
                                std::vector<RhsFact> rhs) {
  InstantaneousAction r;
  r.name = std::move(name);
  r.lhs = std::move(lhs);
  r.guard = std::move(guard);
  r.fresh = std::move(fresh);
  r.rhs = std::move(rhs);
  const std::string where = "rule " + r.name + ": ";

  std::size_t times = 0;
  std::set<std::string> time_vars;
  std::set<std::string> term_vars;
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    const StampedPattern& p = r.lhs[i];
    if (p.fact.predicate == kTimePredicate) {
      if (!p.fact.args.empty()) throw ShapeError(where + "Time takes no arguments");
      r.time_slot = i;
      ++times;
    }
    time_vars.insert(p.time_var);
    auto vars = fact_variables(p.fact);
    term_vars.insert(vars.begin(), vars.end());
  }
  if (times != 1) throw ShapeError(where + "pre-condition must contain exactly one Time fact");
  for (const std::string& v : time_vars) {
    if (term_vars.count(v)) throw ShapeError(where + "'" + v + "' is both a term and a time variable");
  }
  for (const TimeConstraint& c : r.guard) {
    for (const std::string* v : {&c.left, &c.right}) {
      if (!time_vars.count(*v)) {
        throw ShapeError(where + "guard variable " + *v + " does not occur in the pre-condition");
      }
    }
  }
  std::set<std::string> fresh_set;
  for (const std::string& x : r.fresh) {
    if (!fresh_set.insert(x).second) throw ShapeError(where + "fresh variable " + x + " repeated");
    if (term_vars.count(x) || time_vars.count(x)) {
      throw ShapeError(where + "fresh variable " + x + " occurs in the pre-condition");
    }
  }

  const std::string& now = r.lhs[r.time_slot].time_var;
  r.lhs_preserved.assign(r.lhs.size(), false);
  for (RhsFact& q : r.rhs) {
    if (!q.delay) {
      bool paired = false;
      for (std::size_t j = 0; j < r.lhs.size(); ++j) {
        if (!r.lhs_preserved[j] && r.lhs[j].fact == q.fact && r.lhs[j].time_var == q.time_var) {
          r.lhs_preserved[j] = true;
          paired = true;
          break;
        }
      }
      if (paired) continue;
      if (q.time_var != now) {
        throw ShapeError(where + "post-condition fact " + to_string(q.fact) + "@" + q.time_var +
                         " is neither preserved nor stamped " + now + " + D");
      }
      q.delay = 0;
    }
    if (q.time_var != now) {
      throw ShapeError(where + "created fact " + to_string(q.fact) + " must be stamped " + now +
                       " + D");
    }
    if (q.fact.predicate == kTimePredicate) throw ShapeError(where + "Time cannot be created");
    for (const std::string& v : fact_variables(q.fact)) {
      if (!term_vars.count(v) && !fresh_set.count(v)) {
        throw ShapeError(where + "variable " + v + " in " + to_string(q.fact) + " is unbound");
      }
    }
  }
  if (!r.lhs_preserved[r.time_slot]) throw ShapeError(where + "Time must be preserved");
  return r;
}

std::uint32_t compute_dmax(std::span<const Rational> numerals) {
  Rational best = 0;
  for (const Rational& n : numerals) best = std::max(best, Rational(abs(n)));
  // smallest natural strictly above best + 1
  return static_cast<std::uint32_t>(integer_part(best + 1)) + 1;
}

namespace {

std::vector<Fact> bare_facts(const TimedConfiguration& s) {
  std::vector<Fact> out;
  out.reserve(s.size());
  for (const TimedFact& tf : s.facts()) out.push_back(tf.fact);
  return out;
}

// Instances of the pre-condition, guard not yet checked.
std::vector<Instance> raw_instances(const TimedConfiguration& s, std::span<const StampedPattern> lhs) {
  std::vector<Fact> patterns;
  patterns.reserve(lhs.size());
  for (const StampedPattern& p : lhs) patterns.push_back(p.fact);
  const std::vector<Fact> target = bare_facts(s);
  std::vector<Instance> out;
  for (Match& m : match_occurrences(patterns, target)) {
    bool ok = true;
    for (std::size_t i = 0; i < lhs.size() && ok; ++i) {
      const Rational& stamp = s.facts()[m.occurrences[i]].stamp;
      auto [it, inserted] = m.subst.times.try_emplace(lhs[i].time_var, stamp);
      ok = inserted || it->second == stamp;
    }
    if (ok) out.push_back(Instance{std::move(m.occurrences), std::move(m.subst)});
  }
  return out;
}

bool guard_holds(std::span<const TimeConstraint> guard, const Substitution& subst) {
  return std::all_of(guard.begin(), guard.end(),
                     [&](const TimeConstraint& c) { return eval_constraint(c, subst.times); });
}

}  // namespace

std::vector<Instance> find_instances(const TimedConfiguration& s, const InstantaneousAction& r) {
  std::vector<Instance> out;
  for (Instance& inst : raw_instances(s, r.lhs)) {
    if (guard_holds(r.guard, inst.subst)) out.push_back(std::move(inst));
  }
  return out;
}

void NonceCounter::observe(const TimedConfiguration& s) {
  auto top = s.max_nonce();
  if (!top) return;
  std::uint64_t want = *top + 1;
  std::uint64_t cur = next_.load(std::memory_order_relaxed);
  while (cur < want && !next_.compare_exchange_weak(cur, want, std::memory_order_relaxed)) {
  }
}

Instance bind_fresh(const InstantaneousAction& r, Instance inst, NonceCounter& nonces) {
  for (const std::string& x : r.fresh) inst.subst.terms[x] = Term::fresh(nonces.allocate());
  return inst;
}

TimedConfiguration apply_instantaneous(const TimedConfiguration& s, const InstantaneousAction& r,
                                       const Instance& inst) {
  if (inst.occurrences.size() != r.lhs.size()) {
    throw RuleNotApplicable("rule " + r.name + ": wrong number of matched occurrences");
  }
  std::vector<bool> used(s.size(), false);
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    const std::size_t k = inst.occurrences[i];
    if (k >= s.size() || used[k]) {
      throw RuleNotApplicable("rule " + r.name + ": pattern not present");
    }
    used[k] = true;
    const TimedFact& target = s.facts()[k];
    auto t = inst.subst.times.find(r.lhs[i].time_var);
    if (t == inst.subst.times.end() || t->second != target.stamp) {
      throw RuleNotApplicable("rule " + r.name + ": pattern not present");
    }
    Fact f = apply_subst(r.lhs[i].fact, inst.subst);
    if (!(f == target.fact)) {
      throw RuleNotApplicable("rule " + r.name + ": pattern " + to_string(r.lhs[i].fact) +
                              " not present");
    }
  }
  for (const TimeConstraint& c : r.guard) {
    if (!eval_constraint(c, inst.subst.times)) {
      throw RuleNotApplicable("rule " + r.name + ": guard " + to_string(c) + " violated");
    }
  }
  std::vector<std::uint64_t> present;
  for (const TimedFact& tf : s.facts()) collect_nonces(tf.fact, present);
  for (const std::string& x : r.fresh) {
    auto it = inst.subst.terms.find(x);
    if (it == inst.subst.terms.end() || it->second.kind != Term::Kind::Nonce) {
      throw RuleNotApplicable("rule " + r.name + ": fresh variable " + x + " not bound to a nonce");
    }
    if (std::find(present.begin(), present.end(), it->second.nonce) != present.end()) {
      throw RuleNotApplicable("rule " + r.name + ": nonce " + to_string(it->second) +
                              " is not fresh");
    }
  }

  std::vector<TimedFact> out;
  out.reserve(s.size() + r.rhs.size());
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    if (r.lhs_preserved[i]) used[inst.occurrences[i]] = false;
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!used[k]) out.push_back(s.facts()[k]);
  }
  for (const RhsFact& q : r.rhs) {
    if (!q.created()) continue;
    out.push_back(TimedFact{ground(q.fact, inst.subst), s.now() + Rational(*q.delay)});
  }
  return TimedConfiguration(std::move(out));
}

TimedConfiguration apply_instantaneous(const TimedConfiguration& s, const InstantaneousAction& r,
                                       const Substitution& subst) {
  auto agrees = [&](const Instance& inst) {
    for (const auto& [name, value] : subst.terms) {
      if (std::find(r.fresh.begin(), r.fresh.end(), name) != r.fresh.end()) continue;
      auto it = inst.subst.terms.find(name);
      if (it == inst.subst.terms.end() || !(it->second == value)) return false;
    }
    for (const auto& [name, value] : subst.times) {
      auto it = inst.subst.times.find(name);
      if (it == inst.subst.times.end() || it->second != value) return false;
    }
    return true;
  };
  bool any_pattern = false;
  for (Instance& inst : raw_instances(s, r.lhs)) {
    if (!agrees(inst)) continue;
    any_pattern = true;
    if (!guard_holds(r.guard, inst.subst)) continue;
    for (const std::string& x : r.fresh) {
      auto it = subst.terms.find(x);
      if (it != subst.terms.end()) inst.subst.terms[x] = it->second;
    }
    if (!r.fresh.empty() && inst.subst.terms.count(r.fresh.front()) == 0) {
      NonceCounter counter;
      counter.observe(s);
      inst = bind_fresh(r, std::move(inst), counter);
    }
    return apply_instantaneous(s, r, inst);
  }
  if (any_pattern) {
    for (Instance& inst : raw_instances(s, r.lhs)) {
      if (!agrees(inst)) continue;
      for (const TimeConstraint& c : r.guard) {
        if (!eval_constraint(c, inst.subst.times)) {
          throw RuleNotApplicable("rule " + r.name + ": guard " + to_string(c) + " violated");
        }
      }
    }
  }
  throw RuleNotApplicable("rule " + r.name + ": pattern not present");
}

TimedConfiguration apply_tick(const TimedConfiguration& s, const Rational& epsilon) {
  if (epsilon <= 0) throw std::invalid_argument("tick requires a positive epsilon");
  std::vector<TimedFact> facts = s.facts();
  facts[s.time_index()].stamp += epsilon;
  return TimedConfiguration(std::move(facts));
}

bool goal_holds(const TimedConfiguration& s, const Goal& goal) {
  for (const Instance& inst : raw_instances(s, goal.facts)) {
    if (guard_holds(goal.guard, inst.subst)) return true;
  }
  return false;
}

namespace {

// Truth vector of every constraint between two stamps over offsets -dmax..dmax.
bool same_relations(const Rational& ai, const Rational& aj, const Rational& bi, const Rational& bj,
                    std::int64_t dmax) {
  const Rational da = ai - aj;
  const Rational db = bi - bj;
  for (std::int64_t d = -dmax; d <= dmax; ++d) {
    if (compare_difference(da, Relation::Greater, d) != compare_difference(db, Relation::Greater, d))
      return false;
    if (compare_difference(da, Relation::Equal, d) != compare_difference(db, Relation::Equal, d))
      return false;
  }
  return true;
}

bool unify_nonces(const Fact& a, const Fact& b, std::map<std::uint64_t, std::uint64_t>& fwd,
                  std::map<std::uint64_t, std::uint64_t>& back) {
  std::vector<std::uint64_t> na, nb;
  collect_nonces(a, na);
  collect_nonces(b, nb);
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    auto [f, fi] = fwd.try_emplace(na[i], nb[i]);
    if (!fi && f->second != nb[i]) return false;
    auto [g, gi] = back.try_emplace(nb[i], na[i]);
    if (!gi && g->second != na[i]) return false;
  }
  return true;
}

struct EquivSearch {
  const std::vector<TimedFact>& a;
  const std::vector<TimedFact>& b;
  std::vector<std::string> masked_a;
  std::vector<std::string> masked_b;
  std::int64_t dmax;
  std::vector<std::size_t> assign;
  std::vector<bool> taken;

  bool run(std::size_t i, const std::map<std::uint64_t, std::uint64_t>& fwd,
           const std::map<std::uint64_t, std::uint64_t>& back) {
    if (i == a.size()) return true;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (taken[k] || masked_a[i] != masked_b[k]) continue;
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) {
        ok = same_relations(a[i].stamp, a[j].stamp, b[k].stamp, b[assign[j]].stamp, dmax);
      }
      if (!ok) continue;
      auto f2 = fwd;
      auto b2 = back;
      if (!unify_nonces(a[i].fact, b[k].fact, f2, b2)) continue;
      taken[k] = true;
      assign.push_back(k);
      if (run(i + 1, f2, b2)) return true;
      assign.pop_back();
      taken[k] = false;
    }
    return false;
  }
};

}  // namespace

bool equivalent(const TimedConfiguration& a, const TimedConfiguration& b, std::uint32_t dmax) {
  if (a.size() != b.size()) return false;
  EquivSearch search{a.facts(), b.facts(), {}, {}, static_cast<std::int64_t>(dmax), {}, {}};
  for (const TimedFact& tf : a.facts()) search.masked_a.push_back(masked_string(tf.fact));
  for (const TimedFact& tf : b.facts()) search.masked_b.push_back(masked_string(tf.fact));
  search.taken.assign(b.size(), false);
  return search.run(0, {}, {});
}

}  // namespace tmsr
