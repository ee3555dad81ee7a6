#include "tmsr/circle.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_map>

namespace tmsr {

namespace {

struct Interner {
  std::mutex mu;
  std::unordered_map<std::string, std::unique_ptr<Atom>> table;
};

Interner& interner() {
  static Interner instance;
  return instance;
}

bool entry_less(const CircleEntry& x, const CircleEntry& y) {
  if (x.delta_class != y.delta_class) return x.delta_class < y.delta_class;
  if (x.circle_class != y.circle_class) return x.circle_class < y.circle_class;
  return x.atom != y.atom && x.atom->text < y.atom->text;
}

}  // namespace

const Atom* intern(const Fact& f) {
  std::string text = to_string(f);
  Interner& in = interner();
  std::lock_guard<std::mutex> lock(in.mu);
  auto it = in.table.find(text);
  if (it != in.table.end()) return it->second.get();
  auto atom = std::make_unique<Atom>();
  atom->fact = f;
  atom->text = text;
  atom->masked = masked_string(f);
  atom->has_nonce = contains_nonce(f);
  atom->id = static_cast<std::uint32_t>(in.table.size());
  const Atom* out = atom.get();
  in.table.emplace(std::move(text), std::move(atom));
  return out;
}

std::uint32_t add_gaps(std::uint32_t a, std::uint32_t b, std::uint32_t dmax) {
  if (a == kInf || b == kInf) return kInf;
  const std::uint64_t sum = std::uint64_t{a} + b;
  return sum > dmax ? kInf : static_cast<std::uint32_t>(sum);
}

CircleConfiguration::CircleConfiguration(std::vector<CircleEntry> entries,
                                         std::vector<std::uint32_t> gaps,
                                         std::uint32_t circle_classes, std::uint32_t dmax)
    : entries_(std::move(entries)), gaps_(std::move(gaps)), circle_classes_(circle_classes),
      dmax_(dmax) {
  const std::size_t n = gaps_.size() + 1;
  std::vector<bool> delta_used(n, false);
  std::vector<bool> circle_used(circle_classes_ + 1, false);
  std::size_t times = 0;
  for (const CircleEntry& e : entries_) {
    if (e.delta_class >= n) throw std::invalid_argument("delta class out of range");
    if (e.circle_class > circle_classes_) throw std::invalid_argument("circle class out of range");
    delta_used[e.delta_class] = true;
    circle_used[e.circle_class] = true;
    if (e.atom->fact.predicate == kTimePredicate) ++times;
  }
  if (times != 1) throw std::invalid_argument("circle-configuration needs exactly one Time fact");
  if (!std::all_of(delta_used.begin(), delta_used.end(), [](bool b) { return b; })) {
    throw std::invalid_argument("empty delta class");
  }
  for (std::size_t i = 1; i < circle_used.size(); ++i) {
    if (!circle_used[i]) throw std::invalid_argument("empty circle class");
  }
  for (std::uint32_t g : gaps_) {
    if (g != kInf && (g == 0 || g > dmax_)) throw std::invalid_argument("gap out of range");
  }
  normalize();
}

void CircleConfiguration::normalize() {
  std::sort(entries_.begin(), entries_.end(), entry_less);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].atom->fact.predicate == kTimePredicate) time_ = i;
  }
}

std::vector<std::vector<std::string>> CircleConfiguration::delta_groups() const {
  std::vector<std::vector<std::string>> out(delta_class_count());
  for (const CircleEntry& e : entries_) out[e.delta_class].push_back(e.text());
  for (auto& g : out) std::sort(g.begin(), g.end());
  return out;
}

std::vector<std::string> CircleConfiguration::zero_point() const {
  std::vector<std::string> out;
  for (const CircleEntry& e : entries_) {
    if (e.circle_class == 0) out.push_back(e.text());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::string>> CircleConfiguration::circle_groups() const {
  std::vector<std::vector<std::string>> out(circle_classes_);
  for (const CircleEntry& e : entries_) {
    if (e.circle_class > 0) out[e.circle_class - 1].push_back(e.text());
  }
  for (auto& g : out) std::sort(g.begin(), g.end());
  return out;
}

std::int64_t CircleConfiguration::delta_between(std::size_t p, std::size_t q) const {
  std::uint32_t lo = entries_[q].delta_class;
  std::uint32_t hi = entries_[p].delta_class;
  const bool negative = lo > hi;
  if (negative) std::swap(lo, hi);
  std::uint32_t sum = 0;
  for (std::uint32_t c = lo; c < hi; ++c) sum = add_gaps(sum, gaps_[c], dmax_);
  if (sum == kInf) return negative ? -kDeltaInf : kDeltaInf;
  return negative ? -std::int64_t{sum} : std::int64_t{sum};
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "{";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    out += items[i];
  }
  return out + "}";
}

}  // namespace

std::string to_string(const CircleConfiguration& a) {
  const auto groups = a.delta_groups();
  std::string out = "⟨";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i > 0) {
      const std::uint32_t g = a.gaps()[i - 1];
      out += g == kInf ? " ∞ " : " " + std::to_string(g) + " ";
    }
    out += join(groups[i]);
  }
  out += "⟩ / [" + join(a.zero_point()) + "Z";
  for (const auto& c : a.circle_groups()) out += " " + join(c);
  return out + "]";
}

CircleConfiguration abstract(const TimedConfiguration& s, std::uint32_t dmax,
                             std::vector<std::size_t>* entry_of) {
  std::vector<BigInt> ints;
  std::vector<Rational> fracs;
  for (const TimedFact& tf : s.facts()) {
    ints.push_back(integer_part(tf.stamp));
    Rational f = fractional_part(tf.stamp);
    if (f != 0) fracs.push_back(f);
  }
  std::vector<BigInt> levels = ints;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::sort(fracs.begin(), fracs.end());
  fracs.erase(std::unique(fracs.begin(), fracs.end()), fracs.end());

  std::vector<std::uint32_t> gaps;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    BigInt d = levels[i] - levels[i - 1];
    gaps.push_back(d > dmax ? kInf : static_cast<std::uint32_t>(d));
  }
  std::vector<CircleEntry> entries;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const TimedFact& tf = s.facts()[i];
    CircleEntry e;
    e.atom = intern(tf.fact);
    e.delta_class = static_cast<std::uint32_t>(
        std::lower_bound(levels.begin(), levels.end(), ints[i]) - levels.begin());
    Rational f = fractional_part(tf.stamp);
    e.circle_class =
        f == 0 ? 0
               : static_cast<std::uint32_t>(std::lower_bound(fracs.begin(), fracs.end(), f) -
                                            fracs.begin() + 1);
    entries.push_back(std::move(e));
  }
  // Remember original positions through the sort done by the constructor.
  std::vector<std::pair<CircleEntry, std::size_t>> tagged;
  if (entry_of) {
    for (std::size_t i = 0; i < entries.size(); ++i) tagged.emplace_back(entries[i], i);
  }
  CircleConfiguration a(std::move(entries), std::move(gaps),
                        static_cast<std::uint32_t>(fracs.size()), dmax);
  if (entry_of) {
    entry_of->assign(s.size(), 0);
    std::vector<bool> taken(a.size(), false);
    for (const auto& [e, orig] : tagged) {
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (!taken[k] && a.entries()[k] == e) {
          taken[k] = true;
          (*entry_of)[orig] = k;
          break;
        }
      }
    }
  }
  return a;
}


namespace {

bool compare_entries(const CircleConfiguration& a, const TimeConstraint& c, std::size_t p,
                     std::size_t q) {
  const std::int64_t k = c.offset;
  if (k >= std::int64_t{a.dmax()} || -k >= std::int64_t{a.dmax()}) {
    throw std::domain_error("constraint offset " + std::to_string(k) + " not below dmax " +
                            std::to_string(a.dmax()));
  }
  const std::int64_t delta = a.delta_between(p, q);
  const std::uint32_t up = a.entries()[p].circle_class;
  const std::uint32_t uq = a.entries()[q].circle_class;
  const bool greater = delta > k || (delta == k && up > uq);
  const bool equal = delta == k && up == uq;
  switch (c.relation) {
    case Relation::Greater:
      return greater;
    case Relation::GreaterEq:
      return greater || equal;
    case Relation::Equal:
      return equal;
  }
  return false;
}

// Variable bindings kept as pointers into patterns and entries while
// backtracking.
struct Bindings {
  std::vector<std::pair<const std::string*, const Term*>> terms;
  std::vector<std::pair<const std::string*, std::size_t>> times;

  const Term* find(const std::string& name) const {
    for (const auto& [n, t] : terms) {
      if (*n == name) return t;
    }
    return nullptr;
  }

  bool bind(const Term& pat, const Term& target) {
    switch (pat.kind) {
      case Term::Kind::Variable: {
        if (const Term* old = find(pat.name)) return *old == target;
        terms.emplace_back(&pat.name, &target);
        return true;
      }
      case Term::Kind::Constant:
        return target.kind == Term::Kind::Constant && target.name == pat.name;
      case Term::Kind::Nonce:
        return target.kind == Term::Kind::Nonce && target.nonce == pat.nonce;
      case Term::Kind::Application:
        if (target.kind != Term::Kind::Application || target.name != pat.name ||
            target.args.size() != pat.args.size()) {
          return false;
        }
        for (std::size_t i = 0; i < pat.args.size(); ++i) {
          if (!bind(pat.args[i], target.args[i])) return false;
        }
        return true;
    }
    return false;
  }

  std::size_t time_of(const std::string& name) const {
    for (const auto& [n, k] : times) {
      if (*n == name) return k;
    }
    throw UnboundVariable(name);
  }

  Substitution to_subst() const {
    Substitution s;
    for (const auto& [n, t] : terms) s.terms.emplace(*n, *t);
    return s;
  }
};

Term substitute(const Term& t, const Bindings& b) {
  if (t.kind == Term::Kind::Variable) {
    const Term* v = b.find(t.name);
    if (!v) throw UnboundVariable(t.name);
    return *v;
  }
  if (t.kind != Term::Kind::Application) return t;
  Term out = t;
  for (Term& x : out.args) x = substitute(x, b);
  return out;
}

Fact substitute(const Fact& f, const Bindings& b) {
  Fact out{f.predicate, {}};
  out.args.reserve(f.args.size());
  for (const Term& t : f.args) out.args.push_back(substitute(t, b));
  return out;
}

// Enumerates instances in pattern-then-entry order. `leaf` returns true to
// stop the enumeration.
template <class Leaf>
class Matcher {
 public:
  Matcher(const CircleConfiguration& a, std::span<const StampedPattern> pats,
          std::span<const TimeConstraint> guard, Leaf& leaf)
      : a_(a), pats_(pats), guard_(guard), leaf_(leaf), used_(a.size(), 0) {
    occ_.reserve(pats.size());
  }

  bool run() { return step(0); }

 private:
  bool step(std::size_t depth) {
    if (depth == pats_.size()) {
      for (const TimeConstraint& c : guard_) {
        if (!compare_entries(a_, c, b_.time_of(c.left), b_.time_of(c.right))) return false;
      }
      return leaf_(occ_, b_);
    }
    const StampedPattern& pat = pats_[depth];
    const auto& entries = a_.entries();
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (used_[j]) continue;
      const Fact& target = entries[j].atom->fact;
      if (target.predicate != pat.fact.predicate || target.args.size() != pat.fact.args.size()) continue;
      const std::size_t mark_terms = b_.terms.size();
      const std::size_t mark_times = b_.times.size();
      bool ok = true;
      for (std::size_t i = 0; i < pat.fact.args.size() && ok; ++i) ok = b_.bind(pat.fact.args[i], target.args[i]);
      if (ok) {
        bool seen = false;
        for (const auto& [n, k] : b_.times) {
          if (*n == pat.time_var) {
            seen = true;
            ok = entries[k].delta_class == entries[j].delta_class &&
                 entries[k].circle_class == entries[j].circle_class;
            break;
          }
        }
        if (!seen) b_.times.emplace_back(&pat.time_var, j);
      }
      if (ok) {
        used_[j] = 1;
        occ_.push_back(j);
        const bool stop = step(depth + 1);
        occ_.pop_back();
        used_[j] = 0;
        if (stop) return true;
      }
      b_.terms.resize(mark_terms);
      b_.times.resize(mark_times);
    }
    return false;
  }

  const CircleConfiguration& a_;
  std::span<const StampedPattern> pats_;
  std::span<const TimeConstraint> guard_;
  Leaf& leaf_;
  std::vector<char> used_;
  std::vector<std::size_t> occ_;
  Bindings b_;
};

template <class Leaf>
bool enumerate(const CircleConfiguration& a, std::span<const StampedPattern> pats,
               std::span<const TimeConstraint> guard, Leaf&& leaf) {
  Matcher<std::remove_reference_t<Leaf>> m(a, pats, guard, leaf);
  return m.run();
}

}  // namespace

bool satisfies(const CircleConfiguration& a, const TimeConstraint& c,
               const std::map<std::string, std::size_t>& binding) {
  auto l = binding.find(c.left);
  if (l == binding.end()) throw UnboundVariable(c.left);
  auto r = binding.find(c.right);
  if (r == binding.end()) throw UnboundVariable(c.right);
  return compare_entries(a, c, l->second, r->second);
}

std::vector<SymbolicInstance> find_symbolic_instances(const CircleConfiguration& a,
                                                      std::span<const StampedPattern> patterns,
                                                      std::span<const TimeConstraint> guard) {
  std::vector<SymbolicInstance> out;
  enumerate(a, patterns, guard, [&](const std::vector<std::size_t>& occ, const Bindings& b) {
    SymbolicInstance inst;
    inst.occurrences = occ;
    inst.subst = b.to_subst();
    for (const auto& [n, k] : b.times) inst.time_binding.emplace(*n, k);
    out.push_back(std::move(inst));
    return false;
  });
  return out;
}

std::vector<SymbolicInstance> find_symbolic_instances(const CircleConfiguration& a,
                                                      const InstantaneousAction& r) {
  return find_symbolic_instances(a, r.lhs, r.guard);
}

bool any_symbolic_instance(const CircleConfiguration& a, std::span<const StampedPattern> patterns,
                           std::span<const TimeConstraint> guard) {
  return enumerate(a, patterns, guard, [](const std::vector<std::size_t>&, const Bindings&) { return true; });
}

std::vector<std::uint64_t> unused_nonces(const CircleConfiguration& a, std::size_t count) {
  std::vector<std::uint64_t> used;
  for (const CircleEntry& e : a.entries()) {
    if (e.atom->has_nonce) collect_nonces(e.atom->fact, used);
  }
  std::sort(used.begin(), used.end());
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; out.size() < count; ++i) {
    if (!std::binary_search(used.begin(), used.end(), i)) out.push_back(i);
  }
  return out;
}

namespace {

// Mutable view used while rewriting; turned back into a normalized value at
// the end.
struct Draft {
  std::vector<CircleEntry> entries;
  std::vector<std::uint32_t> gaps;
  std::uint32_t k = 0;
  std::uint32_t dmax = 0;

  explicit Draft(const CircleConfiguration& a)
      : entries(a.entries()), gaps(a.gaps()), k(a.circle_class_count()), dmax(a.dmax()) {}

  std::size_t classes() const { return gaps.size() + 1; }

  std::size_t time_entry() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].atom->fact.predicate == kTimePredicate) return i;
    }
    return 0;
  }

  CircleConfiguration finish() {
    return CircleConfiguration(std::move(entries), std::move(gaps), k, dmax);
  }

  void remove(const std::vector<char>& drop) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!drop[i]) entries[w++] = entries[i];
    }
    entries.resize(w);

    std::vector<char> occupied(classes(), 0);
    std::vector<char> circle_occupied(k + 1, 0);
    for (const CircleEntry& e : entries) {
      occupied[e.delta_class] = 1;
      circle_occupied[e.circle_class] = 1;
    }
    std::vector<std::uint32_t> remap(classes(), 0);
    std::vector<std::uint32_t> fused;
    bool started = false;
    std::uint32_t acc = 0;
    std::uint32_t count = 0;
    for (std::size_t c = 0; c < classes(); ++c) {
      if (c > 0 && started) acc = add_gaps(acc, gaps[c - 1], dmax);
      if (!occupied[c]) continue;
      if (started) fused.push_back(acc);
      started = true;
      acc = 0;
      remap[c] = count++;
    }
    gaps = std::move(fused);

    std::vector<std::uint32_t> circle_remap(k + 1, 0);
    std::uint32_t ck = 0;
    for (std::uint32_t c = 1; c <= k; ++c) {
      if (circle_occupied[c]) circle_remap[c] = ++ck;
    }
    k = ck;
    for (CircleEntry& e : entries) {
      e.delta_class = remap[e.delta_class];
      e.circle_class = circle_remap[e.circle_class];
    }
  }

  // Opens an empty delta class right after class c: gap `first` before it
  // and `rest` after it when c is not the last class.
  void open_after(std::uint32_t c, std::uint32_t first, std::uint32_t rest) {
    for (CircleEntry& e : entries) {
      if (e.delta_class > c) ++e.delta_class;
    }
    if (c + 1 < classes()) {
      gaps[c] = first;
      gaps.insert(gaps.begin() + c + 1, rest);
    } else {
      gaps.push_back(first);
    }
  }

  // Opens an empty circle class right after class c.
  std::uint32_t open_circle_after(std::uint32_t c) {
    for (CircleEntry& e : entries) {
      if (e.circle_class > c) ++e.circle_class;
    }
    ++k;
    return c + 1;
  }

  void insert(const Atom* atom, std::uint32_t distance) {
    const CircleEntry& time = entries[time_entry()];
    CircleEntry e{atom, 0, time.circle_class};
    std::uint32_t c = time.delta_class;
    std::uint32_t dist = 0;
    while (true) {
      if (dist == distance) {
        e.delta_class = c;
        break;
      }
      if (c + 1 == classes()) {
        open_after(c, distance - dist, 0);
        e.delta_class = c + 1;
        break;
      }
      const std::uint32_t g = gaps[c];
      if (g == kInf) {
        throw FutureFinitenessError("created fact " + atom->text +
                                    " would land inside an infinite gap");
      }
      if (dist + g > distance) {
        open_after(c, distance - dist, g - (distance - dist));
        e.delta_class = c + 1;
        break;
      }
      dist += g;
      ++c;
    }
    entries.push_back(e);
  }
};

// Steps 1-5 of the symbolic application; the instance is assumed valid.
CircleConfiguration apply_unchecked(const CircleConfiguration& a, const InstantaneousAction& r,
                                    const std::vector<std::size_t>& occ, Bindings& b,
                                    std::vector<Term>& fresh_terms) {
  if (!r.fresh.empty()) {
    std::vector<const std::string*> unbound;
    for (const std::string& x : r.fresh) {
      if (!b.find(x)) unbound.push_back(&x);
    }
    const auto ids = unused_nonces(a, unbound.size());
    fresh_terms.clear();
    fresh_terms.reserve(unbound.size());
    for (std::size_t i = 0; i < unbound.size(); ++i) {
      fresh_terms.push_back(Term::fresh(ids[i]));
      b.terms.emplace_back(unbound[i], &fresh_terms.back());
    }
  }
  std::vector<char> drop(a.size(), 0);
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    if (!r.lhs_preserved[i]) drop[occ[i]] = 1;
  }
  Draft d(a);
  d.remove(drop);
  for (const RhsFact& q : r.rhs) {
    if (!q.created()) continue;
    d.insert(intern(substitute(q.fact, b)), *q.delay);
  }
  return d.finish();
}

}  // namespace

CircleConfiguration apply_instantaneous_symbolic(const CircleConfiguration& a,
                                                 const InstantaneousAction& r,
                                                 const SymbolicInstance& inst) {
  if (inst.occurrences.size() != r.lhs.size()) {
    throw RuleNotApplicable("rule " + r.name + ": wrong number of matched occurrences");
  }
  std::vector<bool> used(a.size(), false);
  std::map<std::string, std::size_t> binding;
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    const std::size_t k = inst.occurrences[i];
    if (k >= a.size() || used[k]) throw RuleNotApplicable("rule " + r.name + ": pattern not present");
    used[k] = true;
    if (!(apply_subst(r.lhs[i].fact, inst.subst) == a.entries()[k].atom->fact)) {
      throw RuleNotApplicable("rule " + r.name + ": pattern " + to_string(r.lhs[i].fact) +
                              " not present");
    }
    auto [it, inserted] = binding.try_emplace(r.lhs[i].time_var, k);
    if (!inserted) {
      const CircleEntry& x = a.entries()[it->second];
      const CircleEntry& y = a.entries()[k];
      if (x.delta_class != y.delta_class || x.circle_class != y.circle_class) {
        throw RuleNotApplicable("rule " + r.name + ": time variable " + r.lhs[i].time_var +
                                " bound to different stamps");
      }
    }
  }
  for (const TimeConstraint& c : r.guard) {
    if (!satisfies(a, c, binding)) {
      throw RuleNotApplicable("rule " + r.name + ": guard " + to_string(c) + " violated");
    }
  }
  Bindings b;
  for (const auto& [name, term] : inst.subst.terms) b.terms.emplace_back(&name, &term);
  std::vector<Term> fresh_terms;
  return apply_unchecked(a, r, inst.occurrences, b, fresh_terms);
}

void for_each_rule_successor(const CircleConfiguration& a, std::span<const InstantaneousAction> rules,
                             const SuccessorVisitor& visit) {
  std::vector<Term> fresh_terms;
  for (std::size_t ri = 0; ri < rules.size(); ++ri) {
    const InstantaneousAction& r = rules[ri];
    enumerate(a, r.lhs, r.guard, [&](const std::vector<std::size_t>& occ, const Bindings& found) {
      Bindings b = found;
      visit(ri, occ, apply_unchecked(a, r, occ, b, fresh_terms));
      return false;
    });
  }
}

NextRule next_rule(const CircleConfiguration& a) {
  const CircleEntry& time = a.entries()[a.time_entry()];
  if (time.circle_class == 0) return NextRule::LeaveZero;
  std::size_t circle_mates = 0;
  std::size_t delta_mates = 0;
  for (const CircleEntry& e : a.entries()) {
    if (e.circle_class == time.circle_class) ++circle_mates;
    if (e.delta_class == time.delta_class) ++delta_mates;
  }
  const bool last = time.circle_class == a.circle_class_count();
  if (circle_mates > 1) return last ? NextRule::SplitLast : NextRule::SplitForward;
  if (!last) return NextRule::MergeForward;
  return delta_mates > 1 ? NextRule::WrapSplit : NextRule::WrapMove;
}

CircleConfiguration next(const CircleConfiguration& a) {
  Draft d(a);
  const std::size_t t = a.time_entry();
  const std::uint32_t c = d.entries[t].circle_class;
  switch (next_rule(a)) {
    case NextRule::LeaveZero:
      d.entries[t].circle_class = d.open_circle_after(0);
      break;
    case NextRule::MergeForward:
      d.entries[t].circle_class = c + 1;
      for (CircleEntry& e : d.entries) {
        if (e.circle_class > c) --e.circle_class;
      }
      --d.k;
      break;
    case NextRule::SplitForward:
    case NextRule::SplitLast:
      d.entries[t].circle_class = d.open_circle_after(c);
      break;
    case NextRule::WrapSplit: {
      d.entries[t].circle_class = 0;
      --d.k;
      const std::uint32_t dc = d.entries[t].delta_class;
      if (dc + 1 == d.classes()) {
        d.open_after(dc, 1, 0);
      } else {
        const std::uint32_t g = d.gaps[dc];
        if (g == kInf) throw FutureFinitenessError("Time cannot advance into an infinite gap");
        if (g > 1) d.open_after(dc, 1, g - 1);
      }
      d.entries[t].delta_class = dc + 1;
      break;
    }
    case NextRule::WrapMove: {
      d.entries[t].circle_class = 0;
      --d.k;
      const std::uint32_t dc = d.entries[t].delta_class;
      if (dc > 0) d.gaps[dc - 1] = add_gaps(d.gaps[dc - 1], 1, d.dmax);
      if (dc + 1 < d.classes()) {
        const std::uint32_t g = d.gaps[dc];
        if (g == kInf) throw FutureFinitenessError("Time cannot advance into an infinite gap");
        if (g > 1) {
          d.gaps[dc] = g - 1;
        } else {
          // Time joins the following class.
          for (CircleEntry& e : d.entries) {
            if (e.delta_class > dc) --e.delta_class;
          }
          d.gaps.erase(d.gaps.begin() + dc);
        }
      }
      break;
    }
  }
  return d.finish();
}

TimedConfiguration concretize(const CircleConfiguration& a) {
  std::vector<std::uint64_t> level(a.delta_class_count(), 0);
  for (std::size_t i = 1; i < level.size(); ++i) {
    const std::uint32_t g = a.gaps()[i - 1];
    level[i] = level[i - 1] + (g == kInf ? std::uint64_t{a.dmax()} + 1 : g);
  }
  const std::uint32_t k = a.circle_class_count();
  std::vector<TimedFact> facts;
  facts.reserve(a.size());
  for (const CircleEntry& e : a.entries()) {
    Rational stamp(level[e.delta_class]);
    if (e.circle_class > 0) stamp += Rational(e.circle_class, k + 1);
    facts.push_back(TimedFact{e.atom->fact, stamp});
  }
  return TimedConfiguration(std::move(facts));
}

Rational next_epsilon(const TimedConfiguration& s) {
  const Rational f = fractional_part(s.now());
  Rational up = 1;
  bool shared = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == s.time_index()) continue;
    const Rational g = fractional_part(s.facts()[i].stamp);
    if (g == f) shared = true;
    if (g > f && g < up) up = g;
  }
  if (f == 0 || shared) return (up - f) / 2;
  return up - f;
}

namespace {

constexpr std::size_t kPermutationCap = 5040;

std::string header(const CircleConfiguration& a) {
  std::string key = std::to_string(a.dmax()) + ";" + std::to_string(a.circle_class_count()) + ";";
  for (std::uint32_t g : a.gaps()) key += (g == kInf ? std::string("i") : std::to_string(g)) + ",";
  return key + ";";
}

std::string text_key(const std::string& head, const std::vector<CircleEntry>& entries) {
  std::string key = head;
  for (const CircleEntry& e : entries) {
    key += std::to_string(e.delta_class) + "." + std::to_string(e.circle_class) + "." + e.text() + "|";
  }
  return key;
}

// Renames nonces in first-occurrence order along `order` and returns the
// re-sorted entries.
std::vector<CircleEntry> renamed(const std::vector<CircleEntry>& entries, const std::vector<std::size_t>& order) {
  std::map<std::uint64_t, std::uint64_t> mapping;
  std::vector<std::uint64_t> ids;
  for (std::size_t i : order) {
    ids.clear();
    collect_nonces(entries[i].atom->fact, ids);
    for (std::uint64_t id : ids) mapping.try_emplace(id, mapping.size());
  }
  std::vector<CircleEntry> out = entries;
  for (CircleEntry& e : out) {
    if (e.atom->has_nonce) e.atom = intern(rename_nonces(e.atom->fact, mapping));
  }
  std::sort(out.begin(), out.end(), entry_less);
  return out;
}

// Entries sorted by entry_less; the result is the renaming with the least
// textual key.
std::vector<CircleEntry> best_renaming(const std::vector<CircleEntry>& entries, const std::string& head) {
  if (std::none_of(entries.begin(), entries.end(), [](const CircleEntry& e) { return e.atom->has_nonce; })) {
    return entries;
  }
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto same_slot = [&](std::size_t x, std::size_t y) {
    return entries[x].delta_class == entries[y].delta_class &&
           entries[x].circle_class == entries[y].circle_class &&
           entries[x].atom->masked == entries[y].atom->masked;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const CircleEntry& ex = entries[x];
    const CircleEntry& ey = entries[y];
    if (ex.delta_class != ey.delta_class) return ex.delta_class < ey.delta_class;
    if (ex.circle_class != ey.circle_class) return ex.circle_class < ey.circle_class;
    return ex.atom->masked < ey.atom->masked;
  });

  // Runs of interchangeable nonce-carrying entries.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t budget = 1;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && same_slot(order[i], order[j])) ++j;
    if (j - i > 1 && entries[order[i]].atom->has_nonce) {
      runs.emplace_back(i, j);
      for (std::size_t f = 2; f <= j - i && budget <= kPermutationCap; ++f) budget *= f;
    }
    i = j;
  }
  if (runs.empty() || budget > kPermutationCap) return renamed(entries, order);

  std::vector<CircleEntry> best = renamed(entries, order);
  std::string best_key = text_key(head, best);
  for (auto& run : runs) std::sort(order.begin() + run.first, order.begin() + run.second);
  // Odometer over the permutations of every run.
  while (true) {
    std::vector<CircleEntry> cand = renamed(entries, order);
    std::string key = text_key(head, cand);
    if (key < best_key) {
      best_key = std::move(key);
      best = std::move(cand);
    }
    std::size_t r = 0;
    for (; r < runs.size(); ++r) {
      if (std::next_permutation(order.begin() + runs[r].first, order.begin() + runs[r].second)) break;
    }
    if (r == runs.size()) break;
  }
  return best;
}

void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

void put_header(const CircleConfiguration& a, std::string& out) {
  put_varint(out, a.dmax());
  put_varint(out, a.circle_class_count());
  put_varint(out, a.gaps().size());
  for (std::uint32_t g : a.gaps()) put_varint(out, g == kInf ? 0 : g);
}

void put_entries(const std::vector<CircleEntry>& entries, std::string& out) {
  for (const CircleEntry& e : entries) {
    put_varint(out, e.atom->id);
    put_varint(out, e.delta_class);
    put_varint(out, e.circle_class);
  }
}

constexpr std::uint32_t kNoClass = std::numeric_limits<std::uint32_t>::max();

}  // namespace

std::string canonical_key(const CircleConfiguration& a) {
  const std::string head = header(a);
  return text_key(head, best_renaming(a.entries(), head));
}

CircleConfiguration canonical_form(const CircleConfiguration& a) {
  return CircleConfiguration(best_renaming(a.entries(), header(a)), a.gaps(), a.circle_class_count(), a.dmax());
}

void compact_key(const CircleConfiguration& a, std::string& out) {
  out.clear();
  put_header(a, out);
  out.push_back('\0');
  const auto& entries = a.entries();
  if (std::none_of(entries.begin(), entries.end(), [](const CircleEntry& e) { return e.atom->has_nonce; })) {
    put_entries(entries, out);
  } else {
    put_entries(best_renaming(entries, header(a)), out);
  }
}

void compact_key(const CircleConfiguration& a, const std::vector<char>& timeless, std::string& out) {
  if (std::none_of(timeless.begin(), timeless.end(), [](char c) { return c != 0; })) {
    compact_key(a, out);
    return;
  }
  Draft d(a);
  d.remove(timeless);
  const CircleConfiguration kept = d.finish();
  std::vector<CircleEntry> entries = kept.entries();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (timeless[i]) entries.push_back({a.entries()[i].atom, kNoClass, kNoClass});
  }
  std::sort(entries.begin(), entries.end(), entry_less);
  out.clear();
  put_header(kept, out);
  out.push_back('\xff');
  if (std::none_of(entries.begin(), entries.end(), [](const CircleEntry& e) { return e.atom->has_nonce; })) {
    put_entries(entries, out);
  } else {
    put_entries(best_renaming(entries, header(kept) + "t;"), out);
  }
}

}  // namespace tmsr
