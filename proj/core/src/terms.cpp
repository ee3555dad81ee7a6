#include "tmsr/terms.hpp"

#include <algorithm>
#include <tuple>

namespace tmsr {

Term Term::constant(std::string name) {
  Term t;
  t.kind = Kind::Constant;
  t.name = std::move(name);
  return t;
}

Term Term::variable(std::string name) {
  Term t;
  t.kind = Kind::Variable;
  t.name = std::move(name);
  return t;
}

Term Term::fresh(std::uint64_t index) {
  Term t;
  t.kind = Kind::Nonce;
  t.nonce = index;
  return t;
}

Term Term::apply(std::string function, std::vector<Term> args) {
  Term t;
  t.kind = Kind::Application;
  t.name = std::move(function);
  t.args = std::move(args);
  return t;
}

bool Term::is_ground() const {
  switch (kind) {
    case Kind::Variable:
      return false;
    case Kind::Application:
      return std::all_of(args.begin(), args.end(), [](const Term& a) { return a.is_ground(); });
    default:
      return true;
  }
}

bool Fact::is_ground() const {
  return std::all_of(args.begin(), args.end(), [](const Term& a) { return a.is_ground(); });
}

namespace {

void render(const Term& t, std::string& out, bool mask) {
  switch (t.kind) {
    case Term::Kind::Constant:
    case Term::Kind::Variable:
      out += t.name;
      return;
    case Term::Kind::Nonce:
      out += mask ? std::string("n(?)") : "n(" + std::to_string(t.nonce) + ")";
      return;
    case Term::Kind::Application:
      out += t.name;
      out += '(';
      for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i > 0) out += ',';
        render(t.args[i], out, mask);
      }
      out += ')';
      return;
  }
}

void render(const Fact& f, std::string& out, bool mask) {
  out += f.predicate;
  if (f.args.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < f.args.size(); ++i) {
    if (i > 0) out += ',';
    render(f.args[i], out, mask);
  }
  out += ')';
}

bool term_has_nonce(const Term& t) {
  if (t.kind == Term::Kind::Nonce) return true;
  return std::any_of(t.args.begin(), t.args.end(), term_has_nonce);
}

void term_nonces(const Term& t, std::vector<std::uint64_t>& out) {
  if (t.kind == Term::Kind::Nonce) out.push_back(t.nonce);
  for (const Term& a : t.args) term_nonces(a, out);
}

Term rename_term(const Term& t, const std::map<std::uint64_t, std::uint64_t>& mapping) {
  if (t.kind == Term::Kind::Nonce) {
    auto it = mapping.find(t.nonce);
    return it == mapping.end() ? t : Term::fresh(it->second);
  }
  if (t.kind != Term::Kind::Application) return t;
  Term out = t;
  for (Term& a : out.args) a = rename_term(a, mapping);
  return out;
}

std::size_t term_size(const Term& t) {
  std::size_t n = 1;
  for (const Term& a : t.args) n += term_size(a);
  return n;
}

}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  render(t, out, false);
  return out;
}

std::string to_string(const Fact& f) {
  std::string out;
  render(f, out, false);
  return out;
}

std::string masked_string(const Fact& f) {
  std::string out;
  render(f, out, true);
  return out;
}

bool contains_nonce(const Fact& f) {
  return std::any_of(f.args.begin(), f.args.end(), term_has_nonce);
}

void collect_nonces(const Fact& f, std::vector<std::uint64_t>& out) {
  for (const Term& a : f.args) term_nonces(a, out);
}

Fact rename_nonces(const Fact& f, const std::map<std::uint64_t, std::uint64_t>& mapping) {
  Fact out{f.predicate, {}};
  out.args.reserve(f.args.size());
  for (const Term& a : f.args) out.args.push_back(rename_term(a, mapping));
  return out;
}

Term apply_subst(const Term& t, const Substitution& s) {
  switch (t.kind) {
    case Term::Kind::Variable: {
      auto it = s.terms.find(t.name);
      return it == s.terms.end() ? t : it->second;
    }
    case Term::Kind::Application: {
      Term out = t;
      for (Term& a : out.args) a = apply_subst(a, s);
      return out;
    }
    default:
      return t;
  }
}

Fact apply_subst(const Fact& f, const Substitution& s) {
  Fact out{f.predicate, {}};
  out.args.reserve(f.args.size());
  for (const Term& a : f.args) out.args.push_back(apply_subst(a, s));
  return out;
}

namespace {

void require_ground(const Term& t) {
  if (t.kind == Term::Kind::Variable) throw UnboundVariable(t.name);
  for (const Term& a : t.args) require_ground(a);
}

}  // namespace

Fact ground(const Fact& f, const Substitution& s) {
  Fact out = apply_subst(f, s);
  for (const Term& a : out.args) require_ground(a);
  return out;
}

std::size_t fact_size(const Fact& f) {
  std::size_t n = 1;
  for (const Term& a : f.args) n += term_size(a);
  return n;
}

bool match_term(const Term& pattern, const Term& target, Substitution& s) {
  switch (pattern.kind) {
    case Term::Kind::Variable: {
      auto [it, inserted] = s.terms.try_emplace(pattern.name, target);
      return inserted || it->second == target;
    }
    case Term::Kind::Constant:
      return target.kind == Term::Kind::Constant && target.name == pattern.name;
    case Term::Kind::Nonce:
      return target.kind == Term::Kind::Nonce && target.nonce == pattern.nonce;
    case Term::Kind::Application:
      if (target.kind != Term::Kind::Application || target.name != pattern.name ||
          target.args.size() != pattern.args.size()) {
        return false;
      }
      for (std::size_t i = 0; i < pattern.args.size(); ++i) {
        if (!match_term(pattern.args[i], target.args[i], s)) return false;
      }
      return true;
  }
  return false;
}

bool match_fact(const Fact& pattern, const Fact& target, Substitution& s) {
  if (pattern.predicate != target.predicate || pattern.args.size() != target.args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    if (!match_term(pattern.args[i], target.args[i], s)) return false;
  }
  return true;
}

namespace {

void extend(std::span<const Fact> patterns, std::span<const Fact> target, std::size_t depth,
            const Substitution& current, std::vector<std::size_t>& chosen, std::vector<bool>& used,
            std::vector<Match>& out) {
  if (depth == patterns.size()) {
    out.push_back(Match{current, chosen});
    return;
  }
  const Fact& pattern = patterns[depth];
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (used[i]) continue;
    Substitution next = current;
    if (!match_fact(pattern, target[i], next)) continue;
    used[i] = true;
    chosen.push_back(i);
    extend(patterns, target, depth + 1, next, chosen, used, out);
    chosen.pop_back();
    used[i] = false;
  }
}

}  // namespace

std::vector<Match> match_occurrences(std::span<const Fact> patterns, std::span<const Fact> target,
                                     const Substitution& seed) {
  std::vector<Match> out;
  std::vector<std::size_t> chosen;
  std::vector<bool> used(target.size(), false);
  extend(patterns, target, 0, seed, chosen, used, out);
  return out;
}

std::vector<Substitution> match(std::span<const Fact> patterns, std::span<const Fact> target) {
  std::vector<Substitution> out;
  for (Match& m : match_occurrences(patterns, target)) out.push_back(std::move(m.subst));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool operator<(const Term& a, const Term& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.name != b.name) return a.name < b.name;
  if (a.nonce != b.nonce) return a.nonce < b.nonce;
  return std::lexicographical_compare(a.args.begin(), a.args.end(), b.args.begin(), b.args.end());
}

bool operator<(const Fact& a, const Fact& b) {
  if (a.predicate != b.predicate) return a.predicate < b.predicate;
  return std::lexicographical_compare(a.args.begin(), a.args.end(), b.args.begin(), b.args.end());
}

bool operator<(const Substitution& a, const Substitution& b) {
  return std::tie(a.terms, a.times) < std::tie(b.terms, b.times);
}

}  // namespace tmsr
