#include "tmsr/dsl.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "tmsr/engine.hpp"

namespace tmsr {

std::string to_string(const Diagnostic& d) {
  return std::to_string(d.at.line) + ":" + std::to_string(d.at.column) + ": " + d.message;
}

namespace {

std::string summarize(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const Diagnostic& d : ds) {
    if (!out.empty()) out += "\n";
    out += to_string(d);
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

namespace {

enum class Tok {
  Ident,
  Number,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  At,
  Bar,
  Colon,
  Dot,
  Arrow,
  Gt,
  Ge,
  Eq,
  Plus,
  Minus,
  End
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan at;
};

std::string describe(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::At: return "'@'";
    case Tok::Bar: return "'|'";
    case Tok::Colon: return "':'";
    case Tok::Dot: return "'.'";
    case Tok::Arrow: return "'->'";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::Eq: return "'='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::End: return "end of input";
  }
  return "?";
}

[[noreturn]] void fail(SourceSpan at, std::string message) {
  throw ParseError({Diagnostic{at, std::move(message)}});
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(src[i]) & 0xC0) != 0x80) {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const SourceSpan at{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), at});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      out.push_back({Tok::Number, std::string(src.substr(i, j - i)), at});
      advance(j - i);
      continue;
    }
    Tok kind;
    std::size_t len = 1;
    switch (c) {
      case '{': kind = Tok::LBrace; break;
      case '}': kind = Tok::RBrace; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case ',': kind = Tok::Comma; break;
      case '@': kind = Tok::At; break;
      case '|': kind = Tok::Bar; break;
      case ':': kind = Tok::Colon; break;
      case '.': kind = Tok::Dot; break;
      case '+': kind = Tok::Plus; break;
      case '=': kind = Tok::Eq; break;
      case '-':
        if (i + 1 < src.size() && src[i + 1] == '>') {
          kind = Tok::Arrow;
          len = 2;
        } else {
          kind = Tok::Minus;
        }
        break;
      case '>':
        if (i + 1 < src.size() && src[i + 1] == '=') {
          kind = Tok::Ge;
          len = 2;
        } else {
          kind = Tok::Gt;
        }
        break;
      default:
        fail(at, std::string("unexpected character '") + c + "'");
    }
    out.push_back({kind, std::string(src.substr(i, len)), at});
    advance(len);
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

bool is_time_var(const std::string& s) {
  return !s.empty() && s[0] == 'T' && s != "Time";
}

bool is_variable(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

struct PendingRule {
  std::string name;
  SourceSpan at;
  std::vector<StampedPattern> lhs;
  std::vector<TimeConstraint> guard;
  std::vector<std::string> fresh;
  std::vector<RhsFact> rhs;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  SourceProblem run(std::string_view text) {
    SourceProblem out;
    out.text = std::string(text);
    ReachabilityProblem& p = out.problem;
    if (peek_keyword("problem")) {
      take();
      p.name = expect(Tok::Ident, "problem name").text;
    }
    std::optional<std::vector<TimedFact>> init;
    SourceSpan init_at{1, 1};
    SourceSpan goal_at{1, 1};
    bool have_goal = false;
    std::vector<PendingRule> rules;
    std::set<std::string> rule_names;
    while (cur().kind != Tok::End) {
      const Token& kw = cur();
      if (peek_keyword("dmax")) {
        take();
        if (p.dmax_override) fail(kw.at, "dmax declared twice");
        const Token& n = expect(Tok::Number, "dmax value");
        p.dmax_override = natural(n);
        out.spans["dmax"] = kw.at;
      } else if (peek_keyword("init")) {
        take();
        if (init) fail(kw.at, "init declared twice");
        init_at = kw.at;
        out.spans["init"] = kw.at;
        init = parse_init();
      } else if (peek_keyword("goal")) {
        take();
        if (have_goal) fail(kw.at, "goal declared twice");
        have_goal = true;
        goal_at = kw.at;
        out.spans["goal"] = kw.at;
        p.goal = parse_goal();
      } else if (peek_keyword("rule")) {
        take();
        PendingRule r = parse_rule();
        r.at = kw.at;
        if (!rule_names.insert(r.name).second) fail(kw.at, "rule " + r.name + " declared twice");
        out.spans["rule:" + r.name] = kw.at;
        rules.push_back(std::move(r));
      } else {
        fail(kw.at, "expected 'dmax', 'init', 'goal' or 'rule', found " + show(kw));
      }
    }
    if (!init) fail(cur().at, "missing init declaration");
    try {
      p.initial = TimedConfiguration(std::move(*init));
    } catch (const std::invalid_argument& e) {
      fail(init_at, e.what());
    }
    for (PendingRule& r : rules) {
      try {
        p.rules.push_back(make_action(std::move(r.name), std::move(r.lhs), std::move(r.guard),
                                      std::move(r.fresh), std::move(r.rhs)));
      } catch (const ShapeError& e) {
        fail(r.at, e.what());
      }
    }
    std::set<std::string> goal_vars;
    for (const StampedPattern& s : p.goal.facts) goal_vars.insert(s.time_var);
    for (const TimeConstraint& c : p.goal.guard) {
      for (const std::string* v : {&c.left, &c.right}) {
        if (!goal_vars.count(*v)) {
          fail(goal_at, "goal guard variable " + *v + " does not occur in the goal");
        }
      }
    }
    if (p.dmax_override && !p.dmax_override_valid()) {
      fail(out.spans["dmax"], "dmax " + std::to_string(*p.dmax_override) +
                                  " is too small: every numeral must be below dmax + 1");
    }
    const ValidationReport report = validate(p);
    if (!report.ok()) {
      std::vector<Diagnostic> ds;
      for (const std::string& e : report.errors) ds.push_back({init_at, e});
      throw ParseError(std::move(ds));
    }
    return out;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }
  bool peek(Tok k) const { return cur().kind == k; }
  bool peek_keyword(const char* word) const { return cur().kind == Tok::Ident && cur().text == word; }

  static std::string show(const Token& t) {
    if (t.kind == Tok::Ident || t.kind == Tok::Number) return "'" + t.text + "'";
    return describe(t.kind);
  }

  const Token& expect(Tok k, const std::string& what) {
    if (!peek(k)) fail(cur().at, "expected " + what + ", found " + show(cur()));
    return take();
  }

  bool accept(Tok k) {
    if (!peek(k)) return false;
    ++pos_;
    return true;
  }

  static std::uint32_t natural(const Token& t) {
    if (t.text.find('.') != std::string::npos) fail(t.at, "expected a natural number, found " + t.text);
    if (t.text.size() > 9) fail(t.at, "number " + t.text + " is too large");
    return static_cast<std::uint32_t>(std::stoul(t.text));
  }

  void check_arity(std::map<std::string, std::size_t>& table, const std::string& kind,
                   const std::string& name, std::size_t n, SourceSpan at) {
    auto [it, inserted] = table.try_emplace(name, n);
    if (!inserted && it->second != n) {
      fail(at, kind + " " + name + " has arity " + std::to_string(it->second) + ", used with " +
                   std::to_string(n) + " arguments");
    }
  }

  Term parse_term() {
    const Token& t = cur();
    if (t.kind == Tok::Number) {
      take();
      natural(t);
      return Term::constant(t.text);
    }
    const Token& id = expect(Tok::Ident, "term");
    if (!peek(Tok::LParen)) {
      return is_variable(id.text) ? Term::variable(id.text) : Term::constant(id.text);
    }
    if (is_variable(id.text)) fail(id.at, "variable " + id.text + " cannot take arguments");
    take();
    if (id.text == "n" && peek(Tok::Number) && tokens_[pos_ + 1].kind == Tok::RParen) {
      const Token& n = take();
      take();
      if (n.text.find('.') != std::string::npos) fail(n.at, "nonce index must be natural");
      return Term::fresh(std::stoull(n.text));
    }
    std::vector<Term> args;
    do {
      args.push_back(parse_term());
    } while (accept(Tok::Comma));
    expect(Tok::RParen, "')'");
    check_arity(functions_, "function", id.text, args.size(), id.at);
    return Term::apply(id.text, std::move(args));
  }

  Fact parse_fact() {
    const Token& id = expect(Tok::Ident, "predicate");
    Fact f{id.text, {}};
    if (accept(Tok::LParen)) {
      do {
        f.args.push_back(parse_term());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    check_arity(predicates_, "predicate", f.predicate, f.args.size(), id.at);
    return f;
  }

  std::string parse_time_var() {
    const Token& t = expect(Tok::Ident, "time variable");
    if (!is_time_var(t.text)) fail(t.at, "expected a time variable (T, T1, ...), found " + t.text);
    return t.text;
  }

  std::vector<TimedFact> parse_init() {
    expect(Tok::LBrace, "'{'");
    std::vector<TimedFact> facts;
    if (!peek(Tok::RBrace)) {
      do {
        const SourceSpan at = cur().at;
        Fact f = parse_fact();
        if (!f.is_ground()) fail(at, "initial fact " + to_string(f) + " is not ground");
        expect(Tok::At, "'@'");
        if (peek(Tok::Minus)) fail(cur().at, "negative timestamp");
        const Token& n = expect(Tok::Number, "timestamp");
        facts.push_back({std::move(f), parse_decimal(n.text)});
      } while (accept(Tok::Comma));
    }
    expect(Tok::RBrace, "'}'");
    return facts;
  }

  StampedPattern parse_pattern() {
    Fact f = parse_fact();
    expect(Tok::At, "'@'");
    return {std::move(f), parse_time_var()};
  }

  std::vector<TimeConstraint> parse_guard() {
    std::vector<TimeConstraint> out;
    expect(Tok::LBrace, "'{'");
    if (!peek(Tok::RBrace)) {
      do {
        TimeConstraint c;
        c.left = parse_time_var();
        if (accept(Tok::Gt)) {
          c.relation = Relation::Greater;
        } else if (accept(Tok::Ge)) {
          c.relation = Relation::GreaterEq;
        } else if (accept(Tok::Eq)) {
          c.relation = Relation::Equal;
        } else {
          fail(cur().at, "expected '>', '>=' or '=', found " + show(cur()));
        }
        c.right = parse_time_var();
        if (peek(Tok::Plus) || peek(Tok::Minus)) {
          const bool minus = take().kind == Tok::Minus;
          const Token& n = expect(Tok::Number, "offset");
          const std::int64_t v = natural(n);
          c.offset = minus ? -v : v;
        }
        out.push_back(std::move(c));
      } while (accept(Tok::Comma));
    }
    expect(Tok::RBrace, "'}'");
    return out;
  }

  Goal parse_goal() {
    Goal g;
    expect(Tok::LBrace, "'{'");
    if (!peek(Tok::RBrace)) {
      do {
        g.facts.push_back(parse_pattern());
      } while (accept(Tok::Comma));
    }
    expect(Tok::RBrace, "'}'");
    if (accept(Tok::Bar)) g.guard = parse_guard();
    return g;
  }

  PendingRule parse_rule() {
    PendingRule r;
    r.name = expect(Tok::Ident, "rule name").text;
    expect(Tok::Colon, "':'");
    do {
      r.lhs.push_back(parse_pattern());
    } while (accept(Tok::Comma));
    if (accept(Tok::Bar)) r.guard = parse_guard();
    expect(Tok::Arrow, "'->'");
    bool bracket = false;
    if (peek_keyword("exists")) {
      take();
      do {
        const Token& v = expect(Tok::Ident, "variable");
        if (!is_variable(v.text)) fail(v.at, "fresh variable must be capitalized, found " + v.text);
        r.fresh.push_back(v.text);
      } while (accept(Tok::Comma));
      expect(Tok::Dot, "'.'");
    }
    bracket = accept(Tok::LBracket);
    do {
      RhsFact q;
      q.fact = parse_fact();
      expect(Tok::At, "'@'");
      if (accept(Tok::LParen)) {
        q.time_var = parse_time_var();
        expect(Tok::Plus, "'+'");
        q.delay = natural(expect(Tok::Number, "delay"));
        expect(Tok::RParen, "')'");
      } else {
        q.time_var = parse_time_var();
      }
      r.rhs.push_back(std::move(q));
    } while (accept(Tok::Comma));
    if (bracket) expect(Tok::RBracket, "']'");
    return r;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> predicates_;
  std::map<std::string, std::size_t> functions_;
};

std::string pattern_text(const StampedPattern& p) { return to_string(p.fact) + "@" + p.time_var; }

std::string guard_text(const std::vector<TimeConstraint>& guard) {
  std::string out = "{ ";
  for (std::size_t i = 0; i < guard.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(guard[i]);
  }
  return out + (guard.empty() ? "}" : " }");
}

}  // namespace

SourceProblem parse_source(std::string_view text) { return Parser(text).run(text); }

ReachabilityProblem parse(std::string_view text) { return parse_source(text).problem; }

ReachabilityProblem parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string serialize(const ReachabilityProblem& problem) {
  std::ostringstream out;
  if (!problem.name.empty()) out << "problem " << problem.name << "\n";
  if (problem.dmax_override) out << "dmax " << *problem.dmax_override << "\n";
  out << "\ninit {\n";
  const auto& facts = problem.initial.facts();
  for (std::size_t i = 0; i < facts.size(); ++i) {
    out << "  " << to_string(facts[i].fact) << "@" << to_string(facts[i].stamp)
        << (i + 1 < facts.size() ? ",\n" : "\n");
  }
  out << "}\n";
  for (const InstantaneousAction& r : problem.rules) {
    out << "\nrule " << r.name << ": ";
    for (std::size_t i = 0; i < r.lhs.size(); ++i) {
      if (i > 0) out << ", ";
      out << pattern_text(r.lhs[i]);
    }
    if (!r.guard.empty()) out << " | " << guard_text(r.guard);
    out << "\n  -> ";
    const bool binder = !r.fresh.empty();
    if (binder) {
      out << "exists ";
      for (std::size_t i = 0; i < r.fresh.size(); ++i) out << (i > 0 ? ", " : "") << r.fresh[i];
      out << ". [ ";
    }
    for (std::size_t i = 0; i < r.rhs.size(); ++i) {
      const RhsFact& q = r.rhs[i];
      if (i > 0) out << ", ";
      out << to_string(q.fact) << "@";
      if (!q.created()) {
        out << q.time_var;
        continue;
      }
      // A bare stamp would read back as preserved if an identical fact is
      // in the pre-condition.
      bool clash = false;
      for (const StampedPattern& p : r.lhs) clash = clash || (p.fact == q.fact && p.time_var == q.time_var);
      if (*q.delay == 0 && !clash) {
        out << q.time_var;
      } else {
        out << "(" << q.time_var << " + " << *q.delay << ")";
      }
    }
    if (binder) out << " ]";
    out << "\n";
  }
  out << "\ngoal { ";
  for (std::size_t i = 0; i < problem.goal.facts.size(); ++i) {
    if (i > 0) out << ", ";
    out << pattern_text(problem.goal.facts[i]);
  }
  out << (problem.goal.facts.empty() ? "}" : " }");
  if (!problem.goal.guard.empty()) out << " | " << guard_text(problem.goal.guard);
  out << "\n";
  return out.str();
}

}  // namespace tmsr
