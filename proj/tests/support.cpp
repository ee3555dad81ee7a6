#include "support.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "tmsr/rational.hpp"

namespace tmsr::testing {
namespace {

Term term(const std::string& text, std::size_t& pos) {
  std::size_t start = pos;
  while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
  std::string name = text.substr(start, pos - start);
  if (name.empty()) throw std::invalid_argument("bad term in " + text);
  if (pos < text.size() && text[pos] == '(') {
    ++pos;
    std::vector<Term> args;
    while (text[pos] != ')') {
      args.push_back(term(text, pos));
      if (text[pos] == ',') ++pos;
    }
    ++pos;
    if (name == "n") return Term::fresh(std::stoull(to_string(args.at(0))));
    return Term::apply(name, std::move(args));
  }
  if (std::isupper(static_cast<unsigned char>(name[0]))) return Term::variable(name);
  return Term::constant(name);
}

}  // namespace

Fact fact(const std::string& text) {
  std::size_t pos = text.find('(');
  Fact f{text.substr(0, pos), {}};
  if (pos == std::string::npos) return f;
  ++pos;
  while (pos < text.size() && text[pos] != ')') {
    f.args.push_back(term(text, pos));
    if (text[pos] == ',') ++pos;
  }
  return f;
}

TimedConfiguration config(const std::vector<std::pair<std::string, std::string>>& facts) {
  std::vector<TimedFact> out;
  for (const auto& [f, t] : facts) out.push_back({fact(f), parse_decimal(t)});
  return TimedConfiguration(std::move(out));
}

TimedConfiguration s1() {
  return config({{"M", "3.01"}, {"R", "3.11"}, {"P", "4.12"}, {"Time", "11.12"}, {"Q", "12.58"}, {"S", "14"}});
}

TimedConfiguration random_config(std::mt19937_64& rng, std::size_t max_facts, int max_den,
                                 int max_int) {
  static const char* const preds[] = {"A", "B", "C"};
  static const char* const consts[] = {"a", "b"};
  auto stamp = [&] {
    const int den = std::uniform_int_distribution<int>(1, max_den)(rng);
    const int num = std::uniform_int_distribution<int>(0, den * max_int - 1)(rng);
    return Rational(num, den);
  };
  std::vector<TimedFact> facts{{Fact{kTimePredicate, {}}, stamp()}};
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_facts)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    Fact f{preds[rng() % 3], {}};
    switch (rng() % 3) {
      case 0:
        break;
      case 1:
        f.args.push_back(Term::constant(consts[rng() % 2]));
        break;
      default:
        f.args.push_back(Term::fresh(rng() % 3));
        break;
    }
    facts.push_back({f, stamp()});
  }
  std::shuffle(facts.begin(), facts.end(), rng);
  return TimedConfiguration(std::move(facts));
}

TimeConstraint random_constraint(std::mt19937_64& rng, const std::string& left,
                                 const std::string& right, std::uint32_t dmax) {
  TimeConstraint c;
  c.left = left;
  c.right = right;
  c.relation = static_cast<Relation>(rng() % 3);
  const auto span = static_cast<std::int64_t>(dmax) - 1;
  c.offset = std::uniform_int_distribution<std::int64_t>(-span, span)(rng);
  return c;
}

bool grouping_agrees(const TimedConfiguration& s, const CircleConfiguration& a, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  // Integer parts.
  std::map<BigInt, std::vector<std::string>> by_int;
  std::map<Rational, std::vector<std::string>> by_dec;
  for (const TimedFact& tf : s.facts()) {
    by_int[integer_part(tf.stamp)].push_back(to_string(tf.fact));
    by_dec[fractional_part(tf.stamp)].push_back(to_string(tf.fact));
  }
  std::vector<std::vector<std::string>> groups;
  std::vector<std::uint32_t> gaps;
  std::optional<BigInt> prev;
  for (auto& [level, texts] : by_int) {
    std::sort(texts.begin(), texts.end());
    groups.push_back(texts);
    if (prev) {
      const BigInt g = level - *prev;
      gaps.push_back(g > a.dmax() ? kInf : g.convert_to<std::uint32_t>());
    }
    prev = level;
  }
  if (groups != a.delta_groups()) return fail("delta classes differ");
  if (gaps != a.gaps()) return fail("gaps differ");
  std::vector<std::string> zero;
  std::vector<std::vector<std::string>> circle;
  for (auto& [dec, texts] : by_dec) {
    std::sort(texts.begin(), texts.end());
    if (dec == 0) {
      zero = texts;
    } else {
      circle.push_back(texts);
    }
  }
  if (zero != a.zero_point()) return fail("zero point differs");
  if (circle != a.circle_groups()) return fail("circle classes differ");
  return true;
}

int next_distance(const CircleConfiguration& from, const CircleConfiguration& to, int limit) {
  CircleConfiguration cur = from;
  for (int j = 0; j <= limit; ++j) {
    if (cur == to) return j;
    cur = next(cur);
  }
  return -1;
}

CircleConfiguration random_circle(std::mt19937_64& rng, std::size_t max_facts, std::uint32_t dmax) {
  static const char* const preds[] = {"A", "B", "C", "D"};
  const std::size_t n = 1 + std::uniform_int_distribution<std::size_t>(0, max_facts)(rng);
  const auto classes = static_cast<std::uint32_t>(1 + rng() % n);
  const bool zero = rng() % 2 == 0;
  auto k = static_cast<std::uint32_t>(std::min<std::size_t>(n - (zero ? 1 : 0), rng() % (n + 1)));
  if (!zero && k == 0) k = 1;
  std::vector<CircleEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    Fact f = i == 0 ? Fact{kTimePredicate, {}} : Fact{preds[rng() % 4], {}};
    if (i > 0 && rng() % 3 == 0) f.args.push_back(Term::fresh(rng() % 3));
    entries.push_back({intern(f), 0, 0});
  }
  std::shuffle(entries.begin(), entries.end(), rng);
  // Surjections onto 0..classes-1 and onto 1..k (plus 0 when zero is set).
  for (std::size_t i = 0; i < n; ++i) {
    entries[i].delta_class = i < classes ? static_cast<std::uint32_t>(i) : static_cast<std::uint32_t>(rng() % classes);
  }
  std::shuffle(entries.begin(), entries.end(), rng);
  const std::uint32_t first = zero ? 0 : 1;
  const std::uint32_t span = k + 1 - first;
  for (std::size_t i = 0; i < n; ++i) {
    entries[i].circle_class = i < span ? first + static_cast<std::uint32_t>(i)
                                       : first + static_cast<std::uint32_t>(rng() % span);
  }
  std::vector<std::uint32_t> gaps;
  for (std::uint32_t c = 1; c < classes; ++c) {
    gaps.push_back(rng() % 5 == 0 ? kInf : static_cast<std::uint32_t>(1 + rng() % dmax));
  }
  return CircleConfiguration(std::move(entries), std::move(gaps), k, dmax);
}

}  // namespace tmsr::testing
