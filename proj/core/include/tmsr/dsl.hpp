#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tmsr/problem.hpp"

namespace tmsr {

struct SourceSpan {
  std::size_t line = 0;  // 1-based
  std::size_t column = 0;
};

struct Diagnostic {
  SourceSpan at;
  std::string message;
};

std::string to_string(const Diagnostic& d);

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parsed problem together with where its parts were declared. Span keys are
/// "init", "goal", "dmax" and "rule:<name>".
struct SourceProblem {
  std::string text;
  ReachabilityProblem problem;
  std::map<std::string, SourceSpan> spans;
};

/// Parses `.tmsr` text. Throws ParseError with positioned diagnostics.
SourceProblem parse_source(std::string_view text);
ReachabilityProblem parse(std::string_view text);

/// Reads and parses a file. Throws std::runtime_error if it cannot be read.
ReachabilityProblem parse_file(const std::string& path);

/// Canonical text; parse(serialize(p)) == p.
std::string serialize(const ReachabilityProblem& problem);

}  // namespace tmsr
