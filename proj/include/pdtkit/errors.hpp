#pragma once

#include <stdexcept>
#include <string>

namespace pdtkit {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Wrong tensor/vector dimensions, mismatched layer chains, bad arity.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed text input. line is 1-based, 0 when unknown.
struct ParseError : Error {
  ParseError(int line_no, const std::string& msg)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
  int line;
};

// Exact/brute-force routines refuse inputs past their hard size caps.
struct SizeLimitError : Error {
  using Error::Error;
};

// Verification ran out of its node or time budget before reaching a verdict.
struct BudgetError : Error {
  using Error::Error;
};

// The LP backend failed numerically; the affected query is unresolved.
struct SolverError : Error {
  using Error::Error;
};

// Training loss became non-finite.
struct TrainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace pdtkit
