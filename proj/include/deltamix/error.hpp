#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deltamix {

enum class ErrorKind {
  kShape,
  kFactorization,
  kSingular,
  kIllConditioned,
  kUnsupportedBits,
  kInfeasible,
  kCorruption,
  kConfig,
  kLookup,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to a stable exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the allocator; carries the smallest budget (bit-units) that would
// admit a feasible scheme.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, long long minimal_budget)
      : Error(ErrorKind::kInfeasible, what), minimal_budget_(minimal_budget) {}

  long long minimal_budget() const noexcept { return minimal_budget_; }

 private:
  long long minimal_budget_;
};

[[noreturn]] void throw_error(ErrorKind kind, const std::string& what);

}  // namespace deltamix
