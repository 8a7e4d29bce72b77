#include "deltamix/error.hpp"

namespace deltamix {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kFactorization: return "factorization";
    case ErrorKind::kSingular: return "singular";
    case ErrorKind::kIllConditioned: return "ill-conditioned";
    case ErrorKind::kUnsupportedBits: return "unsupported-bits";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kLookup: return "lookup";
  }
  return "unknown";
}

void throw_error(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace deltamix
