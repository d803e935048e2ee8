#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtud {

enum class ErrorKind {
  InvalidParameter,
  Ingestion,
  Index,
  UndefinedProbability,
  InvalidSplit,
  Construction,
  Schema,
  Selection,
  InconsistentCriteria,
  InconsistentBranch,
  Conditioning,
  DegenerateCurve,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::Index: return "index";
    case ErrorKind::UndefinedProbability: return "undefined-probability";
    case ErrorKind::InvalidSplit: return "invalid-split";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Selection: return "selection";
    case ErrorKind::InconsistentCriteria: return "inconsistent-criteria";
    case ErrorKind::InconsistentBranch: return "inconsistent-branch";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::DegenerateCurve: return "degenerate-curve";
  }
  return "unknown";
}

/// Library-wide exception. Every failure carries a kind so front ends can map
/// it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dtud
