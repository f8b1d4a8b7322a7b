#pragma once

#include <stdexcept>
#include <string>

namespace qea {

// Error taxonomy shared by all modules.  DomainError covers precondition
// violations (invalid q, out-of-range spins, bad gauge blocks), TruncationError
// covers window/fusion overflow, PrecisionError covers numerically ambiguous
// decisions (rank near tolerance, degenerate nullspaces), ParseError covers
// file ingestion.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TruncationError : std::runtime_error {
  explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PrecisionError : std::runtime_error {
  explicit PrecisionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qea
