#pragma once

#include <stdexcept>
#include <string>

namespace activerank {

// Malformed input: bad matrix entries, invalid partitions, parameters out of
// range. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two items straddling a set boundary have the same score, so the target
// partition is not identifiable.
class BoundaryTieError : public ConfigError {
 public:
  BoundaryTieError(std::size_t boundary_index, const std::string& what)
      : ConfigError(what), boundary_index_(boundary_index) {}
  std::size_t boundary_index() const noexcept { return boundary_index_; }

 private:
  std::size_t boundary_index_;
};

// Answer-source failures: replay misalignment, duplicate or unknown answers.
// The CLI maps this to exit code 3.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical solver did not reach its tolerance. Exit code 3.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Engine protocol misuse (planning twice, applying mismatched outcomes).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace activerank
