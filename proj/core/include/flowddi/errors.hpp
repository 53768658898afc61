#pragma once

#include <stdexcept>
#include <string>

namespace flowddi {

// Violated precondition or API misuse by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed external input (edge-list row, config key, checkpoint layout).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid data: self-loops, empty graphs, vocabulary mismatches.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimization produced a non-finite loss or parameter.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An artifact from an earlier pipeline stage is missing.
class MissingPrerequisiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowddi
