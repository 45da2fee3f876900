#pragma once

#include <stdexcept>
#include <string>

namespace slearn {

// Argument errors are reported as std::invalid_argument. Everything below is
// a domain failure raised by one of the library's algorithms.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupted graph structure (cycle in a Dag, malformed edge list).
class GraphError : public Error {
 public:
  using Error::Error;
};

// Orientation rules forced both directions of one edge.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

// A PDAG admits no consistent DAG extension.
class ExtensionError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, std::size_t attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

class DegenerateColumnError : public Error {
 public:
  explicit DegenerateColumnError(std::size_t column)
      : Error("column x" + std::to_string(column) + " has zero variance"), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

// Singular correlation submatrix in a regression or partial correlation.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// A conditional-independence test could not be issued (too few samples).
class TestError : public Error {
 public:
  using Error::Error;
};

// Every member of an ensemble failed on a problem.
class InferenceError : public Error {
 public:
  using Error::Error;
};

// Malformed input files (CSV, JSON, graph text).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace slearn
