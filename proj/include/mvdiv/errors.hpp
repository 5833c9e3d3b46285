#pragma once

#include <stdexcept>
#include <string>

namespace mvdiv {

// Error taxonomy. Three branches, matching the process exit codes used by the
// CLI: validation (bad inputs or parameters, exit 2), numerical (the math is
// well-posed but the data defeats it, exit 3) and infeasible (no admissible
// result exists, exit 4).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// -- validation branch -------------------------------------------------------

class DimensionMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TooFewObservationsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SampleTooSmallError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BadExponentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SchemeInfeasibleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedForSummariesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Parse failures carry a 1-based row and column when known (0 = not
// applicable), so ingestion errors point at the offending cell.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long row = 0, long column = 0)
      : ValidationError(what), row_(row), column_(column) {}
  long row() const { return row_; }
  long column() const { return column_; }

 private:
  long row_;
  long column_;
};

class InconsistentArityError : public ParseError {
 public:
  using ParseError::ParseError;
};

// -- numerical branch --------------------------------------------------------

class EigenSolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularCovarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EigenvalueBelowFloorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, int k)
      : NumericalError(what), k_(k) {}
  int k() const { return k_; }

 private:
  int k_;
};

class NumericalConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// -- infeasible branch -------------------------------------------------------

class AllParametersInfeasibleError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

}  // namespace mvdiv
