#pragma once

#include <stdexcept>
#include <string>

namespace delaychain {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Series in one count set do not share a station alignment.
class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A statistic cannot be evaluated on the given counts.
class UntestableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No observations available to fit or estimate from.
class NoDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested station range is not covered by the trained matrices,
// or a matrix in it still has undefined rows.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Current station has no later station to forecast for.
class NoTargetError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace delaychain
