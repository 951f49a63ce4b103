#ifndef BMC_ERRORS_HPP_
#define BMC_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmc {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

/// Non-finite input or an argument outside the operation's domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// The principal matrix logarithm could not be computed.
class LogmFailure : public Error {
public:
  using Error::Error;
};

class NonUniqueStationary : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string> &violations() const { return violations_; }

private:
  std::vector<std::string> violations_;
};

/// A scaling constant of the forward recursion vanished or became
/// non-finite: the observed path has (numerically) zero density.
class ZeroLikelihood : public Error {
public:
  ZeroLikelihood(std::size_t segment, const std::string &what);
  std::size_t segment() const { return segment_; }

private:
  std::size_t segment_;
};

class NumericalBreakdown : public Error {
public:
  using Error::Error;
};

/// An underlying state with expected jump mass but no expected dwell time.
class DegenerateState : public Error {
public:
  DegenerateState(int observable, int underlying);
  int observable() const { return observable_; }
  int underlying() const { return underlying_; }

private:
  int observable_;
  int underlying_;
};

class ParseError : public Error {
public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace bmc

#endif // BMC_ERRORS_HPP_
