#ifndef FSHE_ERRORS_HPP
#define FSHE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fshe {

/// Raised when an argument violates an operation's precondition.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a factorization, solve or iteration fails.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by series summation when the requested sum does not converge.
class DivergenceError : public std::domain_error {
 public:
  explicit DivergenceError(const std::string& what) : std::domain_error(what) {}
};

/// Raised for malformed or out-of-range experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an output file or directory cannot be written.
class OutputError : public std::runtime_error {
 public:
  explicit OutputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fshe

#endif  // FSHE_ERRORS_HPP
