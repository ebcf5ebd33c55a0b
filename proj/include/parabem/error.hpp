#pragma once

#include <stdexcept>
#include <string>

namespace parabem {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (out-of-domain point, bad order).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A complex parameter point left the region where the holomorphic
/// extension is defined (polyradius violation, Re(z.z) <= 0, Re(g) <= 0).
class InadmissibleError : public Error {
 public:
  using Error::Error;
};

/// Linear solve or least-squares fit failed.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Configuration document failed validation; carries the JSON pointer.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace parabem
