#pragma once

#include <stdexcept>
#include <string>

namespace risicsc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or sweep document, or an invariant violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A factorization or solve met a (numerically) singular or indefinite matrix.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The radar SINR requirement cannot be met for `ue()`.
class InfeasibleError : public Error {
 public:
  InfeasibleError(int ue, const std::string& what)
      : Error("UE " + std::to_string(ue) + ": " + what), ue_(ue) {}
  int ue() const noexcept { return ue_; }

 private:
  int ue_;
};

}  // namespace risicsc
