#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aodkit {

// Base of every domain failure raised by the library. The CLI maps these to
// exit code 1; configuration problems (ConfigError, in the cli module) map to 2.
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string module, std::string operation, const std::string& what)
      : std::runtime_error(module + "::" + operation + ": " + what),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }

 private:
  std::string module_;
  std::string operation_;
};

class InvalidElementError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Diffraction grid does not satisfy the sampling/padding bounds.
class ResolutionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class TotalInternalReflectionError : public DomainError {
 public:
  TotalInternalReflectionError(std::string operation, int surface, const std::string& what)
      : DomainError("prism_designer", std::move(operation), what), surface_(surface) {}
  // 1-based surface index along the beam path (1..4).
  int surface() const noexcept { return surface_; }

 private:
  int surface_;
};

class UnachievableTargetError : public DomainError {
 public:
  UnachievableTargetError(const std::string& what, double m_low, double m_high)
      : DomainError("prism_designer", "solve_alpha_prime", what), low_(m_low), high_(m_high) {}
  double achievable_low() const noexcept { return low_; }
  double achievable_high() const noexcept { return high_; }

 private:
  double low_;
  double high_;
};

class ConfigurationError : public DomainError {
 public:
  using DomainError::DomainError;
};

class FitFailure : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnbracketedMinimumError : public DomainError {
 public:
  using DomainError::DomainError;
};

class OutOfRangeError : public DomainError {
 public:
  OutOfRangeError(std::string module, std::string operation, const std::string& what,
                  std::vector<int> unreachable)
      : DomainError(std::move(module), std::move(operation), what),
        unreachable_(std::move(unreachable)) {}
  const std::vector<int>& unreachable() const noexcept { return unreachable_; }

 private:
  std::vector<int> unreachable_;
};

}  // namespace aodkit
