#pragma once

#include <stdexcept>
#include <string>

namespace ddhreach {

/// Malformed run configuration or unresolved cross-reference.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values, diverged rollouts, failed root searches.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A recorded sample entered the unsafe set, or a pre-flight invariance check
/// failed. Carries a human-readable forensic report.
class SafetyViolation : public std::runtime_error {
 public:
  SafetyViolation(const std::string& what, std::string forensics)
      : std::runtime_error(what), forensics_(std::move(forensics)) {}
  const std::string& forensics() const { return forensics_; }

 private:
  std::string forensics_;
};

}  // namespace ddhreach
