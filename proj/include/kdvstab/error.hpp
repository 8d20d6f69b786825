#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kdvstab {

/// Invalid or unsupported configuration (bad parameters, impossible stencils,
/// invariant violations on input data).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A configuration file with one or more violations. Every violation is kept.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<std::string> violations)
      : ConfigError(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

/// Energy exceeded the blowup threshold or the state went non-finite.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& what, double last_good_time)
      : std::runtime_error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

/// Diagnostic evaluated outside its domain (nonpositive energies in a fit
/// window, a Carleman ratio with an annihilated denominator, ...).
class DiagnosticDomainError : public std::runtime_error {
 public:
  explicit DiagnosticDomainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kdvstab
