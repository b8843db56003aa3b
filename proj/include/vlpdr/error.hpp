#pragma once

#include <stdexcept>
#include <string>

namespace vlpdr {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& w) : Error("schema_error", w) {}
};

struct UnsupportedDensity : Error {
  explicit UnsupportedDensity(const std::string& w) : Error("unsupported_density", w) {}
};

struct ContractViolation : Error {
  explicit ContractViolation(const std::string& w) : Error("contract_violation", w) {}
};

struct DegenerateField : Error {
  explicit DegenerateField(const std::string& w) : Error("degenerate_field", w) {}
};

struct SingularCalibration : Error {
  explicit SingularCalibration(const std::string& w) : Error("singular_calibration", w) {}
};

struct DatabaseMiss : Error {
  explicit DatabaseMiss(const std::string& w) : Error("database_miss", w) {}
};

struct ScenarioError : Error {
  explicit ScenarioError(const std::string& w) : Error("scenario_error", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config_error", w) {}
};

}  // namespace vlpdr
