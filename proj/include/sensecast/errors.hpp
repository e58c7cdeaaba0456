#pragma once

#include <stdexcept>
#include <string>

namespace sensecast {

// Base for all toolkit errors. The CLI turns these into one-line
// machine-parsable messages of the form "<Kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// Malformed or inconsistent input data (files, streams, manifests).
struct StructuralError : Error {
  explicit StructuralError(const std::string& what) : Error("StructuralError", what) {}
};

// Invalid configuration: bad flag values, shape mismatches at construction,
// missing required inputs.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

// Non-finite values where the math requires finite ones.
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error("NumericalError", what) {}
};

// A metric that has no defined value on the given inputs
// (e.g. ROC AUC with a single-class label set).
struct MetricUndefined : Error {
  explicit MetricUndefined(const std::string& what) : Error("MetricUndefined", what) {}
};

}  // namespace sensecast
