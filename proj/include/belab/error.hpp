#pragma once

#include <stdexcept>
#include <string>

namespace belab {

enum class ErrorKind {
  validation,  // bad input parameters
  numerical,   // non-finite values, non-convergence, budget overruns
};

// Every error names the module and the offending parameter so that the CLI
// can report it verbatim.
class LabError : public std::runtime_error {
 public:
  LabError(ErrorKind kind, std::string module, std::string parameter, const std::string& what)
      : std::runtime_error(module + ": " + parameter + ": " + what),
        kind_(kind),
        module_(std::move(module)),
        parameter_(std::move(parameter)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string parameter_;
};

inline LabError validation_error(std::string module, std::string parameter, const std::string& what) {
  return {ErrorKind::validation, std::move(module), std::move(parameter), what};
}

inline LabError numerical_error(std::string module, std::string parameter, const std::string& what) {
  return {ErrorKind::numerical, std::move(module), std::move(parameter), what};
}

}  // namespace belab
