#ifndef HSMC_ERRORS_HPP
#define HSMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hsmc {

/// All importance weights vanished; the current tempering step is untenable.
class DegeneratePopulationError : public std::runtime_error {
 public:
  explicit DegeneratePopulationError(const std::string& what) : std::runtime_error(what) {}
};

/// A model log-density evaluation returned NaN.
class ModelEvaluationError : public std::runtime_error {
 public:
  explicit ModelEvaluationError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration or bad input file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hsmc

#endif
