// Error types shared by the thermoformal modules.
#pragma once

#include <stdexcept>
#include <string>

namespace tf {

// Invalid job configuration or map/observable description. `path` is a
// JSON-pointer-like location of the offending field ("/map/params/v").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Monotone root-finding on one fundamental-domain slice of a lift failed.
class BranchInversionError : public std::runtime_error {
 public:
  BranchInversionError(const std::string& map, double target, const std::string& why)
      : std::runtime_error("inverse branch of '" + map + "' for lift value " +
                           std::to_string(target) + ": " + why),
        target_(target) {}
  double target() const noexcept { return target_; }

 private:
  double target_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate, int iterations)
      : std::runtime_error(what), last_estimate_(last_estimate), iterations_(iterations) {}
  double last_estimate() const noexcept { return last_estimate_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_estimate_;
  int iterations_;
};

// A computation failed at one point of a parameter grid.
class GridPointError : public std::runtime_error {
 public:
  GridPointError(const std::string& param, double value, const std::string& why)
      : std::runtime_error("at " + param + " = " + std::to_string(value) + ": " + why),
        value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

// Legendre transform of an affine or non-convex curve was requested.
class DegenerateLegendre : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ReducibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tf
