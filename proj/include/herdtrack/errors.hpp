#pragma once

#include <stdexcept>
#include <string>

namespace herdtrack {

// Every error the library raises derives from Error so callers can choose
// between catching the specific condition or everything at once.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Transform fit has too few points or a rank-deficient design.
class DegenerateConfiguration : public Error {
public:
  using Error::Error;
};

// A point maps to the plane at infinity under a homography.
class ProjectiveDegeneracy : public Error {
public:
  using Error::Error;
};

// Innovation covariance cannot be factored.
class SingularInnovation : public Error {
public:
  using Error::Error;
};

class DegenerateBox : public Error {
public:
  using Error::Error;
};

class InvalidGrid : public Error {
public:
  using Error::Error;
};

class OutOfOrderFrame : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

// Scenario or input file problem. `key()` names the offending entry.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace herdtrack
