#pragma once

#include <stdexcept>
#include <string>

namespace optoskin {

// Each error kind maps onto one CLI exit code (see cli.hpp).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class SyncError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class NoValidPressesError : public Error {
 public:
  using Error::Error;
};

class TuningError : public Error {
 public:
  TuningError(const std::string& what, double best_tpr) : Error(what), best_tpr_(best_tpr) {}
  double best_tpr() const { return best_tpr_; }

 private:
  double best_tpr_;
};

}  // namespace optoskin
