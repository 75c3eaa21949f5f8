// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pfbmux {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or schema value. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Stream/mux planning failure. CLI exit code 2.
class PlanError : public Error {
public:
    using Error::Error;
};

/// Numeric failures: shapes, metrics, divergence, timing. CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

class DimensionError : public NumericError {
public:
    using NumericError::NumericError;
};

class MetricError : public NumericError {
public:
    using NumericError::NumericError;
};

class TrainingError : public NumericError {
public:
    TrainingError(const std::string& what, int epoch) : NumericError(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pfbmux
