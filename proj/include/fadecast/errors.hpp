#pragma once

#include <stdexcept>
#include <string>

namespace fadecast {

// Base for everything thrown by the library. CLI maps ConfigError to exit
// code 2 and every other Error to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Input file does not match the configured column mapping.
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

// A population-level operation was left with nothing to work on.
class PopulationError : public DataError {
public:
    using DataError::DataError;
};

class FeatureError : public DataError {
public:
    using DataError::DataError;
};

class FitError : public Error {
public:
    using Error::Error;
};

// Kernel matrix could not be factorized even after jitter escalation.
class ConditioningError : public FitError {
public:
    using FitError::FitError;
};

class KneeError : public Error {
public:
    using Error::Error;
};

} // namespace fadecast
