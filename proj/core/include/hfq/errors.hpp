#pragma once

#include <stdexcept>
#include <string>

namespace hfq {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes (messages name both shapes).
struct DimensionError : Error {
    using Error::Error;
};

// Sequence too short for the requested operation.
struct LengthError : Error {
    using Error::Error;
};

// Invalid configuration value or unknown config key.
struct ConfigError : Error {
    using Error::Error;
};

// API precondition violated (e.g. backward on a non-scalar loss).
struct ContractError : Error {
    using Error::Error;
};

// Malformed or truncated file (checkpoint, WAV, feature matrix).
struct FormatError : Error {
    using Error::Error;
};

// Well-formed file whose contents do not match the expected model.
struct SchemaError : Error {
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Numeric failure during optimization (NaN loss, divergence).
struct TrainingError : Error {
    using Error::Error;
};

} // namespace hfq
