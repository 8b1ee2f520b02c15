#pragma once

#include <stdexcept>
#include <string>

namespace sirenpose {

// Base of every exception thrown by the library. The CLI maps subclasses to
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid architecture, hyperparameter, or scene description.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Vector/matrix dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Non-finite values, divergence, or other arithmetic failure.
class NumericError : public Error {
public:
    using Error::Error;
};

// A caller broke an API contract (e.g. passed a cache from another network).
class ContractError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InsufficientFramesError : public Error {
public:
    using Error::Error;
};

// File content is not valid JSON/CSV.
class ParseError : public Error {
public:
    using Error::Error;
};

// File parses but violates the expected document layout.
class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sirenpose
