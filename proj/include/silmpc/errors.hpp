#pragma once

#include <stdexcept>
#include <string>

namespace silmpc {

// Invalid configuration or physical parameters.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries the row number where known.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An applied input violates the coupling or balance equations.
class ConstraintViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A lagged feature reaches before the start of the data.
class LagUnavailableError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class NotFittedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A scenario was started without the run it depends on.
class DependencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace silmpc
