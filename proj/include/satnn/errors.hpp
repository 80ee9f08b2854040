#pragma once

#include <stdexcept>
#include <string>

namespace satnn {

// Mismatched widths, list lengths or image shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inconsistent hyperparameters, flags or configuration values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numeric value outside its representable range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Malformed file contents (DIMACS, IDX, dataset cache, model JSON).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An assignment did not cover a variable the decoder needed.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problems with the outside world: missing solver binary, unreadable
// solver output, failed process creation, unwritable files.
class EnvironmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training produced no model on any batch.
class TrainingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace satnn
