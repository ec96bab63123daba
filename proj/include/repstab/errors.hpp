#pragma once

#include <stdexcept>
#include <string>

namespace repstab {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be opened/read/written. CLI exit code 1.
class IoError : public Error {
public:
    using Error::Error;
};

// File exists but its contents do not follow the declared format
// (bad magic, ragged rows, truncated payload). CLI exit code 2.
class FormatError : public Error {
public:
    using Error::Error;
};

// Data violates a documented invariant (NaN values, duplicate ids,
// zero-norm rows, zero variance, too few stimuli). CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Invalid parameter or flag combination. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Matrix/vector dimensions do not line up.
class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Two inputs that must describe the same stimuli (ids, context
// lengths, atlases) disagree.
class AlignmentError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

} // namespace repstab
