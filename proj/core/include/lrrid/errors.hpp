#pragma once

#include <stdexcept>
#include <string>

namespace lrrid {

// Argument errors use std::invalid_argument. The types below cover failures
// that depend on the data rather than on the caller's arguments.

/// A linear-algebra routine failed or an iterate became non-finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dataset directory does not match its documented layout.
class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lrrid
