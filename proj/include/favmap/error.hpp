#pragma once

#include <stdexcept>
#include <string>

namespace favmap {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or configuration violates a precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data is malformed or unusable (bad file contents, degenerate datasets).
class DataError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message names the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace favmap
