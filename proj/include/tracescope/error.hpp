#pragma once

#include <stdexcept>
#include <string>

namespace tracescope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV, manifest, weights header, config).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Mismatched lengths, image sizes or class counts.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the documented domain of an operation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ChecksumError : public Error {
public:
    using Error::Error;
};

/// Numerical failure such as a non-finite training loss.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace tracescope
