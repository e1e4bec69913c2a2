#pragma once

#include <stdexcept>
#include <string>

namespace cada {

// Base class for all library errors. The CLI maps each subclass onto an exit
// code: ShapeError/ValueError -> 2, IoError/FormatError -> 3, DataError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched dimensions, bad extents, missing channels.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Argument outside its domain (probability outside [0,1], bad threshold ...).
class ValueError : public Error {
public:
    using Error::Error;
};

// Malformed on-disk content.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Model or training-data problems: single-class data, feature length mismatch.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace cada
