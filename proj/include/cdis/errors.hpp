#pragma once

#include <stdexcept>
#include <string>

namespace cdis {

/// Invariant or argument violation (bad shapes, non-finite data, out-of-range
/// parameters). Maps to CLI exit code 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure (missing file, short write). Maps to exit code 4.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Header/payload inconsistency in a volume bundle. Maps to exit code 4.
class CorruptFileError : public IoError {
public:
    explicit CorruptFileError(const std::string& msg) : IoError(msg) {}
};

/// Bundle declares a dtype or version this build does not understand.
class UnsupportedFormatError : public IoError {
public:
    explicit UnsupportedFormatError(const std::string& msg) : IoError(msg) {}
};

/// AUC requested on a single-class label set. Maps to exit code 5.
class UndefinedAucError : public std::runtime_error {
public:
    explicit UndefinedAucError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The optimizer's objective returned a non-finite value. Maps to exit code 5.
class ObjectiveFaultError : public std::runtime_error {
public:
    explicit ObjectiveFaultError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cdis
