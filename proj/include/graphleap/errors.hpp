#pragma once

#include <stdexcept>
#include <string>

namespace graphleap {

// Base class for every error raised by the library. The CLI maps these to
// exit code 2 (user/config errors) or 1 (internal errors).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

// Carries the dotted field path of the offending config entry.
struct ValidationError : Error {
    ValidationError(std::string path, const std::string& msg)
        : Error(path + ": " + msg), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

struct UnknownPreset : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};
struct BadMagic : IoError {
    using IoError::IoError;
};
struct UnsupportedVersion : IoError {
    using IoError::IoError;
};
struct TruncatedPayload : IoError {
    using IoError::IoError;
};
struct NonFiniteValue : IoError {
    using IoError::IoError;
};

struct DimensionMismatch : Error {
    using Error::Error;
};
struct DilationTooLarge : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct TopologyMismatch : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct SizeMismatch : Error {
    using Error::Error;
};
struct OddGrid : Error {
    using Error::Error;
};
struct QueueClosed : Error {
    using Error::Error;
};
struct SpecMismatch : Error {
    using Error::Error;
};

}  // namespace graphleap
