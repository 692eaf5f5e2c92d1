#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stylegest {

// Exit codes used by the CLI. Library code throws; main() maps.
enum class ExitCode : int {
    ok = 0,
    failure = 1,
    validation = 2,
    checkpoint_mismatch = 3,
    numerical = 4,
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public ValidationError {
public:
    explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

class DegenerateRotationError : public ValidationError {
public:
    explicit DegenerateRotationError(const std::string& msg) : ValidationError(msg) {}
};

class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents. Carries the byte offset where parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::uint64_t byte_offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::uint64_t byte_offset() const { return byte_offset_; }

private:
    std::uint64_t byte_offset_;
};

class UnsupportedVersionError : public std::runtime_error {
public:
    UnsupportedVersionError(const std::string& msg) : std::runtime_error(msg) {}
};

class CheckpointMismatchError : public std::runtime_error {
public:
    explicit CheckpointMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stylegest
