#pragma once

#include <stdexcept>
#include <string>

namespace texelatt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidPalette : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Raised by the renderer when texels of different classes collide too often.
class InfeasibleSpec : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Wraps an error with the name of the pipeline stage and item it came from.
class StageError : public Error {
public:
    StageError(std::string stage, std::string item, const std::string& what)
        : Error(stage + (item.empty() ? "" : " [" + item + "]") + ": " + what),
          stage_(std::move(stage)), item_(std::move(item)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& item() const noexcept { return item_; }

private:
    std::string stage_;
    std::string item_;
};

}  // namespace texelatt
