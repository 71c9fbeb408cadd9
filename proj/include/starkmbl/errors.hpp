#pragma once

#include <stdexcept>
#include <string>

namespace starkmbl {

// Bad argument values (negative disorder strength, mismatched sizes, ...).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Work refused because it would exceed a configured size/memory cap.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Lookup of an element that is not present (e.g. a mask outside a basis).
class NotFoundError : public std::runtime_error {
public:
    explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

// I/O failures on config, checkpoint or result files.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace starkmbl
