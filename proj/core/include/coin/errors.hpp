#pragma once

#include <stdexcept>
#include <string>

namespace coin {

// Bad user input: missing files, malformed CSV, unknown instance ids,
// preconditions violated by caller-supplied data.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration values (fractions out of range, negative weights, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A query that cannot be interpreted (zero sampling radius, context that
// prunes away entirely). Collected per query in batch runs, fatal otherwise.
class DegenerateError : public std::runtime_error {
public:
    explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace coin
