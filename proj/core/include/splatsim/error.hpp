#pragma once

#include <stdexcept>
#include <string>

namespace splatsim {

// Base for every error the library raises. Invalid arguments, malformed files and
// violated preconditions are all reported through this hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace splatsim
