#pragma once

#include <stdexcept>
#include <string>

namespace portfolio {

// Error families map one-to-one onto the CLI exit codes (1, 2, 3).

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace portfolio
