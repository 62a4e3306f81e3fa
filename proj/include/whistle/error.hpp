#pragma once

#include <stdexcept>
#include <string>

namespace whistle {

/// Bad or unreadable input data (files, rows, labels). Maps to CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace whistle
