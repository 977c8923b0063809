#pragma once

#include <stdexcept>
#include <string>

namespace cachesim {

// Invalid arguments and malformed configuration. The CLI maps this to exit 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Cache capacity cannot cover the library.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Collected coded chunks do not span the file.
class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cachesim
