#pragma once

#include <stdexcept>
#include <string>

namespace cstm {

// Input file could not be turned into a valid model object (sites, traces).
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scenario, hierarchy or seed material is inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A deposit request addresses no cell, or only stale tokens.
class AddressingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The TPS sender policy rejected a deposit.
class Unauthorized : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cstm
