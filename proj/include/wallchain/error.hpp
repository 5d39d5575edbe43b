#pragma once

#include <stdexcept>
#include <string>

namespace wallchain {

/// Raised for inconsistent or physically invalid inputs (bad lengths,
/// non-positive constants, walls off the grid, ...).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a run cannot proceed (e.g. the domain is too small).
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wallchain
