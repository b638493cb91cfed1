#ifndef VVMFG_ERRORS_HPP
#define VVMFG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vvmfg {

// Shape/size mismatches between fields and grids.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameters, CFL violations, missing measure features.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A solver produced NaN/Inf or a negative density; message carries the step index.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Operation not defined for the given model or configuration.
class UnsupportedError : public std::runtime_error {
public:
    explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vvmfg

#endif
