#ifndef BLOWLAB_COMMON_HPP
#define BLOWLAB_COMMON_HPP

#include <stdexcept>
#include <string>

namespace blowlab {

inline constexpr const char* kVersion = "0.1.0";

// Bad user input: config files, parameter ranges, schema violations.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure could not deliver its contract (non-PD covariance,
// quadrature failure). Reported, never silently patched.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace blowlab

#endif
