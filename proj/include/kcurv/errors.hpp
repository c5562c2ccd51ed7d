#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcurv {

/// Argument outside the mathematical domain of an operation (index ranges,
/// shape mismatches, p = 0, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A spectrum left the Garding cone (or a quotient denominator vanished).
/// Carries the offending node indices when raised by the grid solvers.
class ConeViolation : public std::runtime_error {
public:
    ConeViolation(const std::string& what, std::vector<std::size_t> nodes = {})
        : std::runtime_error(what), nodes_(std::move(nodes)) {}
    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

private:
    std::vector<std::size_t> nodes_;
};

/// Non-positive radius, non-positive support function or a degenerate metric.
class GeometryError : public std::runtime_error {
public:
    GeometryError(const std::string& what, std::vector<std::size_t> nodes = {})
        : std::runtime_error(what), nodes_(std::move(nodes)) {}
    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

private:
    std::vector<std::size_t> nodes_;
};

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kcurv
