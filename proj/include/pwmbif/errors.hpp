#pragma once

#include <stdexcept>
#include <string>

namespace pwmbif {

/// Bad dimensions, unknown names, out-of-range arguments.
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-convergence, singular systems, divergence guards, grazing.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// File and stream failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pwmbif
