#pragma once

#include <stdexcept>
#include <string>

namespace surgesim {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Netlist construction / validation failure (dangling node, bad value, duplicate label).
class NetlistError : public Error {
public:
    using Error::Error;
};

/// Configuration file syntax or range error. Carries the offending line when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, int line = -1)
        : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    [[nodiscard]] int line() const { return line_; }

private:
    int line_ = -1;
};

/// Numerical failure inside the time-domain solver (singular matrix, Newton divergence).
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg, double t = -1.0) : Error(msg), t_(t) {}
    [[nodiscard]] double time() const { return t_; }

private:
    double t_ = -1.0;
};

/// Analysis precondition failure (non-uniform waveform, grid mismatch, ...).
class AnalysisError : public Error {
public:
    using Error::Error;
};

} // namespace surgesim
