#pragma once

#include <stdexcept>
#include <string>

namespace ftm {

// Contract/precondition breach in library code (bad shapes, bad arguments).
// Maps to exit code 3 in the CLI.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Invalid configuration (odd frame length, impossible split, checkpoint
// mismatch). Exit code 3.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (ragged CSV row, unreadable file). Exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid data (negative timestamp, empty split partition).
// Exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: NaN loss, NaN gradient, log of a non-positive value,
// non-deterministic function under a derivative check. Exit code 4.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation cannot produce a defined metric (no positive labels,
// single-class input, empty filtered test set). Exit code 3.
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ftm
