// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace graphmae {

// Bad shapes, out-of-range indices, inconsistent configs.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// log of a non-positive value, fractional power of a negative base,
// non-finite results.
class NumericDomainError : public std::runtime_error {
public:
    explicit NumericDomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed text input; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Bad magic, truncation, schema mismatch in binary/JSON artifacts.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace graphmae
