#pragma once

#include <stdexcept>
#include <string>

namespace flowsim {

// Malformed input file (bad JSON, missing keys, wrong types).
class ParseError : public std::runtime_error {
  public:
    explicit ParseError(const std::string &msg) : std::runtime_error(msg) {}
};

// Structurally well-formed input that violates a model invariant.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace flowsim
