#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eau {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `position()` is a byte offset for formulas and a
/// 1-based line number for line-oriented files.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// An iterative solver hit its sweep limit, or a direct factorization failed.
class SolverError : public Error {
public:
    using Error::Error;
};

/// The request is well formed but outside what the algorithm handles
/// (e.g. a nested probability operator in an MDP-level check).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Arguments that violate an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace eau
