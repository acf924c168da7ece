#pragma once

#include <stdexcept>
#include <string>

namespace moquad {

// Error taxonomy. The CLI maps these onto process exit codes:
//   ConfigError -> 2, MissingInputError -> 3, MismatchError -> 4,
//   anything else -> 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (bad dims, empty donor pool, unknown keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A required input artifact (dataset, checkpoint, metrics log) is absent.
class MissingInputError : public Error {
public:
    using Error::Error;
};

// Two artifacts that must agree do not (checkpoint vs. config).
class MismatchError : public Error {
public:
    using Error::Error;
};

// Malformed on-disk data (bad magic, truncation, dim overflow).
class FormatError : public Error {
public:
    using Error::Error;
};

// Index or window out of range.
class RangeError : public Error {
public:
    using Error::Error;
};

// Tensor dimensions inconsistent with what an operation requires.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Caller-supplied values violate an operation's contract (duplicate ids,
// non-unit embeddings, single-class probe input).
class InputError : public Error {
public:
    using Error::Error;
};

// Non-finite or degenerate numerics.
class NumericError : public Error {
public:
    using Error::Error;
};

// API misuse (stale forward cache, report/batch shape disagreement).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace moquad
