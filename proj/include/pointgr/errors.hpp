#pragma once

#include <stdexcept>
#include <string>

namespace pointgr {

/// Operand dimensions disagree (message carries both shapes).
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A kernel produced or received NaN/Inf. Never propagated silently.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file: bad magic, truncated payload, unknown version.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Semantic validation failure: label ranges, manifest consistency, config keys.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pointgr
