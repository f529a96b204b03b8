#pragma once

#include <stdexcept>
#include <string>

namespace spinrot {

/// Invalid or incomplete configuration. The message starts with the field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical precondition cannot be met (e.g. no cyclic amplitude exists).
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values met during numerical evaluation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spinrot
