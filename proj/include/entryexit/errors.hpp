#pragma once

#include <stdexcept>
#include <string>

namespace entryexit {

/// A parameter or argument is outside its admissible domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its stated precondition (e.g. r <= mu).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Regime classification needs the exit trigger but none was supplied.
class MissingTriggerError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid simulation or grid configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver failed; the message carries the last iterate and
/// residual diagnostics.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace entryexit
