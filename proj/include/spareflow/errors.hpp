#pragma once

#include <stdexcept>
#include <string>

namespace spareflow {

// Operation called in a lifecycle state that does not allow it.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Invalid arity, capacity, core list or similar construction parameter.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Structurally malformed skeleton graph.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operation not supported by this accelerator's topology (e.g. results
// requested from a collector-less farm).
class CapabilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace spareflow
