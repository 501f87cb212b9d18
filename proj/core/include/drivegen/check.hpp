#pragma once

#include <stdexcept>
#include <string>

namespace drivegen {

/// Thrown when an input violates an operation's preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produced an invalid internal state
/// (non-finite values, corrupt files, divergence).
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void check_arg(bool cond, const std::string& msg) {
    if (!cond) throw InputError(msg);
}

inline void check_state(bool cond, const std::string& msg) {
    if (!cond) throw StateError(msg);
}

}  // namespace drivegen
