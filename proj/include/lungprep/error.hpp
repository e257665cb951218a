#pragma once

#include <stdexcept>
#include <string>

namespace lungprep {

// Bad or unreadable input data: malformed files, violated preconditions on
// caller-supplied values. Maps to CLI exit code 3.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Command-line misuse. Maps to CLI exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An internal invariant failed. Maps to CLI exit code 4.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace lungprep
