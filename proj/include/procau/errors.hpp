#pragma once

#include <stdexcept>
#include <string>

namespace procau {

// Bad inputs (malformed files, unknown ids, contract violations by the
// caller). The CLI maps these to exit code 2.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A quantity the requested operation cannot produce (empty cause set,
// zero-variance vector). Distinct from InputError: the data is well formed
// but the math is undefined on it.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Everything else (I/O failures mid-run, numeric blow-ups, broken
// invariants). Exit code 1.
struct InternalError : std::runtime_error {
    explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace procau
