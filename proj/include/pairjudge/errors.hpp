#pragma once

#include <stdexcept>
#include <string>

namespace pairjudge {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Bad run configuration or CLI usage. Maps to exit code 1.
class config_error : public error {
public:
    using error::error;
};

// Malformed dataset file or record.
class schema_error : public error {
public:
    using error::error;
};

// Prompt assembly failure (invalid template, unresolved placeholder,
// sample/kind mismatch, anonymity violation).
class prompt_error : public error {
public:
    using error::error;
};

// Anything that goes wrong talking to a backend. Subclasses are
// distinguishable so callers can decide what is retryable.
class backend_error : public error {
public:
    using error::error;
};

// Connection-level failure or retryable server response (5xx, 429).
class transport_error : public backend_error {
public:
    using backend_error::backend_error;
};

// Non-success protocol status that is not worth retrying. Carries the
// status code and a body excerpt in the message.
class protocol_error : public backend_error {
public:
    protocol_error(int status, const std::string& what)
        : backend_error(what), status_(status) {}

    int status() const { return status_; }

private:
    int status_;
};

// Request exceeded the configured timeout.
class timeout_error : public backend_error {
public:
    using backend_error::backend_error;
};

// A scripted mock received a request it has no reply for.
class unscripted_request_error : public backend_error {
public:
    using backend_error::backend_error;
};

// Corrupt journal / store file.
class journal_error : public error {
public:
    using error::error;
};

} // namespace pairjudge
