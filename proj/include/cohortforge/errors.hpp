#pragma once

#include <stdexcept>
#include <string>

namespace cohortforge {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input that could not be parsed at all (bad JSON, bad JSONL line).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Input parsed but does not match the expected record or config shape.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(what) {}
};

// Semantically invalid values (probabilities that do not sum to one, empty
// cohorts, inconsistent tables).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Command line misuse: unknown flags, missing required arguments.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what) {}
};

// A numeric argument is outside its documented domain.
class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(what) {}
};

// A name was not found in a table (unknown factor, label, window...).
class LookupError : public Error {
public:
    explicit LookupError(const std::string& what) : Error(what) {}
};

// Unable to reach the remote text-generation service.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(what) {}
};

// The remote service rejected our credentials. Never retried.
class AuthError : public TransportError {
public:
    explicit AuthError(const std::string& what) : TransportError(what) {}
};

// The remote service answered with something we cannot interpret.
class ProtocolError : public TransportError {
public:
    explicit ProtocolError(const std::string& what) : TransportError(what) {}
};

// A failure that is expected to go away if the request is retried
// (timeouts, rate limiting, 5xx responses, dropped connections).
class TransientBackendError : public TransportError {
public:
    explicit TransientBackendError(const std::string& what) : TransportError(what) {}
};

} // namespace cohortforge
