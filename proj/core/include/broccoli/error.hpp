#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace broccoli {

/// Base of every error the engine throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller (negative elapsed
/// time, out-of-range probability, invalid parameters).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Malformed input file or record. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Bad or missing configuration (unreadable file, invalid value).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// No translation exists for an occurrence; the selector drops the lemma.
class MissingTranslation : public Error {
public:
    using Error::Error;
};

/// Transient provider failure; surfaces to clients as a service error.
class ProviderUnavailable : public Error {
public:
    using Error::Error;
};

}  // namespace broccoli
