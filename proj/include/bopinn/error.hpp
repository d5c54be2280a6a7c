#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace bopinn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A position, time or velocity outside the admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed arguments (empty inputs, zero-power signals, bad shapes).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: architecture lists, option values, config files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity surfaced in a computation. `term()` names the culprit.
class NumericError : public Error {
public:
    NumericError(std::string term, const std::string& what)
        : Error(what + " [" + term + "]"), term_(std::move(term)) {}

    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

/// Cholesky factorisation failed even after jitter escalation.
class SingularModelError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// create_directories that reports failure as IoError naming the directory.
inline void ensure_directory(const std::filesystem::path& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace bopinn
