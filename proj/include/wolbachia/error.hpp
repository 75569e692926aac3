#pragma once

#include <stdexcept>
#include <string>

namespace wolbachia {

/// Broad failure classes; the CLI and the HTTP service map these onto exit
/// codes and status codes respectively.
enum class ErrorKind {
    input,       // malformed files, bad options, schema violations
    validation,  // parameters outside the model's scope, domain preconditions
    numerical,   // integrator or search breakdown
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

}  // namespace wolbachia
