#ifndef METRIQ_ERROR_HPP
#define METRIQ_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace metriq {

/// Base class for all errors raised by the toolkit.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input that violates an operation's contract (bad dimensions, degenerate
/// rating sets, unknown object ids, ...).
struct InputError : Error {
    using Error::Error;
};

/// Malformed input file. The message names the file and line.
struct ParseError : InputError {
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : InputError(file + ":" + std::to_string(line) + ": " + what) {}
    explicit ParseError(const std::string& what) : InputError(what) {}
};

/// A non-finite value appeared during numerical work. Carries the offending
/// iterate when one is available.
struct NumericError : Error {
    std::vector<double> iterate;
    explicit NumericError(const std::string& what, std::vector<double> at = {})
        : Error(what), iterate(std::move(at)) {}
};

}  // namespace metriq

#endif
