#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comfort {

// Root of every error thrown by this library.
class ComfortError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public ComfortError {
public:
    using ComfortError::ComfortError;
};

class InvalidCount : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Newton iteration for the clothing surface temperature ran out of iterations.
class NonConvergence : public ComfortError {
public:
    NonConvergence(const std::string& what, double last_estimate, int iterations)
        : ComfortError(what), last_estimate_(last_estimate), iterations_(iterations) {}

    double last_estimate() const noexcept { return last_estimate_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_estimate_;
    int iterations_;
};

class DegenerateRange : public ComfortError {
public:
    using ComfortError::ComfortError;
};

class DivergedTraining : public ComfortError {
public:
    DivergedTraining(const std::string& what, std::size_t epoch)
        : ComfortError(what), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class UndefinedR2 : public ComfortError {
public:
    using ComfortError::ComfortError;
};

class MissingModel : public ComfortError {
public:
    using ComfortError::ComfortError;
};

class IoError : public ComfortError {
public:
    using ComfortError::ComfortError;
};

// Malformed file. Carries the 1-based line number where parsing stopped.
class ParseError : public ComfortError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& detail)
        : ComfortError(source + ":" + std::to_string(line) + ": " + detail),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace comfort
