#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace glassynth {

// Input data is malformed or inconsistent. CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure could not produce a meaningful answer. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class InconsistentManifest : public DataError {
public:
    using DataError::DataError;
};

class EmptyProtocol : public DataError {
public:
    using DataError::DataError;
};

class LookupError : public DataError {
public:
    using DataError::DataError;
};

class MiningError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateConfiguration : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TrainingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace glassynth
