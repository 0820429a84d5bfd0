#pragma once

#include <stdexcept>
#include <string>

namespace fedscore {

// Process exit codes used by the CLI; library errors carry the matching code.
enum class ExitCode : int {
    Ok = 0,
    Config = 2,
    Data = 3,
    Numeric = 4,
    Io = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ExitCode::Config, m) {}
};

struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ExitCode::Data, m) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ExitCode::Numeric, m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ExitCode::Io, m) {}
};

// Rethrow with a "[stage] " prefix, preserving the concrete error type so
// exit-code mapping and catch sites keep working.
[[noreturn]] inline void rethrow_tagged(const Error& e, const std::string& stage) {
    const std::string message = "[" + stage + "] " + e.what();
    switch (e.code()) {
        case ExitCode::Config: throw ConfigError(message);
        case ExitCode::Data: throw DataError(message);
        case ExitCode::Numeric: throw NumericError(message);
        case ExitCode::Io: throw IoError(message);
        case ExitCode::Ok: break;
    }
    throw Error(e.code(), message);
}

}  // namespace fedscore
