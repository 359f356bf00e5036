#pragma once

#include <stdexcept>
#include <string>

namespace ncdkit {

// Error taxonomy mirrored by the CLI exit codes:
// Data -> 2, Io -> 3, Format -> 4, Consistency -> 5.
enum class ErrorKind { Data, Io, Format, Consistency };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string msg)
        : std::runtime_error(std::move(msg)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::Data: return 2;
            case ErrorKind::Io: return 3;
            case ErrorKind::Format: return 4;
            case ErrorKind::Consistency: return 5;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_data(const std::string& msg) {
    throw Error(ErrorKind::Data, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
    throw Error(ErrorKind::Io, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
    throw Error(ErrorKind::Format, msg);
}
[[noreturn]] inline void throw_consistency(const std::string& msg) {
    throw Error(ErrorKind::Consistency, msg);
}

}  // namespace ncdkit
