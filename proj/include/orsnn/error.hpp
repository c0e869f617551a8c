#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace orsnn {

enum class ErrorKind {
    ShapeMismatch,
    InvalidArgument,
    NotBinary,
    NaNDetected,
    ParseError,
    BadMagic,
    Truncated,
    CountMismatch,
    DatasetNotFound,
    EmptyDataset,
    ArchMismatch,
    VersionMismatch,
    CorruptPayload,
    UnknownLayer,
    VerificationFailed,
    Divergence,
    Io,
};

std::string_view kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace orsnn
