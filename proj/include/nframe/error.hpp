#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nframe {

enum class ErrorKind {
    InvalidInput,
    UndefinedStableRank,
    Shape,
    Degenerate,
    InvalidSpec,
    Config,
    Ingest,
    Manifest,
    Inference,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures surface as this type; `kind()` is what the CLI reports
// in its machine-readable error JSON.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace nframe
