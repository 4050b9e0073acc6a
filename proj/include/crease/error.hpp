#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace crease {

/// Failure raised by any pipeline stage. The stage tag ("march/zero-probability",
/// "io/size-mismatch", ...) is machine readable and survives up to the CLI and
/// the HTTP layer.
class Error : public std::runtime_error
{
public:
    Error(std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), message_(message)
    {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    std::string stage_;
    std::string message_;
};

} // namespace crease
