#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spw {

// Every recoverable failure in the stack carries one of these codes.
// Simulated bugchecks are not errors; see kernel::BugcheckRaised.
enum class Errc {
    // kernel
    RangeNotAssigned,
    Overlap,
    KernelHalted,
    DuplicateDevice,
    UnknownDevice,
    InvalidRegion,
    // device model
    UndefinedRegister,
    OutOfRange,
    FifoOverflow,
    // framework
    MissingCallback,
    IllegalTransition,
    DuplicateQueueKind,
    NoQueueForRequest,
    DeviceNotStarted,
    DuplicateInterface,
    NotFound,
    MissingSection,
    MissingKey,
    BadVersionFormat,
    BadGuid,
    // protocol
    FieldOutOfRange,
    BadLength,
    UnknownControlCode,
    // network
    BadTopology,
    NoSuchPort,
    // service
    HandleClosed,
    BadConfig,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace spw
