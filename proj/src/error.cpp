#include "spw/error.hpp"

namespace spw {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::RangeNotAssigned: return "RangeNotAssigned";
    case Errc::Overlap: return "Overlap";
    case Errc::KernelHalted: return "KernelHalted";
    case Errc::DuplicateDevice: return "DuplicateDevice";
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::InvalidRegion: return "InvalidRegion";
    case Errc::UndefinedRegister: return "UndefinedRegister";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::FifoOverflow: return "FifoOverflow";
    case Errc::MissingCallback: return "MissingCallback";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::DuplicateQueueKind: return "DuplicateQueueKind";
    case Errc::NoQueueForRequest: return "NoQueueForRequest";
    case Errc::DeviceNotStarted: return "DeviceNotStarted";
    case Errc::DuplicateInterface: return "DuplicateInterface";
    case Errc::NotFound: return "NotFound";
    case Errc::MissingSection: return "MissingSection";
    case Errc::MissingKey: return "MissingKey";
    case Errc::BadVersionFormat: return "BadVersionFormat";
    case Errc::BadGuid: return "BadGuid";
    case Errc::FieldOutOfRange: return "FieldOutOfRange";
    case Errc::BadLength: return "BadLength";
    case Errc::UnknownControlCode: return "UnknownControlCode";
    case Errc::BadTopology: return "BadTopology";
    case Errc::NoSuchPort: return "NoSuchPort";
    case Errc::HandleClosed: return "HandleClosed";
    case Errc::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

} // namespace spw
