#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spw/error.hpp"

namespace spw::ioctl {

// ---------------------------------------------------------------------------
// CTL_CODE
//
//   31                16 15  14 13                  2 1    0
//  +--------------------+------+----------------------+------+
//  |    device type     |access|       function       |method|
//  +--------------------+------+----------------------+------+

struct CtlCode {
    std::uint16_t device_type = 0;
    std::uint8_t access = 0;
    std::uint16_t function = 0;
    std::uint8_t method = 0;
    friend bool operator==(const CtlCode&, const CtlCode&) = default;
};

inline constexpr std::uint32_t kMaxDeviceType = 0xFFFF;
inline constexpr std::uint32_t kMaxAccess = 0x3;
inline constexpr std::uint32_t kMaxFunction = 0xFFF;
inline constexpr std::uint32_t kMaxMethod = 0x3;

inline constexpr std::uint8_t kMethodBuffered = 0;
inline constexpr std::uint8_t kFileAnyAccess = 0;

// Throws Error(FieldOutOfRange) when a field exceeds its bit width.
std::uint32_t encode_ctl_code(std::uint32_t device_type, std::uint32_t access, std::uint32_t function,
                              std::uint32_t method);
inline std::uint32_t encode_ctl_code(const CtlCode& code) {
    return encode_ctl_code(code.device_type, code.access, code.function, code.method);
}
CtlCode decode_ctl_code(std::uint32_t word) noexcept;

// ---------------------------------------------------------------------------
// GUID, stored as 16 bytes in canonical text order.

class Guid {
public:
    Guid() = default;
    explicit Guid(const std::array<std::uint8_t, 16>& bytes) : bytes_(bytes) {}

    // Accepts "xxxxxxxx-xxxx-xxxx-xxxx-xxxxxxxxxxxx", optionally braced, any case.
    static Guid parse(std::string_view text);
    static std::optional<Guid> try_parse(std::string_view text) noexcept;

    // Random-layout GUID (version 4, variant 10). Seeded generation is reproducible.
    static Guid generate();
    static Guid generate(std::uint64_t seed);

    std::string to_string() const;
    const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }
    unsigned version() const noexcept { return bytes_[6] >> 4; }
    unsigned variant_bits() const noexcept { return bytes_[8] >> 6; }

    friend auto operator<=>(const Guid&, const Guid&) = default;

private:
    std::array<std::uint8_t, 16> bytes_{};
};

// ---------------------------------------------------------------------------
// Spw control words

inline constexpr std::uint16_t kSpwDeviceType = 0x8000;

enum class SpwFunction : std::uint16_t {
    GetBar0Addr = 0x800,
    ReadReg = 0x801,
    WriteReg = 0x802,
    LinkEnable = 0x803,
    LinkReset = 0x804,
    PortDiscovery = 0x805,
    AcquireData = 0x806,
};

constexpr std::uint32_t control_code(SpwFunction fn) noexcept {
    return (std::uint32_t{kSpwDeviceType} << 16) | (std::uint32_t{kFileAnyAccess} << 14) |
           (static_cast<std::uint32_t>(fn) << 2) | kMethodBuffered;
}

namespace cmd {
struct GetBar0Addr {
    friend bool operator==(const GetBar0Addr&, const GetBar0Addr&) = default;
};
struct ReadReg {
    std::uint32_t offset = 0;
    std::uint32_t length = 4;
    friend bool operator==(const ReadReg&, const ReadReg&) = default;
};
struct WriteReg {
    std::uint32_t offset = 0;
    std::uint32_t length = 4;
    std::vector<std::uint8_t> data;
    friend bool operator==(const WriteReg&, const WriteReg&) = default;
};
struct LinkEnable {
    std::uint32_t port = 0;
    friend bool operator==(const LinkEnable&, const LinkEnable&) = default;
};
struct LinkReset {
    std::uint32_t port = 0;
    friend bool operator==(const LinkReset&, const LinkReset&) = default;
};
struct PortDiscovery {
    friend bool operator==(const PortDiscovery&, const PortDiscovery&) = default;
};
struct AcquireData {
    std::uint32_t max_bytes = 65536;
    friend bool operator==(const AcquireData&, const AcquireData&) = default;
};
} // namespace cmd

using SpwCommand = std::variant<cmd::GetBar0Addr, cmd::ReadReg, cmd::WriteReg, cmd::LinkEnable, cmd::LinkReset,
                                cmd::PortDiscovery, cmd::AcquireData>;

namespace reply {
struct Bar0Addr {
    std::uint64_t phys = 0;
    friend bool operator==(const Bar0Addr&, const Bar0Addr&) = default;
};
struct RegData {
    std::vector<std::uint8_t> bytes;
    std::uint32_t value() const noexcept;
    friend bool operator==(const RegData&, const RegData&) = default;
};
struct Written {
    std::uint32_t count = 0;
    friend bool operator==(const Written&, const Written&) = default;
};
struct LinkStatus {
    std::uint32_t status = 0;
    friend bool operator==(const LinkStatus&, const LinkStatus&) = default;
};
struct PortMask {
    std::uint32_t mask = 0;
    friend bool operator==(const PortMask&, const PortMask&) = default;
};
struct Acquired {
    std::vector<std::uint8_t> frames;
    friend bool operator==(const Acquired&, const Acquired&) = default;
};
} // namespace reply

using SpwResult =
    std::variant<reply::Bar0Addr, reply::RegData, reply::Written, reply::LinkStatus, reply::PortMask, reply::Acquired>;

struct EncodedRequest {
    std::uint32_t ctl_code = 0;
    std::vector<std::uint8_t> input;
    friend bool operator==(const EncodedRequest&, const EncodedRequest&) = default;
};

std::string_view command_name(const SpwCommand& command) noexcept;
SpwFunction command_function(const SpwCommand& command) noexcept;

// Application side. Throws FieldOutOfRange when a command invariant fails.
EncodedRequest encode_command(const SpwCommand& command);
// Driver side. UnknownControlCode for foreign words, BadLength for wrong input size.
SpwCommand decode_request(std::uint32_t ctl_code, std::span<const std::uint8_t> input);

std::vector<std::uint8_t> encode_response(const SpwResult& result);
// Validates the output size against the command; BadLength when it disagrees.
SpwResult decode_response(const SpwCommand& command, std::span<const std::uint8_t> output);

// Splits AcquireData output into frame payloads; BadLength on a torn frame.
std::vector<std::vector<std::uint8_t>> split_frames(std::span<const std::uint8_t> frames);

// ---------------------------------------------------------------------------
// Golden vectors: "hexword<TAB>device_type,access,function,method" per line.

struct GoldenVector {
    std::uint32_t word = 0;
    CtlCode fields;
};

std::vector<GoldenVector> parse_golden_vectors(std::istream& in);
std::string format_golden_vector(const GoldenVector& vector);

// Little-endian helpers shared by both sides of the protocol.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value);
std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at);
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at);

} // namespace spw::ioctl
