#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

// BAR0 register file of the PCIe-SpaceWire interface card. Shared by the
// device model and the driver, the way a hardware register header would be.
namespace spw::dev {

enum class RegisterKind { ReadOnly, ReadWrite, WriteOneSelfClear };

struct RegisterSpec {
    std::uint32_t offset;
    RegisterKind kind;
    std::uint32_t reset_value;
    std::string_view name;
};

namespace reg {
inline constexpr std::uint32_t kDeviceId = 0x000;
inline constexpr std::uint32_t kVersion = 0x004;
inline constexpr std::uint32_t kPortStatus = 0x008;
inline constexpr std::uint32_t kLinkEnable = 0x00C;
inline constexpr std::uint32_t kLinkReset = 0x010;
inline constexpr std::uint32_t kAccX = 0x020;
inline constexpr std::uint32_t kAccY = 0x024;
inline constexpr std::uint32_t kAccZ = 0x028;
inline constexpr std::uint32_t kSampleCount = 0x02C;
inline constexpr std::uint32_t kFifoLevel = 0x030;
inline constexpr std::uint32_t kFifoCtrl = 0x034;   // bit0: drain
inline constexpr std::uint32_t kDropCount = 0x038;
inline constexpr std::uint32_t kPortCount = 0x03C;
inline constexpr std::uint32_t kScratch = 0x100;
} // namespace reg

inline constexpr std::uint32_t kDeviceIdValue = 0x53505743; // "SPWC"
inline constexpr std::uint32_t kVersionValue = 0x00010000;
inline constexpr std::uint32_t kRegisterWidth = 4;

inline constexpr std::uint64_t kBar0Size = 4096;
inline constexpr std::uint64_t kBar2Size = 65536;
inline constexpr std::uint32_t kFrameHeaderBytes = 4;
inline constexpr std::uint32_t kSampleBytes = 12;

// Reset values of the dynamic read-only registers are placeholders; their
// reads are computed from live card state.
inline constexpr std::array<RegisterSpec, 14> kRegisterMap{{
    {reg::kDeviceId, RegisterKind::ReadOnly, kDeviceIdValue, "DEVICE_ID"},
    {reg::kVersion, RegisterKind::ReadOnly, kVersionValue, "VERSION"},
    {reg::kPortStatus, RegisterKind::ReadOnly, 0, "PORT_STATUS"},
    {reg::kLinkEnable, RegisterKind::ReadWrite, 0, "LINK_ENABLE"},
    {reg::kLinkReset, RegisterKind::WriteOneSelfClear, 0, "LINK_RESET"},
    {reg::kAccX, RegisterKind::ReadOnly, 0, "ACC_X"},
    {reg::kAccY, RegisterKind::ReadOnly, 0, "ACC_Y"},
    {reg::kAccZ, RegisterKind::ReadOnly, 0, "ACC_Z"},
    {reg::kSampleCount, RegisterKind::ReadOnly, 0, "SAMPLE_COUNT"},
    {reg::kFifoLevel, RegisterKind::ReadOnly, 0, "FIFO_LEVEL"},
    {reg::kFifoCtrl, RegisterKind::WriteOneSelfClear, 0, "FIFO_CTRL"},
    {reg::kDropCount, RegisterKind::ReadOnly, 0, "DROP_COUNT"},
    {reg::kPortCount, RegisterKind::ReadOnly, 0, "PORT_COUNT"},
    {reg::kScratch, RegisterKind::ReadWrite, 0, "SCRATCH"},
}};

// The register fully containing [offset, offset+width), if any.
constexpr std::optional<RegisterSpec> find_register(std::uint64_t offset, unsigned width) {
    for (const auto& spec : kRegisterMap) {
        if (offset >= spec.offset && offset + width <= spec.offset + kRegisterWidth) {
            return spec;
        }
    }
    return std::nullopt;
}

} // namespace spw::dev
