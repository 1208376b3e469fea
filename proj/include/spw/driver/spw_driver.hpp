#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>

#include "spw/ioctl/protocol.hpp"
#include "spw/kernel/kernel.hpp"
#include "spw/wdf/framework.hpp"

namespace spw::drv {

inline constexpr const char* kHardwareId = R"(PCI\VEN_10EE&DEV_7021)";

struct SpwDeviceContext {
    std::optional<kernel::IoRegion> bar0_region;
    std::optional<kernel::IoRegion> bar2_region;
    std::uint64_t bar0_phys_base = 0;
    ioctl::Guid interface_guid;
    std::string interface_path;
    // Whole frames pulled out of the card FIFO but not yet returned.
    std::deque<std::uint8_t> pending_frames;
};

struct SpwDriverOptions {
    ioctl::Guid interface_guid;
    kernel::Irql dispatch_irql = kernel::Irql::Dispatch;
    // Misconfigured variant: IoControl callback tagged as paged code.
    bool io_control_pageable = false;
    // Fault injection: release callback that forgets to unmap the BARs.
    bool release_is_noop = false;
    bool auto_cleanup = true;
};

// The Spw_PCIe driver. Each instance registers once with a framework and
// serves every card bound to it.
class SpwDriver {
public:
    SpwDriver(wdf::Framework& framework, SpwDriverOptions options);

    wdf::DriverHandle install();
    wdf::DriverCallbacks callbacks();

    wdf::NtStatus device_add(wdf::Device& device);
    wdf::NtStatus prepare_hardware(wdf::Device& device, std::span<const kernel::BarAssignment> resources);
    wdf::NtStatus release_hardware(wdf::Device& device);
    wdf::IoResponse io_device_control(wdf::Device& device, const wdf::IoRequest& request);

    std::uint64_t driver_entry_calls() const noexcept { return driver_entry_calls_; }
    const SpwDriverOptions& options() const noexcept { return options_; }

private:
    wdf::IoResponse handle(SpwDeviceContext& ctx, const ioctl::SpwCommand& command);
    wdf::IoResponse acquire(SpwDeviceContext& ctx, std::uint32_t max_bytes);
    std::uint32_t read_reg32(const SpwDeviceContext& ctx, std::uint32_t offset);
    void write_reg32(const SpwDeviceContext& ctx, std::uint32_t offset, std::uint32_t value);

    wdf::Framework& framework_;
    kernel::Kernel& kernel_;
    SpwDriverOptions options_;
    std::uint64_t driver_entry_calls_ = 0;
};

} // namespace spw::drv
