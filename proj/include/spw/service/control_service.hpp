#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "spw/ioctl/protocol.hpp"
#include "spw/service/simulation.hpp"

namespace spw::svc {

struct DeviceHandle {
    std::string interface_path;
    bool open = false;
};

struct CommandResult {
    std::string command;
    bool success = false;
    std::string reason; // empty on success
    wdf::NtStatus status = wdf::NtStatus::Success;
    std::optional<ioctl::SpwResult> payload;
    std::uint64_t duration_ticks = 0;
};

struct DeviceInfo {
    ioctl::Guid guid;
    std::string interface_path;
    std::uint64_t bar0_phys = 0;
    wdf::LifecycleState lifecycle = wdf::LifecycleState::Absent;
};

// Application layer: finds the driver by interface GUID and talks to it
// only through encoded IO control requests. Each command runs as an
// isolated unit; a failing command is reported, never propagated.
class ControlService {
public:
    explicit ControlService(const ServiceConfig& config, drv::SpwDriverOptions driver_options = {});

    DeviceHandle open_device(const ioctl::Guid& guid);
    static void close_device(DeviceHandle& handle) noexcept { handle.open = false; }

    // Throws Error(HandleClosed) for a closed handle; everything else is a
    // Failure result.
    CommandResult device_io_control(const DeviceHandle& handle, const ioctl::SpwCommand& command);

    // Same, through a handle opened on the configured GUID (reopened on demand).
    CommandResult execute(const ioctl::SpwCommand& command);

    std::uint64_t tick(std::uint64_t n);
    void inject(std::int32_t x, std::int32_t y, std::int32_t z);
    DeviceInfo device_info();
    unsigned port_count() const { return sim_.config().topology.router_ports; }

    Simulation& simulation() noexcept { return sim_; }

private:
    Simulation sim_;
    DeviceHandle default_handle_;
};

} // namespace spw::svc
