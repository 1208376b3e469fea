#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "spw/device/card.hpp"
#include "spw/driver/spw_driver.hpp"
#include "spw/kernel/kernel.hpp"
#include "spw/net/network.hpp"
#include "spw/service/config.hpp"
#include "spw/wdf/framework.hpp"

namespace spw::svc {

inline constexpr const char* kCardDeviceId = "PCI\\VEN_10EE&DEV_7021\\0";

struct IoctlTraceEntry {
    std::uint32_t ctl_code = 0;
    std::vector<std::uint8_t> input;
    wdf::NtStatus status = wdf::NtStatus::Success;
    std::vector<std::uint8_t> output;
    friend bool operator==(const IoctlTraceEntry&, const IoctlTraceEntry&) = default;
};

struct DeliveredSample {
    std::uint64_t tick = 0;
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t z = 0;
};

// The whole desk-top rig: kernel, card, SpaceWire network, framework and the
// Spw driver, wired together and booted with the card plugged in.
class Simulation {
public:
    explicit Simulation(const ServiceConfig& config, drv::SpwDriverOptions driver_options = {});
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    void plug();
    void unplug();

    // The one path by which IO requests reach the driver.
    wdf::IoResponse submit(wdf::IoRequest request);

    void tick(std::uint64_t n);
    std::uint64_t now() const noexcept { return network_.now(); }

    void set_sample_listener(std::function<void(const DeliveredSample&)> listener) {
        sample_listener_ = std::move(listener);
    }

    const std::vector<IoctlTraceEntry>& ioctl_trace() const noexcept { return ioctl_trace_; }
    // Kernel region accesses performed while servicing submit().
    std::uint64_t dispatch_access_count() const noexcept { return dispatch_accesses_; }

    const kernel::DeviceId& device_id() const noexcept { return device_id_; }
    const ServiceConfig& config() const noexcept { return config_; }
    kernel::Kernel& kernel() noexcept { return kernel_; }
    dev::Card& card() noexcept { return *card_; }
    net::Network& network() noexcept { return network_; }
    wdf::Framework& framework() noexcept { return framework_; }
    drv::SpwDriver& driver() noexcept { return driver_; }

private:
    class PortAdapter;

    ServiceConfig config_;
    kernel::DeviceId device_id_ = kCardDeviceId;
    kernel::Kernel kernel_;
    net::Network network_;
    std::unique_ptr<PortAdapter> ports_;
    std::shared_ptr<dev::Card> card_;
    wdf::Framework framework_;
    drv::SpwDriver driver_;
    std::function<void(const DeliveredSample&)> sample_listener_;
    std::vector<IoctlTraceEntry> ioctl_trace_;
    std::uint64_t dispatch_accesses_ = 0;
};

} // namespace spw::svc
