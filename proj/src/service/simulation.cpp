#include "spw/service/simulation.hpp"

namespace spw::svc {

class Simulation::PortAdapter final : public dev::PortLinkControl {
public:
    explicit PortAdapter(net::Network& network) : network_(network) {}

    unsigned port_count() const override { return network_.topology().router_ports; }

    void port_action(unsigned port, dev::PortAction action) override {
        switch (action) {
        case dev::PortAction::Enable: network_.link_command(port, net::LinkCommand::Enable); break;
        case dev::PortAction::Disable: network_.link_command(port, net::LinkCommand::Disable); break;
        case dev::PortAction::Reset: network_.link_command(port, net::LinkCommand::Reset); break;
        }
    }

    std::uint32_t run_mask() const override { return network_.discovery_mask(); }

private:
    net::Network& network_;
};

namespace {

net::NetworkConfig network_config(const ServiceConfig& config) {
    net::NetworkConfig nc;
    nc.sample_period = config.sample_period;
    nc.waveform.amplitude = config.accel_amplitude;
    nc.waveform.half_period = config.accel_half_period;
    return nc;
}

drv::SpwDriverOptions with_guid(drv::SpwDriverOptions options, const ServiceConfig& config) {
    options.interface_guid = config.guid;
    return options;
}

} // namespace

Simulation::Simulation(const ServiceConfig& config, drv::SpwDriverOptions driver_options)
    : config_(config),
      network_(config.topology, network_config(config)),
      ports_(std::make_unique<PortAdapter>(network_)),
      card_(std::make_shared<dev::Card>(ports_.get())),
      framework_(kernel_),
      driver_(framework_, with_guid(driver_options, config)) {
    network_.set_card_sink([this](unsigned port, std::span<const std::uint8_t> payload, std::uint64_t tick) {
        try {
            card_->deliver_packet(port, payload);
        } catch (const Error&) {
            return; // FifoOverflow: counted by the card
        }
        if (sample_listener_ && payload.size() == dev::kSampleBytes) {
            DeliveredSample s;
            s.tick = tick;
            s.x = static_cast<std::int32_t>(ioctl::get_u32(payload, 0));
            s.y = static_cast<std::int32_t>(ioctl::get_u32(payload, 4));
            s.z = static_cast<std::int32_t>(ioctl::get_u32(payload, 8));
            sample_listener_(s);
        }
    });
    driver_.install();
    plug();
}

Simulation::~Simulation() { network_.set_card_sink(nullptr); }

void Simulation::plug() {
    kernel::DeviceDescriptor descriptor;
    descriptor.id = device_id_;
    descriptor.hardware_id = drv::kHardwareId;
    descriptor.bars = {{0, config_.bar0_base, config_.bar0_length}, {2, config_.bar2_base, config_.bar2_length}};
    descriptor.target = card_;
    kernel_.plug_device(std::move(descriptor));
}

void Simulation::unplug() { kernel_.unplug_device(device_id_); }

wdf::IoResponse Simulation::submit(wdf::IoRequest request) {
    IoctlTraceEntry entry{request.ctl_code, request.input, wdf::NtStatus::Success, {}};
    const auto before = kernel_.region_access_count();
    try {
        auto response = framework_.dispatch_request(device_id_, std::move(request));
        dispatch_accesses_ += kernel_.region_access_count() - before;
        entry.status = response.status;
        entry.output = response.output;
        ioctl_trace_.push_back(std::move(entry));
        return response;
    } catch (...) {
        dispatch_accesses_ += kernel_.region_access_count() - before;
        entry.status = wdf::NtStatus::Unsuccessful;
        ioctl_trace_.push_back(std::move(entry));
        throw;
    }
}

void Simulation::tick(std::uint64_t n) { network_.tick(n); }

} // namespace spw::svc
