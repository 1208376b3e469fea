#include "spw/driver/spw_driver.hpp"

#include <algorithm>

#include "spw/device/registers.hpp"

namespace spw::drv {

using wdf::IoResponse;
using wdf::NtStatus;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

IoResponse fail(NtStatus status) { return IoResponse{status, {}, 0}; }

IoResponse ok(std::vector<std::uint8_t> output) {
    const auto n = output.size();
    return IoResponse{NtStatus::Success, std::move(output), n};
}

IoResponse ok_u32(std::uint32_t value) {
    std::vector<std::uint8_t> out;
    ioctl::put_u32(out, value);
    return ok(std::move(out));
}

const kernel::BarAssignment* find_bar(std::span<const kernel::BarAssignment> resources, unsigned index) {
    auto it = std::find_if(resources.begin(), resources.end(),
                           [&](const kernel::BarAssignment& b) { return b.index == index; });
    return it == resources.end() ? nullptr : &*it;
}

bool valid_width(std::uint32_t length) { return length == 1 || length == 2 || length == 4; }

} // namespace

SpwDriver::SpwDriver(wdf::Framework& framework, SpwDriverOptions options)
    : framework_(framework), kernel_(framework.kernel()), options_(options) {}

wdf::DriverCallbacks SpwDriver::callbacks() {
    wdf::DriverCallbacks cb;
    cb.driver_entry = [this] { ++driver_entry_calls_; };
    cb.evt_device_add = [this](wdf::Device& d) { return device_add(d); };
    cb.evt_prepare_hardware = [this](wdf::Device& d, std::span<const kernel::BarAssignment> r) {
        return prepare_hardware(d, r);
    };
    cb.evt_release_hardware = [this](wdf::Device& d) { return release_hardware(d); };
    cb.evt_io_device_control = [this](wdf::Device& d, const wdf::IoRequest& r) { return io_device_control(d, r); };
    cb.attributes.driver_entry = {"SpwDriverEntry", true};
    cb.attributes.device_add = {"SpwEvtDeviceAdd", true};
    cb.attributes.prepare_hardware = {"SpwEvtDevicePrepareHardware", true};
    cb.attributes.release_hardware = {"SpwEvtDeviceReleaseHardware", true};
    cb.attributes.io_device_control = {"SpwEvtIoDeviceControl", options_.io_control_pageable};
    cb.hardware_id = kHardwareId;
    cb.auto_cleanup = options_.auto_cleanup;
    return cb;
}

wdf::DriverHandle SpwDriver::install() { return framework_.register_driver(callbacks()); }

NtStatus SpwDriver::device_add(wdf::Device& device) {
    SpwDeviceContext ctx;
    ctx.interface_guid = options_.interface_guid;
    try {
        framework_.create_queue(device, wdf::QueueKind::IoControl, options_.dispatch_irql);
        ctx.interface_path = framework_.register_device_interface(device, options_.interface_guid);
    } catch (const Error&) {
        return NtStatus::Unsuccessful;
    }
    device.context() = std::move(ctx);
    return NtStatus::Success;
}

NtStatus SpwDriver::prepare_hardware(wdf::Device& device, std::span<const kernel::BarAssignment> resources) {
    auto& ctx = device.context_as<SpwDeviceContext>();
    const auto* bar0 = find_bar(resources, 0);
    const auto* bar2 = find_bar(resources, 2);
    if (bar0 == nullptr || bar2 == nullptr) {
        return NtStatus::DeviceConfigurationError;
    }
    std::optional<kernel::IoRegion> mapped0;
    try {
        mapped0 = kernel_.map_io_space(device.id(), bar0->phys_base, bar0->length);
        auto mapped2 = kernel_.map_io_space(device.id(), bar2->phys_base, bar2->length);
        ctx.bar0_region = mapped0;
        ctx.bar2_region = mapped2;
        ctx.bar0_phys_base = bar0->phys_base;
    } catch (const Error& e) {
        if (mapped0) {
            kernel_.unmap_io_space(mapped0->handle);
        }
        return e.code() == Errc::Overlap ? NtStatus::ConflictingAddresses : NtStatus::DeviceConfigurationError;
    }
    return NtStatus::Success;
}

NtStatus SpwDriver::release_hardware(wdf::Device& device) {
    if (options_.release_is_noop) {
        return NtStatus::Success;
    }
    auto& ctx = device.context_as<SpwDeviceContext>();
    for (auto* region : {&ctx.bar0_region, &ctx.bar2_region}) {
        if (*region) {
            kernel_.unmap_io_space((*region)->handle);
            region->reset();
        }
    }
    ctx.pending_frames.clear();
    return NtStatus::Success;
}

IoResponse SpwDriver::io_device_control(wdf::Device& device, const wdf::IoRequest& request) {
    auto& ctx = device.context_as<SpwDeviceContext>();
    if (!ctx.bar0_region || !ctx.bar2_region) {
        return fail(NtStatus::DeviceNotReady);
    }
    ioctl::SpwCommand command;
    try {
        command = ioctl::decode_request(request.ctl_code, request.input);
    } catch (const Error& e) {
        return fail(e.code() == Errc::UnknownControlCode ? NtStatus::NotSupported : NtStatus::InvalidParameter);
    }
    if (const auto* acq = std::get_if<ioctl::cmd::AcquireData>(&command)) {
        return acquire(ctx, std::min(acq->max_bytes, request.output_capacity));
    }
    return handle(ctx, command);
}

std::uint32_t SpwDriver::read_reg32(const SpwDeviceContext& ctx, std::uint32_t offset) {
    return static_cast<std::uint32_t>(kernel_.region_read(ctx.bar0_region->handle, offset, 4));
}

void SpwDriver::write_reg32(const SpwDeviceContext& ctx, std::uint32_t offset, std::uint32_t value) {
    kernel_.region_write(ctx.bar0_region->handle, offset, 4, value);
}

IoResponse SpwDriver::handle(SpwDeviceContext& ctx, const ioctl::SpwCommand& command) {
    namespace cmd = ioctl::cmd;
    const std::uint64_t bar0_len = std::min<std::uint64_t>(ctx.bar0_region->length, dev::kBar0Size);

    // Registers are only touched when the whole access lies inside one
    // defined register of a mapped BAR0; everything else is rejected here.
    auto in_bounds = [&](std::uint32_t offset, std::uint32_t length) {
        return valid_width(length) && std::uint64_t{offset} + length <= bar0_len &&
               dev::find_register(offset, length).has_value();
    };
    auto port_ok = [&](std::uint32_t port) {
        const std::uint32_t ports = std::min(read_reg32(ctx, dev::reg::kPortCount), 32u);
        return port >= 1 && port <= ports;
    };

    return std::visit(
        overloaded{
            [&](const cmd::GetBar0Addr&) {
                std::vector<std::uint8_t> out;
                ioctl::put_u64(out, ctx.bar0_phys_base);
                return ok(std::move(out));
            },
            [&](const cmd::ReadReg& c) {
                if (!in_bounds(c.offset, c.length)) {
                    return fail(NtStatus::InvalidParameter);
                }
                const auto value = kernel_.region_read(ctx.bar0_region->handle, c.offset, c.length);
                std::vector<std::uint8_t> out;
                for (std::uint32_t i = 0; i < c.length; ++i) {
                    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
                }
                return ok(std::move(out));
            },
            [&](const cmd::WriteReg& c) {
                if (!in_bounds(c.offset, c.length) || c.data.size() != c.length) {
                    return fail(NtStatus::InvalidParameter);
                }
                std::uint64_t value = 0;
                for (std::uint32_t i = 0; i < c.length; ++i) {
                    value |= std::uint64_t{c.data[i]} << (8 * i);
                }
                kernel_.region_write(ctx.bar0_region->handle, c.offset, c.length, value);
                return ok_u32(c.length);
            },
            [&](const cmd::LinkEnable& c) {
                if (!port_ok(c.port)) {
                    return fail(NtStatus::InvalidParameter);
                }
                const std::uint32_t enabled = read_reg32(ctx, dev::reg::kLinkEnable);
                write_reg32(ctx, dev::reg::kLinkEnable, enabled | (1u << (c.port - 1)));
                return ok_u32(0);
            },
            [&](const cmd::LinkReset& c) {
                if (!port_ok(c.port)) {
                    return fail(NtStatus::InvalidParameter);
                }
                write_reg32(ctx, dev::reg::kLinkReset, 1u << (c.port - 1));
                return ok_u32(0);
            },
            [&](const cmd::PortDiscovery&) { return ok_u32(read_reg32(ctx, dev::reg::kPortStatus)); },
            [&](const cmd::AcquireData&) { return fail(NtStatus::Unsuccessful); },
        },
        command);
}

IoResponse SpwDriver::acquire(SpwDeviceContext& ctx, std::uint32_t max_bytes) {
    const std::uint32_t level = read_reg32(ctx, dev::reg::kFifoLevel);
    if (level > ctx.bar2_region->length) {
        return fail(NtStatus::DeviceConfigurationError);
    }
    if (level > 0) {
        const auto bar2 = ctx.bar2_region->handle;
        std::uint32_t at = 0;
        for (; at + 4 <= level; at += 4) {
            const auto word = kernel_.region_read(bar2, at, 4);
            for (unsigned i = 0; i < 4; ++i) {
                ctx.pending_frames.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
            }
        }
        for (; at < level; ++at) {
            ctx.pending_frames.push_back(static_cast<std::uint8_t>(kernel_.region_read(bar2, at, 1)));
        }
        write_reg32(ctx, dev::reg::kFifoCtrl, 1);
    }

    // Hand out whole frames only.
    std::size_t take = 0;
    while (take + dev::kFrameHeaderBytes <= ctx.pending_frames.size()) {
        std::uint32_t len = 0;
        for (unsigned i = 0; i < 4; ++i) {
            len |= std::uint32_t{ctx.pending_frames[take + i]} << (8 * i);
        }
        const std::size_t frame = dev::kFrameHeaderBytes + std::size_t{len};
        if (take + frame > max_bytes) {
            break;
        }
        take += frame;
    }
    if (take == 0 && !ctx.pending_frames.empty()) {
        return fail(NtStatus::BufferTooSmall);
    }
    std::vector<std::uint8_t> out(ctx.pending_frames.begin(),
                                  ctx.pending_frames.begin() + static_cast<std::ptrdiff_t>(take));
    ctx.pending_frames.erase(ctx.pending_frames.begin(), ctx.pending_frames.begin() + static_cast<std::ptrdiff_t>(take));
    return ok(std::move(out));
}

} // namespace spw::drv
