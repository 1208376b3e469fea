#include "spw/service/control_service.hpp"

namespace spw::svc {

ControlService::ControlService(const ServiceConfig& config, drv::SpwDriverOptions driver_options)
    : sim_(config, driver_options) {}

DeviceHandle ControlService::open_device(const ioctl::Guid& guid) {
    return DeviceHandle{sim_.framework().lookup_interface(guid), true};
}

CommandResult ControlService::device_io_control(const DeviceHandle& handle, const ioctl::SpwCommand& command) {
    if (!handle.open) {
        throw Error(Errc::HandleClosed, handle.interface_path);
    }
    CommandResult result;
    result.command = std::string(ioctl::command_name(command));
    const auto started = sim_.now();

    auto failure = [&](wdf::NtStatus status, std::string reason) {
        result.success = false;
        result.status = status;
        result.reason = std::move(reason);
        result.duration_ticks = sim_.now() - started;
        return result;
    };

    ioctl::EncodedRequest encoded;
    try {
        encoded = ioctl::encode_command(command);
    } catch (const Error&) {
        return failure(wdf::NtStatus::InvalidParameter, "InvalidParameter");
    }
    try {
        sim_.framework().open_interface(handle.interface_path);
        wdf::IoRequest request;
        request.ctl_code = encoded.ctl_code;
        request.input = std::move(encoded.input);
        const auto response = sim_.submit(std::move(request));
        if (!wdf::nt_success(response.status)) {
            return failure(response.status, std::string(wdf::to_string(response.status)));
        }
        result.payload = ioctl::decode_response(command, response.output);
        result.success = true;
        result.status = response.status;
    } catch (const Error& e) {
        return failure(wdf::NtStatus::Unsuccessful, std::string(to_string(e.code())));
    } catch (const std::exception& e) {
        return failure(wdf::NtStatus::Unsuccessful, e.what());
    }
    result.duration_ticks = sim_.now() - started;
    return result;
}

CommandResult ControlService::execute(const ioctl::SpwCommand& command) {
    if (!default_handle_.open) {
        try {
            default_handle_ = open_device(sim_.config().guid);
        } catch (const Error& e) {
            CommandResult r;
            r.command = std::string(ioctl::command_name(command));
            r.status = wdf::NtStatus::DeviceNotReady;
            r.reason = std::string(to_string(e.code()));
            return r;
        }
    }
    auto result = device_io_control(default_handle_, command);
    if (!result.success && result.reason == "NotFound") {
        close_device(default_handle_);
    }
    return result;
}

std::uint64_t ControlService::tick(std::uint64_t n) {
    sim_.tick(n);
    return sim_.now();
}

void ControlService::inject(std::int32_t x, std::int32_t y, std::int32_t z) {
    sim_.network().set_injected_sample(x, y, z);
}

DeviceInfo ControlService::device_info() {
    DeviceInfo info;
    info.guid = sim_.config().guid;
    info.lifecycle = sim_.framework().state(sim_.device_id());
    try {
        info.interface_path = sim_.framework().lookup_interface(info.guid);
    } catch (const Error&) {
    }
    if (info.lifecycle == wdf::LifecycleState::Started) {
        auto r = execute(ioctl::cmd::GetBar0Addr{});
        if (r.success) {
            info.bar0_phys = std::get<ioctl::reply::Bar0Addr>(*r.payload).phys;
        }
    }
    return info;
}

} // namespace spw::svc
