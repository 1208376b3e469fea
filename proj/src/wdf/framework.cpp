#include "spw/wdf/framework.hpp"

#include <algorithm>

namespace spw::wdf {

std::string_view to_string(LifecycleState state) noexcept {
    switch (state) {
    case LifecycleState::Absent: return "Absent";
    case LifecycleState::Added: return "Added";
    case LifecycleState::HardwarePrepared: return "HardwarePrepared";
    case LifecycleState::Started: return "Started";
    case LifecycleState::Removed: return "Removed";
    }
    return "?";
}

std::string_view to_string(QueueKind kind) noexcept {
    switch (kind) {
    case QueueKind::Read: return "Read";
    case QueueKind::Write: return "Write";
    case QueueKind::IoControl: return "IoControl";
    }
    return "?";
}

std::string_view to_string(NtStatus status) noexcept {
    switch (status) {
    case NtStatus::Success: return "Success";
    case NtStatus::Unsuccessful: return "Unsuccessful";
    case NtStatus::InvalidParameter: return "InvalidParameter";
    case NtStatus::ConflictingAddresses: return "ConflictingAddresses";
    case NtStatus::BufferTooSmall: return "BufferTooSmall";
    case NtStatus::InsufficientResources: return "InsufficientResources";
    case NtStatus::DeviceNotReady: return "DeviceNotReady";
    case NtStatus::NotSupported: return "NotSupported";
    case NtStatus::DeviceConfigurationError: return "DeviceConfigurationError";
    }
    return "Unknown";
}

Framework::Framework(kernel::Kernel& kernel) : kernel_(kernel) {
    kernel_.set_pnp_listener([this](const kernel::PnpEvent& event) { on_pnp_event(event); });
}

Framework::~Framework() { kernel_.set_pnp_listener(nullptr); }

void Framework::note(CallbackTrace& local, const std::string& name) {
    local.push_back(name);
    trace_.push_back(name);
}

template <class F>
auto Framework::run_callback(const kernel::RoutineAttributes& attrs, kernel::Irql irql, F&& body) {
    auto outcome = kernel_.invoke_at_irql(attrs, irql, std::forward<F>(body));
    if (outcome.halted()) {
        throw Error(Errc::KernelHalted, outcome.bugcheck->detail);
    }
    return std::move(*outcome.value);
}

DriverHandle Framework::register_driver(DriverCallbacks callbacks) {
    if (!callbacks.evt_device_add) {
        throw Error(Errc::MissingCallback, "evt_device_add");
    }
    if (!callbacks.evt_prepare_hardware) {
        throw Error(Errc::MissingCallback, "evt_prepare_hardware");
    }
    if (!callbacks.evt_release_hardware) {
        throw Error(Errc::MissingCallback, "evt_release_hardware");
    }
    drivers_.push_back({std::move(callbacks)});
    DriverHandle handle{drivers_.size() - 1};
    const auto& cb = drivers_.back().callbacks;
    CallbackTrace local;
    note(local, "driver_entry");
    if (cb.driver_entry) {
        run_callback(cb.attributes.driver_entry, kernel::Irql::Passive, cb.driver_entry);
    }
    return handle;
}

CallbackTrace Framework::on_pnp_event(const kernel::PnpEvent& event) {
    if (const auto* arrival = std::get_if<kernel::DeviceArrival>(&event)) {
        return handle_arrival(*arrival);
    }
    return handle_removal(std::get<kernel::DeviceRemoval>(event));
}

CallbackTrace Framework::handle_arrival(const kernel::DeviceArrival& arrival) {
    CallbackTrace local;
    auto driver = std::find_if(drivers_.begin(), drivers_.end(), [&](const DriverRecord& d) {
        return d.callbacks.hardware_id.empty() || d.callbacks.hardware_id == arrival.hardware_id;
    });
    if (driver == drivers_.end()) {
        return local;
    }
    if (auto it = devices_.find(arrival.id); it != devices_.end()) {
        if (it->second->state_ != LifecycleState::Removed) {
            throw Error(Errc::IllegalTransition, "arrival of " + arrival.id + " in state " +
                                                     std::string(to_string(it->second->state_)));
        }
        cleanup(arrival.id);
    }

    auto owned = std::make_unique<Device>(*this, arrival.id, arrival.hardware_id);
    Device& device = *owned;
    device.driver_index_ = static_cast<std::size_t>(driver - drivers_.begin());
    devices_.emplace(arrival.id, std::move(owned));
    const DriverCallbacks& cb = driver->callbacks;

    note(local, "evt_device_add");
    const NtStatus added =
        run_callback(cb.attributes.device_add, kernel::Irql::Passive, [&] { return cb.evt_device_add(device); });
    if (!nt_success(added)) {
        deregister_interfaces(device);
        devices_.erase(arrival.id);
        return local;
    }
    device.state_ = LifecycleState::Added;

    note(local, "evt_prepare_hardware");
    device.prepared_ = true;
    const NtStatus prepared = run_callback(cb.attributes.prepare_hardware, kernel::Irql::Passive, [&] {
        return cb.evt_prepare_hardware(device, std::span<const kernel::BarAssignment>(arrival.resources));
    });
    if (!nt_success(prepared)) {
        device.prepared_ = false;
        return local;
    }
    device.state_ = LifecycleState::HardwarePrepared;
    // No power-state modelling: D0 entry is implicit.
    device.state_ = LifecycleState::Started;
    return local;
}

CallbackTrace Framework::handle_removal(const kernel::DeviceRemoval& removal) {
    CallbackTrace local;
    auto it = devices_.find(removal.id);
    if (it == devices_.end() || it->second->state_ == LifecycleState::Absent ||
        it->second->state_ == LifecycleState::Removed) {
        throw Error(Errc::IllegalTransition, "removal of " + removal.id + " which is not present");
    }
    Device& device = *it->second;
    const DriverCallbacks& cb = drivers_.at(device.driver_index_).callbacks;

    if (device.prepared_) {
        note(local, "evt_release_hardware");
        run_callback(cb.attributes.release_hardware, kernel::Irql::Passive,
                     [&] { return cb.evt_release_hardware(device); });
        device.prepared_ = false;
    }
    kernel_.audit_teardown(device.id());
    if (cb.auto_cleanup) {
        kernel_.release_all(device.id());
    }
    deregister_interfaces(device);
    device.queues_.clear();
    device.state_ = LifecycleState::Removed;
    return local;
}

void Framework::cleanup(const kernel::DeviceId& id) {
    auto it = devices_.find(id);
    if (it == devices_.end()) {
        return;
    }
    if (it->second->state_ != LifecycleState::Removed) {
        throw Error(Errc::IllegalTransition, "cleanup of " + id + " before removal");
    }
    devices_.erase(it);
}

QueueHandle Framework::create_queue(Device& device, QueueKind kind, kernel::Irql dispatch_irql) {
    if (device.state_ == LifecycleState::Absent && !devices_.contains(device.id())) {
        throw Error(Errc::IllegalTransition, "queue on unknown device " + device.id());
    }
    if (device.state_ == LifecycleState::Removed) {
        throw Error(Errc::IllegalTransition, "queue on removed device " + device.id());
    }
    for (const auto& q : device.queues_) {
        if (q.kind == kind) {
            throw Error(Errc::DuplicateQueueKind, std::string(to_string(kind)));
        }
    }
    const DriverCallbacks& cb = drivers_.at(device.driver_index_).callbacks;
    if (kind == QueueKind::IoControl && !cb.evt_io_device_control) {
        throw Error(Errc::MissingCallback, "evt_io_device_control required by IoControl queue");
    }
    device.queues_.push_back({kind, dispatch_irql, {}});
    return {device.id(), kind};
}

IoResponse Framework::dispatch_request(const kernel::DeviceId& id, IoRequest request) {
    auto it = devices_.find(id);
    if (it == devices_.end() || it->second->state_ != LifecycleState::Started) {
        throw Error(Errc::DeviceNotStarted, id);
    }
    Device& device = *it->second;
    auto queue = std::find_if(device.queues_.begin(), device.queues_.end(),
                              [&](const Device::Queue& q) { return q.kind == request.kind; });
    if (queue == device.queues_.end()) {
        throw Error(Errc::NoQueueForRequest, std::string(to_string(request.kind)));
    }
    const DriverCallbacks& cb = drivers_.at(device.driver_index_).callbacks;
    queue->pending.push_back(std::move(request));

    IoResponse response;
    while (!queue->pending.empty()) {
        IoRequest next = std::move(queue->pending.front());
        queue->pending.pop_front();
        const IoCallback* handler = nullptr;
        const kernel::RoutineAttributes* attrs = nullptr;
        std::string name;
        switch (next.kind) {
        case QueueKind::IoControl:
            handler = &cb.evt_io_device_control;
            attrs = &cb.attributes.io_device_control;
            name = "evt_io_device_control";
            break;
        case QueueKind::Read:
            handler = &cb.evt_io_read;
            attrs = &cb.attributes.io_read;
            name = "evt_io_read";
            break;
        case QueueKind::Write:
            handler = &cb.evt_io_write;
            attrs = &cb.attributes.io_write;
            name = "evt_io_write";
            break;
        }
        if (!*handler) {
            response = IoResponse{NtStatus::NotSupported, {}, 0};
            continue;
        }
        trace_.push_back(name);
        response = run_callback(*attrs, queue->dispatch_irql, [&] { return (*handler)(device, next); });
        if (response.output.size() > next.output_capacity) {
            response = IoResponse{NtStatus::BufferTooSmall, {}, 0};
        }
        response.bytes_returned = response.output.size();
    }
    return response;
}

std::string Framework::register_device_interface(Device& device, const ioctl::Guid& guid) {
    if (device.state_ == LifecycleState::Removed) {
        throw Error(Errc::IllegalTransition, "interface on removed device " + device.id());
    }
    if (interfaces_.contains(guid)) {
        throw Error(Errc::DuplicateInterface, guid.to_string());
    }
    std::string path = R"(\\interface\{)" + guid.to_string() + R"(}\0)";
    interfaces_.emplace(guid, std::make_pair(path, device.id()));
    device.interfaces_.push_back(guid);
    return path;
}

std::string Framework::lookup_interface(const ioctl::Guid& guid) const {
    auto it = interfaces_.find(guid);
    if (it == interfaces_.end()) {
        throw Error(Errc::NotFound, "no interface for " + guid.to_string());
    }
    return it->second.first;
}

kernel::DeviceId Framework::open_interface(const std::string& path) const {
    for (const auto& [guid, entry] : interfaces_) {
        if (entry.first == path) {
            return entry.second;
        }
    }
    throw Error(Errc::NotFound, path);
}

void Framework::deregister_interfaces(Device& device) {
    for (const auto& guid : device.interfaces_) {
        interfaces_.erase(guid);
    }
    device.interfaces_.clear();
}

Device* Framework::find_device(const kernel::DeviceId& id) {
    auto it = devices_.find(id);
    return it == devices_.end() ? nullptr : it->second.get();
}

LifecycleState Framework::state(const kernel::DeviceId& id) const {
    auto it = devices_.find(id);
    return it == devices_.end() ? LifecycleState::Absent : it->second->state_;
}

} // namespace spw::wdf
