#pragma once

#include <any>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spw/ioctl/protocol.hpp"
#include "spw/kernel/kernel.hpp"

namespace spw::wdf {

enum class LifecycleState { Absent, Added, HardwarePrepared, Started, Removed };
enum class QueueKind { Read, Write, IoControl };

std::string_view to_string(LifecycleState state) noexcept;
std::string_view to_string(QueueKind kind) noexcept;

// Subset of NTSTATUS values the stack reports.
enum class NtStatus : std::uint32_t {
    Success = 0x00000000,
    Unsuccessful = 0xC0000001,
    InvalidParameter = 0xC000000D,
    ConflictingAddresses = 0xC0000018,
    BufferTooSmall = 0xC0000023,
    InsufficientResources = 0xC000009A,
    DeviceNotReady = 0xC00000A3,
    NotSupported = 0xC00000BB,
    DeviceConfigurationError = 0xC0000182,
};

std::string_view to_string(NtStatus status) noexcept;
inline bool nt_success(NtStatus s) noexcept { return static_cast<std::int32_t>(s) >= 0; }

struct IoRequest {
    QueueKind kind = QueueKind::IoControl;
    std::uint32_t ctl_code = 0;
    std::vector<std::uint8_t> input;
    std::uint32_t output_capacity = 65536;
};

struct IoResponse {
    NtStatus status = NtStatus::Success;
    std::vector<std::uint8_t> output;
    std::size_t bytes_returned = 0;
};

class Framework;

// Framework-owned device object. The driver keeps its per-device state in
// context(); the framework never looks inside it.
class Device {
public:
    Device(Framework& framework, kernel::DeviceId id, std::string hardware_id)
        : framework_(&framework), id_(std::move(id)), hardware_id_(std::move(hardware_id)) {}

    const kernel::DeviceId& id() const noexcept { return id_; }
    const std::string& hardware_id() const noexcept { return hardware_id_; }
    LifecycleState state() const noexcept { return state_; }
    Framework& framework() noexcept { return *framework_; }

    std::any& context() noexcept { return context_; }
    template <class T>
    T& context_as() {
        return std::any_cast<T&>(context_);
    }

private:
    friend class Framework;

    struct Queue {
        QueueKind kind;
        kernel::Irql dispatch_irql;
        std::deque<IoRequest> pending;
    };

    Framework* framework_;
    kernel::DeviceId id_;
    std::string hardware_id_;
    LifecycleState state_ = LifecycleState::Absent;
    std::any context_;
    std::vector<Queue> queues_;
    std::vector<ioctl::Guid> interfaces_;
    bool prepared_ = false;
    std::size_t driver_index_ = 0;
};

struct CallbackAttributes {
    kernel::RoutineAttributes driver_entry{"DriverEntry", true};
    kernel::RoutineAttributes device_add{"EvtDeviceAdd", true};
    kernel::RoutineAttributes prepare_hardware{"EvtDevicePrepareHardware", true};
    kernel::RoutineAttributes release_hardware{"EvtDeviceReleaseHardware", true};
    kernel::RoutineAttributes io_device_control{"EvtIoDeviceControl", false};
    kernel::RoutineAttributes io_read{"EvtIoRead", false};
    kernel::RoutineAttributes io_write{"EvtIoWrite", false};
};

using IoCallback = std::function<IoResponse(Device&, const IoRequest&)>;

struct DriverCallbacks {
    std::function<void()> driver_entry;
    std::function<NtStatus(Device&)> evt_device_add;
    std::function<NtStatus(Device&, std::span<const kernel::BarAssignment>)> evt_prepare_hardware;
    std::function<NtStatus(Device&)> evt_release_hardware;
    IoCallback evt_io_device_control;
    IoCallback evt_io_read;  // optional
    IoCallback evt_io_write; // optional
    CallbackAttributes attributes;
    // Devices whose hardware id matches are bound to this driver; empty matches any.
    std::string hardware_id;
    // Release regions the driver leaked at removal (after the leak is recorded).
    bool auto_cleanup = true;
};

struct DriverHandle {
    std::size_t index = 0;
    friend bool operator==(const DriverHandle&, const DriverHandle&) = default;
};

struct QueueHandle {
    kernel::DeviceId device;
    QueueKind kind;
};

using CallbackTrace = std::vector<std::string>;

// Event-driven driver host. Owns device objects and their lifecycle, routes
// PnP events from the kernel to the bound driver's callbacks, dispatches IO
// requests through per-device queues, and keeps the device interface
// directory.
class Framework {
public:
    explicit Framework(kernel::Kernel& kernel);
    Framework(const Framework&) = delete;
    Framework& operator=(const Framework&) = delete;
    ~Framework();

    DriverHandle register_driver(DriverCallbacks callbacks);
    std::size_t driver_count() const noexcept { return drivers_.size(); }

    // Invoked by the kernel's PnP listener; also callable directly.
    CallbackTrace on_pnp_event(const kernel::PnpEvent& event);
    // Removed -> Absent: drops the device object.
    void cleanup(const kernel::DeviceId& id);

    QueueHandle create_queue(Device& device, QueueKind kind, kernel::Irql dispatch_irql);
    IoResponse dispatch_request(const kernel::DeviceId& id, IoRequest request);

    std::string register_device_interface(Device& device, const ioctl::Guid& guid);
    std::string lookup_interface(const ioctl::Guid& guid) const;
    // The device behind an interface path; NotFound when nothing is registered.
    kernel::DeviceId open_interface(const std::string& path) const;

    Device* find_device(const kernel::DeviceId& id);
    LifecycleState state(const kernel::DeviceId& id) const;

    // Every callback the framework has invoked, in order.
    const CallbackTrace& trace() const noexcept { return trace_; }
    kernel::Kernel& kernel() noexcept { return kernel_; }

private:
    struct DriverRecord {
        DriverCallbacks callbacks;
    };

    CallbackTrace handle_arrival(const kernel::DeviceArrival& arrival);
    CallbackTrace handle_removal(const kernel::DeviceRemoval& removal);
    void note(CallbackTrace& local, const std::string& name);
    template <class F>
    auto run_callback(const kernel::RoutineAttributes& attrs, kernel::Irql irql, F&& body);
    void deregister_interfaces(Device& device);

    kernel::Kernel& kernel_;
    std::vector<DriverRecord> drivers_;
    std::map<kernel::DeviceId, std::unique_ptr<Device>> devices_;
    std::map<ioctl::Guid, std::pair<std::string, kernel::DeviceId>> interfaces_;
    CallbackTrace trace_;
};

} // namespace spw::wdf
