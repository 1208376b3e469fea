#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "spw/error.hpp"

namespace spw::kernel {

enum class Irql : std::uint8_t { Passive = 0, Apc = 1, Dispatch = 2 };

std::string_view to_string(Irql level) noexcept;

using DeviceId = std::string;

// Strong handle for a mapped IO region. Zero is never issued.
struct RegionHandle {
    std::uint32_t value = 0;
    friend auto operator<=>(const RegionHandle&, const RegionHandle&) = default;
};

enum class AccessKind { Read, Write };

// Bus side of a device: the kernel forwards in-bounds region accesses here.
// Implementations reject accesses they cannot serve by throwing spw::Error.
class MmioTarget {
public:
    virtual ~MmioTarget() = default;
    virtual std::uint64_t mmio_read(unsigned bar, std::uint64_t offset, unsigned width) = 0;
    virtual void mmio_write(unsigned bar, std::uint64_t offset, unsigned width, std::uint64_t value) = 0;
};

struct BarAssignment {
    unsigned index = 0;
    std::uint64_t phys_base = 0;
    std::uint64_t length = 0;
    friend bool operator==(const BarAssignment&, const BarAssignment&) = default;
};

struct DeviceDescriptor {
    DeviceId id;
    std::string hardware_id;
    std::vector<BarAssignment> bars;
    std::shared_ptr<MmioTarget> target;
};

struct DeviceArrival {
    DeviceId id;
    std::string hardware_id;
    std::vector<BarAssignment> resources;
};

struct DeviceRemoval {
    DeviceId id;
};

using PnpEvent = std::variant<DeviceArrival, DeviceRemoval>;

struct IoRegion {
    RegionHandle handle;
    DeviceId device;
    std::uint64_t phys_base = 0;
    std::uint64_t length = 0;
    bool released = false;
    friend bool operator==(const IoRegion&, const IoRegion&) = default;
};

struct RoutineAttributes {
    std::string name;
    bool pageable = false;
};

enum class BugcheckCode { PagedCodeAtElevatedIrql, OutOfBoundsAccess, AccessAfterRelease };

std::string_view to_string(BugcheckCode code) noexcept;

struct Bugcheck {
    BugcheckCode code;
    std::string detail;
    std::string routine;
    Irql irql = Irql::Passive;
    std::optional<std::uint64_t> address;
};

// Thrown out of a faulting access. invoke_at_irql converts it into a Halted
// outcome; callers outside a guarded routine see the exception directly.
class BugcheckRaised : public std::runtime_error {
public:
    explicit BugcheckRaised(Bugcheck check)
        : std::runtime_error("bugcheck: " + check.detail), check_(std::move(check)) {}
    const Bugcheck& bugcheck() const noexcept { return check_; }

private:
    Bugcheck check_;
};

template <class T>
struct Outcome {
    std::optional<T> value;
    std::optional<Bugcheck> bugcheck;

    bool normal() const noexcept { return !bugcheck.has_value(); }
    bool halted() const noexcept { return bugcheck.has_value(); }
};

namespace detail {
template <class F>
auto call_for_value(F& body) {
    if constexpr (std::is_void_v<std::invoke_result_t<F&>>) {
        body();
        return std::monostate{};
    } else {
        return body();
    }
}
} // namespace detail

struct LeakEntry {
    DeviceId device;
    IoRegion region;
};

// Deterministic single-context kernel: IRQL tracking, IO-space mapping with
// bounds enforcement, paging rule checks, PnP event source and leak ledger.
// A bugcheck halts this instance; every later mutating call throws
// Error(KernelHalted).
class Kernel {
public:
    using PnpListener = std::function<void(const PnpEvent&)>;

    Kernel() = default;
    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    void set_pnp_listener(PnpListener listener) { listener_ = std::move(listener); }

    std::vector<PnpEvent> plug_device(DeviceDescriptor descriptor);
    std::vector<PnpEvent> unplug_device(const DeviceId& id);
    bool is_plugged(const DeviceId& id) const;

    IoRegion map_io_space(const DeviceId& device, std::uint64_t phys_base, std::uint64_t length);
    void unmap_io_space(RegionHandle handle);

    std::uint64_t region_access(RegionHandle handle, std::uint64_t offset, unsigned width, AccessKind kind,
                                std::uint64_t value = 0);
    std::uint64_t region_read(RegionHandle handle, std::uint64_t offset, unsigned width) {
        return region_access(handle, offset, width, AccessKind::Read);
    }
    void region_write(RegionHandle handle, std::uint64_t offset, unsigned width, std::uint64_t value) {
        region_access(handle, offset, width, AccessKind::Write, value);
    }

    template <class F>
    auto invoke_at_irql(const RoutineAttributes& routine, Irql irql, F&& body) {
        Outcome<decltype(detail::call_for_value(body))> outcome;
        outcome.bugcheck = run_guarded(routine, irql, [&] { outcome.value.emplace(detail::call_for_value(body)); });
        return outcome;
    }

    // Snapshot of every region still live on a device after its removal.
    std::vector<LeakEntry> leak_report() const;
    // Called by the framework once the driver's release callback has
    // returned, before any automatic cleanup.
    std::vector<IoRegion> audit_teardown(const DeviceId& device);
    // Releases every live region of a device (framework auto-cleanup).
    std::size_t release_all(const DeviceId& device);

    std::vector<IoRegion> live_regions(const DeviceId& device) const;
    std::optional<IoRegion> region(RegionHandle handle) const;

    Irql current_irql() const noexcept { return irql_; }
    bool halted() const noexcept { return bugcheck_.has_value(); }
    const std::optional<Bugcheck>& bugcheck() const noexcept { return bugcheck_; }
    std::size_t bugcheck_count() const noexcept { return bugcheck_count_; }
    std::uint64_t region_access_count() const noexcept { return access_count_; }

private:
    struct RegionRecord {
        IoRegion info;
        std::shared_ptr<MmioTarget> target;
        unsigned bar = 0;
        std::uint64_t bar_offset = 0;
    };

    std::optional<Bugcheck> run_guarded(const RoutineAttributes& routine, Irql irql,
                                        const std::function<void()>& body);
    [[noreturn]] void raise(Bugcheck check);
    void require_running() const;
    void record_leak(const IoRegion& region);

    PnpListener listener_;
    std::map<DeviceId, DeviceDescriptor> devices_;
    std::map<RegionHandle, RegionRecord> regions_;
    std::vector<LeakEntry> leaks_;
    std::uint32_t next_handle_ = 1;
    Irql irql_ = Irql::Passive;
    std::string current_routine_;
    std::optional<Bugcheck> bugcheck_;
    std::size_t bugcheck_count_ = 0;
    std::uint64_t access_count_ = 0;
};

} // namespace spw::kernel
