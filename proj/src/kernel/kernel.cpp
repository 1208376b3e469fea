#include "spw/kernel/kernel.hpp"

#include <algorithm>
#include <sstream>

namespace spw::kernel {

std::string_view to_string(Irql level) noexcept {
    switch (level) {
    case Irql::Passive: return "PASSIVE_LEVEL";
    case Irql::Apc: return "APC_LEVEL";
    case Irql::Dispatch: return "DISPATCH_LEVEL";
    }
    return "?";
}

std::string_view to_string(BugcheckCode code) noexcept {
    switch (code) {
    case BugcheckCode::PagedCodeAtElevatedIrql: return "PagedCodeAtElevatedIrql";
    case BugcheckCode::OutOfBoundsAccess: return "OutOfBoundsAccess";
    case BugcheckCode::AccessAfterRelease: return "AccessAfterRelease";
    }
    return "?";
}

namespace {

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << std::uppercase << v;
    return os.str();
}

bool ranges_overlap(std::uint64_t a, std::uint64_t alen, std::uint64_t b, std::uint64_t blen) {
    return a < b + blen && b < a + alen;
}

} // namespace

void Kernel::require_running() const {
    if (halted()) {
        throw Error(Errc::KernelHalted, "kernel halted by " + std::string(to_string(bugcheck_->code)));
    }
}

void Kernel::raise(Bugcheck check) {
    check.irql = irql_;
    if (check.routine.empty()) {
        check.routine = current_routine_;
    }
    bugcheck_ = check;
    ++bugcheck_count_;
    throw BugcheckRaised(std::move(check));
}

std::vector<PnpEvent> Kernel::plug_device(DeviceDescriptor descriptor) {
    require_running();
    if (devices_.contains(descriptor.id)) {
        throw Error(Errc::DuplicateDevice, descriptor.id);
    }
    if (descriptor.bars.empty()) {
        throw Error(Errc::RangeNotAssigned, "device " + descriptor.id + " has no BAR assignment");
    }
    for (const auto& bar : descriptor.bars) {
        if (bar.length == 0 || bar.phys_base + bar.length < bar.phys_base) {
            throw Error(Errc::RangeNotAssigned, "degenerate BAR" + std::to_string(bar.index));
        }
    }
    DeviceArrival arrival{descriptor.id, descriptor.hardware_id, descriptor.bars};
    devices_.emplace(descriptor.id, std::move(descriptor));

    std::vector<PnpEvent> events{arrival};
    if (listener_) {
        listener_(events.front());
    }
    return events;
}

std::vector<PnpEvent> Kernel::unplug_device(const DeviceId& id) {
    require_running();
    if (!devices_.contains(id)) {
        throw Error(Errc::UnknownDevice, id);
    }
    std::vector<PnpEvent> events{DeviceRemoval{id}};
    if (listener_) {
        listener_(events.front());
    }
    devices_.erase(id);
    for (const auto& region : live_regions(id)) {
        record_leak(region);
    }
    return events;
}

bool Kernel::is_plugged(const DeviceId& id) const { return devices_.contains(id); }

IoRegion Kernel::map_io_space(const DeviceId& device, std::uint64_t phys_base, std::uint64_t length) {
    require_running();
    auto it = devices_.find(device);
    if (it == devices_.end()) {
        throw Error(Errc::RangeNotAssigned, "no resources assigned to " + device);
    }
    if (length == 0) {
        throw Error(Errc::RangeNotAssigned, "zero-length mapping at " + hex(phys_base));
    }
    const BarAssignment* owner = nullptr;
    for (const auto& bar : it->second.bars) {
        if (phys_base >= bar.phys_base && length <= bar.length && phys_base - bar.phys_base <= bar.length - length) {
            owner = &bar;
            break;
        }
    }
    if (owner == nullptr) {
        throw Error(Errc::RangeNotAssigned, "[" + hex(phys_base) + ", +" + std::to_string(length) + ") outside assigned BARs");
    }
    for (const auto& [handle, rec] : regions_) {
        if (rec.info.device == device && !rec.info.released &&
            ranges_overlap(rec.info.phys_base, rec.info.length, phys_base, length)) {
            throw Error(Errc::Overlap, "overlaps live region at " + hex(rec.info.phys_base));
        }
    }
    RegionRecord rec;
    rec.info = IoRegion{RegionHandle{next_handle_++}, device, phys_base, length, false};
    rec.target = it->second.target;
    rec.bar = owner->index;
    rec.bar_offset = phys_base - owner->phys_base;
    regions_.emplace(rec.info.handle, rec);
    return rec.info;
}

void Kernel::unmap_io_space(RegionHandle handle) {
    require_running();
    auto it = regions_.find(handle);
    if (it == regions_.end() || it->second.info.released) {
        throw Error(Errc::InvalidRegion, "region " + std::to_string(handle.value) + " is not mapped");
    }
    it->second.info.released = true;
}

std::uint64_t Kernel::region_access(RegionHandle handle, std::uint64_t offset, unsigned width, AccessKind kind,
                                    std::uint64_t value) {
    require_running();
    auto it = regions_.find(handle);
    if (it == regions_.end()) {
        throw Error(Errc::InvalidRegion, "unknown region " + std::to_string(handle.value));
    }
    const auto& rec = it->second;
    const std::uint64_t address = rec.info.phys_base + offset;
    if (rec.info.released) {
        raise({BugcheckCode::AccessAfterRelease, "access to released region at " + hex(rec.info.phys_base), {},
               irql_, address});
    }
    if (width != 1 && width != 2 && width != 4 && width != 8) {
        raise({BugcheckCode::OutOfBoundsAccess, "unsupported access width " + std::to_string(width), {}, irql_,
               address});
    }
    if (offset > rec.info.length || width > rec.info.length - offset) {
        raise({BugcheckCode::OutOfBoundsAccess,
               "access [" + hex(offset) + ", +" + std::to_string(width) + ") crosses region of " +
                   std::to_string(rec.info.length) + " bytes",
               {}, irql_, address});
    }
    ++access_count_;
    try {
        if (kind == AccessKind::Read) {
            return rec.target->mmio_read(rec.bar, rec.bar_offset + offset, width);
        }
        rec.target->mmio_write(rec.bar, rec.bar_offset + offset, width, value);
        return 0;
    } catch (const Error& e) {
        raise({BugcheckCode::OutOfBoundsAccess, std::string("device rejected access: ") + e.what(), {}, irql_,
               address});
    }
}

std::optional<Bugcheck> Kernel::run_guarded(const RoutineAttributes& routine, Irql irql,
                                            const std::function<void()>& body) {
    require_running();
    if (routine.pageable && irql >= Irql::Dispatch) {
        Bugcheck check{BugcheckCode::PagedCodeAtElevatedIrql,
                       "pageable routine " + routine.name + " invoked at " + std::string(to_string(irql)),
                       routine.name, irql, std::nullopt};
        bugcheck_ = check;
        ++bugcheck_count_;
        return check;
    }
    const Irql saved_irql = irql_;
    std::string saved_routine = std::move(current_routine_);
    irql_ = irql;
    current_routine_ = routine.name;
    auto restore = [&] {
        irql_ = saved_irql;
        current_routine_ = std::move(saved_routine);
    };
    try {
        body();
    } catch (const BugcheckRaised& e) {
        restore();
        return e.bugcheck();
    } catch (...) {
        restore();
        throw;
    }
    restore();
    return std::nullopt;
}

void Kernel::record_leak(const IoRegion& region) {
    const bool known = std::any_of(leaks_.begin(), leaks_.end(),
                                   [&](const LeakEntry& e) { return e.region.handle == region.handle; });
    if (!known) {
        leaks_.push_back({region.device, region});
    }
}

std::vector<IoRegion> Kernel::audit_teardown(const DeviceId& device) {
    auto live = live_regions(device);
    for (const auto& region : live) {
        record_leak(region);
    }
    return live;
}

std::size_t Kernel::release_all(const DeviceId& device) {
    require_running();
    std::size_t released = 0;
    for (auto& [handle, rec] : regions_) {
        if (rec.info.device == device && !rec.info.released) {
            rec.info.released = true;
            ++released;
        }
    }
    return released;
}

std::vector<LeakEntry> Kernel::leak_report() const { return leaks_; }

std::vector<IoRegion> Kernel::live_regions(const DeviceId& device) const {
    std::vector<IoRegion> out;
    for (const auto& [handle, rec] : regions_) {
        if (rec.info.device == device && !rec.info.released) {
            out.push_back(rec.info);
        }
    }
    return out;
}

std::optional<IoRegion> Kernel::region(RegionHandle handle) const {
    auto it = regions_.find(handle);
    if (it == regions_.end()) {
        return std::nullopt;
    }
    return it->second.info;
}

} // namespace spw::kernel
