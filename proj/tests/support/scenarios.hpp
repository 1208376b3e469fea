#pragma once

// End-to-end scenarios shared by the integration tests and the acceptance
// binary. Each returns plain data; callers decide what to assert.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "spw/device/card.hpp"
#include "spw/driver/spw_driver.hpp"
#include "spw/service/api_router.hpp"
#include "spw/service/command_channel.hpp"
#include "support/oracles.hpp"

namespace scenario {

struct DeterminismRun {
    std::vector<std::uint8_t> fifo;      // BAR2 contents up to FIFO_LEVEL, before acquire
    std::vector<std::uint8_t> acquired;  // AcquireData output
    std::vector<std::string> api_trace;
    std::vector<spw::svc::IoctlTraceEntry> ioctl_trace;
};

// enable, tick 100, inject, tick 100, acquire; all through the HTTP router.
inline DeterminismRun determinism_run(std::int32_t x = -1000, std::int32_t y = 0, std::int32_t z = 0) {
    using nlohmann::json;
    using namespace spw::svc;
    SampleBus bus;
    CommandChannel channel(std::make_unique<ControlService>(ServiceConfig{}), &bus);
    ApiRouter router(channel, true);
    router.handle("POST", "/api/links/1/enable", "");
    router.handle("POST", "/api/links/3/enable", "");
    router.handle("POST", "/api/tick", json{{"n", 100}}.dump());
    router.handle("POST", "/api/inject", json{{"x", x}, {"y", y}, {"z", z}}.dump());
    router.handle("POST", "/api/tick", json{{"n", 100}}.dump());

    DeterminismRun run;
    run.fifo = channel.call([](ControlService& svc) {
        auto& card = svc.simulation().card();
        std::vector<std::uint8_t> bytes;
        for (std::uint32_t i = 0; i < card.fifo_level(); ++i) {
            bytes.push_back(static_cast<std::uint8_t>(card.mmio_read(2, i, 1)));
        }
        return bytes;
    });
    const auto acquired = router.handle("POST", "/api/acquire", "");
    run.acquired = from_hex(acquired.body.value("frames", std::string{}));
    run.api_trace = router.trace();
    run.ioctl_trace = channel.call([](ControlService& svc) { return svc.simulation().ioctl_trace(); });
    return run;
}

struct LifecycleStep {
    std::string callback;
    spw::wdf::LifecycleState state_at_entry;
    friend bool operator==(const LifecycleStep&, const LifecycleStep&) = default;
};

struct LifecycleRun {
    std::vector<LifecycleStep> observed;
    std::vector<LifecycleStep> expected;
    std::vector<std::string> framework_trace;
    std::vector<std::string> expected_trace;
    std::vector<std::string> failures;  // state or result mismatches seen on the way
    std::size_t bugchecks = 0;
    std::size_t leaks = 0;
};

// `cycles` plug/unplug cycles of the real driver with random BAR bases and
// random IO while the card is present. Callback entries are recorded with
// the lifecycle state the framework holds when each one runs.
inline LifecycleRun lifecycle_cycles(int cycles, std::uint64_t salt) {
    using namespace spw;
    using wdf::LifecycleState;
    LifecycleRun run;
    kernel::Kernel k;
    wdf::Framework fw(k);
    drv::SpwDriver driver(fw, {ioctl::Guid::generate(salt)});

    auto cb = driver.callbacks();
    auto record = [&](const char* name, wdf::Device& d) { run.observed.push_back({name, d.state()}); };
    auto add = cb.evt_device_add;
    auto prepare = cb.evt_prepare_hardware;
    auto release = cb.evt_release_hardware;
    auto io = cb.evt_io_device_control;
    cb.evt_device_add = [&, add](wdf::Device& d) { record("evt_device_add", d); return add(d); };
    cb.evt_prepare_hardware = [&, prepare](wdf::Device& d, std::span<const kernel::BarAssignment> r) {
        record("evt_prepare_hardware", d);
        return prepare(d, r);
    };
    cb.evt_release_hardware = [&, release](wdf::Device& d) { record("evt_release_hardware", d); return release(d); };
    cb.evt_io_device_control = [&, io](wdf::Device& d, const wdf::IoRequest& r) {
        record("evt_io_device_control", d);
        return io(d, r);
    };
    fw.register_driver(cb);
    run.expected_trace.push_back("driver_entry");

    auto rng = gen::rng(salt);
    const std::string id = "PCI\\VEN_10EE&DEV_7021\\7";
    auto expect = [&](const char* name, LifecycleState s) {
        run.expected.push_back({name, s});
        run.expected_trace.push_back(name);
    };
    auto check_state = [&](LifecycleState want, const std::string& where) {
        if (fw.state(id) != want) run.failures.push_back(where + ": state " + std::string(wdf::to_string(fw.state(id))));
    };

    for (int c = 0; c < cycles; ++c) {
        const std::uint64_t bar0 = 0xD0000000ULL + 0x1000ULL * gen::uniform(rng, 0u, 0xFFFu);
        const std::uint64_t bar2 = 0xC0000000ULL + 0x10000ULL * gen::uniform(rng, 0u, 0xFFu);
        k.plug_device({id, drv::kHardwareId, {{0, bar0, 4096}, {2, bar2, 65536}}, std::make_shared<dev::Card>()});
        // A replug finds the previous device Removed; a first plug finds none.
        expect("evt_device_add", LifecycleState::Absent);
        expect("evt_prepare_hardware", LifecycleState::Added);
        check_state(LifecycleState::Started, "after plug " + std::to_string(c));

        const int ios = gen::uniform(rng, 0, 3);
        for (int i = 0; i < ios; ++i) {
            const auto enc = ioctl::encode_command(ioctl::cmd::GetBar0Addr{});
            const auto r = fw.dispatch_request(id, {wdf::QueueKind::IoControl, enc.ctl_code, enc.input, 64});
            expect("evt_io_device_control", LifecycleState::Started);
            if (r.status != wdf::NtStatus::Success || oracle::from_le(r.output) != bar0) {
                run.failures.push_back("GetBar0Addr in cycle " + std::to_string(c));
            }
        }

        k.unplug_device(id);
        expect("evt_release_hardware", LifecycleState::Started);
        check_state(LifecycleState::Removed, "after unplug " + std::to_string(c));
        if (!k.live_regions(id).empty()) run.failures.push_back("regions left after cycle " + std::to_string(c));
    }
    if (driver.driver_entry_calls() != 1) run.failures.push_back("driver_entry ran more than once");
    run.framework_trace = fw.trace();
    run.bugchecks = k.bugcheck_count();
    run.leaks = k.leak_report().size();
    return run;
}

} // namespace scenario
