#include <doctest.h>

#include <fstream>
#include <sstream>

#include "spw/wdf/framework.hpp"
#include "spw/wdf/manifest.hpp"
#include "support/oracles.hpp"

using namespace spw;
using namespace spw::wdf;

namespace {

template <class F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected spw::Error");
    return Errc::NotFound;
}

class Nop final : public kernel::MmioTarget {
public:
    std::uint64_t mmio_read(unsigned, std::uint64_t, unsigned) override { return 0; }
    void mmio_write(unsigned, std::uint64_t, unsigned, std::uint64_t) override {}
};

kernel::DeviceDescriptor descriptor(const std::string& id, std::uint64_t base = 0xD2100000) {
    return {id, "PCI\\TEST", {{0, base, 4096}}, std::make_shared<Nop>()};
}

// Minimal well-behaved driver: maps BAR0 in prepare, unmaps in release,
// one IoControl queue that echoes the control code.
struct ToyDriver {
    kernel::Kernel& kernel;
    Framework& fw;
    ioctl::Guid guid = ioctl::Guid::generate(1);
    bool leak = false;
    bool pageable_io = false;
    std::map<kernel::DeviceId, kernel::RegionHandle> regions;
    std::vector<std::uint32_t> seen_codes;
    int entry_calls = 0;
    int per_device_guid = 0;

    DriverCallbacks callbacks() {
        DriverCallbacks cb;
        cb.driver_entry = [this] { ++entry_calls; };
        cb.evt_device_add = [this](Device& d) {
            fw.create_queue(d, QueueKind::IoControl, kernel::Irql::Dispatch);
            fw.register_device_interface(d, ioctl::Guid::generate(1000 + per_device_guid++));
            return NtStatus::Success;
        };
        cb.evt_prepare_hardware = [this](Device& d, std::span<const kernel::BarAssignment> res) {
            if (res.empty()) return NtStatus::DeviceConfigurationError;
            try {
                regions[d.id()] = kernel.map_io_space(d.id(), res[0].phys_base, res[0].length).handle;
            } catch (const Error&) {
                return NtStatus::DeviceConfigurationError;
            }
            return NtStatus::Success;
        };
        cb.evt_release_hardware = [this](Device& d) {
            if (!leak) kernel.unmap_io_space(regions.at(d.id()));
            return NtStatus::Success;
        };
        cb.evt_io_device_control = [this](Device&, const IoRequest& r) {
            seen_codes.push_back(r.ctl_code);
            return IoResponse{NtStatus::Success, ioctl::encode_response(ioctl::reply::PortMask{r.ctl_code}), 0};
        };
        cb.attributes.io_device_control.pageable = pageable_io;
        return cb;
    }
};

struct Rig {
    kernel::Kernel kernel;
    Framework fw{kernel};
    ToyDriver driver{kernel, fw};
};

const CallbackTrace kArrival{"evt_device_add", "evt_prepare_hardware"};
const CallbackTrace kRemoval{"evt_release_hardware"};

} // namespace

TEST_CASE("register_driver runs driver_entry once per registration") {
    Rig rig;
    auto h1 = rig.fw.register_driver(rig.driver.callbacks());
    CHECK(rig.driver.entry_calls == 1);
    auto h2 = rig.fw.register_driver(rig.driver.callbacks());
    CHECK(rig.driver.entry_calls == 2);
    CHECK_FALSE(h1 == h2);
    CHECK(rig.fw.driver_count() == 2);
    CHECK(rig.fw.trace() == CallbackTrace{"driver_entry", "driver_entry"});
}

TEST_CASE("register_driver requires the lifecycle callbacks") {
    Rig rig;
    auto cb = rig.driver.callbacks();
    cb.evt_device_add = nullptr;
    CHECK(error_of([&] { rig.fw.register_driver(cb); }) == Errc::MissingCallback);
    cb = rig.driver.callbacks();
    cb.evt_prepare_hardware = nullptr;
    CHECK(error_of([&] { rig.fw.register_driver(cb); }) == Errc::MissingCallback);
    cb = rig.driver.callbacks();
    cb.evt_release_hardware = nullptr;
    CHECK(error_of([&] { rig.fw.register_driver(cb); }) == Errc::MissingCallback);
    CHECK(rig.fw.driver_count() == 0);
}

TEST_CASE("an IoControl queue needs an IoControl handler") {
    Rig rig;
    auto cb = rig.driver.callbacks();
    cb.evt_io_device_control = nullptr;
    rig.fw.register_driver(cb);
    CHECK(error_of([&] { rig.kernel.plug_device(descriptor("d")); }) == Errc::MissingCallback);
}

TEST_CASE("plug and unplug drive the lifecycle") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    CHECK(rig.fw.state("d") == LifecycleState::Absent);

    // Resources the kernel never assigned: prepare fails, nothing to release.
    CHECK(rig.fw.on_pnp_event(kernel::DeviceArrival{"x", "PCI\\TEST", {{0, 1, 1}}}) == kArrival);
    CHECK(rig.fw.state("x") == LifecycleState::Added);
    CHECK(rig.fw.on_pnp_event(kernel::DeviceRemoval{"x"}).empty());

    auto before = rig.fw.trace().size();
    rig.kernel.plug_device(descriptor("d"));
    CHECK(rig.fw.state("d") == LifecycleState::Started);
    CHECK(CallbackTrace(rig.fw.trace().begin() + static_cast<std::ptrdiff_t>(before), rig.fw.trace().end()) == kArrival);

    before = rig.fw.trace().size();
    rig.kernel.unplug_device("d");
    CHECK(rig.fw.state("d") == LifecycleState::Removed);
    CHECK(CallbackTrace(rig.fw.trace().begin() + static_cast<std::ptrdiff_t>(before), rig.fw.trace().end()) == kRemoval);
    CHECK(rig.kernel.leak_report().empty());

    rig.fw.cleanup("d");
    CHECK(rig.fw.state("d") == LifecycleState::Absent);
}

TEST_CASE("on_pnp_event returns the callbacks it invoked") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    CHECK(rig.fw.on_pnp_event(kernel::DeviceArrival{"x", "PCI\\TEST", {}}) == kArrival);
}

TEST_CASE("illegal transitions") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    CHECK(error_of([&] { rig.fw.on_pnp_event(kernel::DeviceRemoval{"d"}); }) == Errc::IllegalTransition);
    rig.kernel.plug_device(descriptor("d"));
    CHECK(error_of([&] { rig.fw.cleanup("d"); }) == Errc::IllegalTransition);
    CHECK(error_of([&] { rig.fw.on_pnp_event(kernel::DeviceArrival{"d", "PCI\\TEST", {}}); }) ==
          Errc::IllegalTransition);
    rig.kernel.unplug_device("d");
    CHECK(error_of([&] { rig.fw.on_pnp_event(kernel::DeviceRemoval{"d"}); }) == Errc::IllegalTransition);
}

TEST_CASE("arrivals for foreign hardware are ignored") {
    Rig rig;
    auto cb = rig.driver.callbacks();
    cb.hardware_id = "PCI\\OTHER";
    rig.fw.register_driver(cb);
    rig.kernel.plug_device(descriptor("d"));
    CHECK(rig.fw.state("d") == LifecycleState::Absent);
}

TEST_CASE("failed prepare leaves the device Added and skips release") {
    Rig rig;
    auto cb = rig.driver.callbacks();
    cb.evt_prepare_hardware = [](Device&, std::span<const kernel::BarAssignment>) {
        return NtStatus::DeviceConfigurationError;
    };
    rig.fw.register_driver(cb);
    rig.kernel.plug_device(descriptor("d"));
    CHECK(rig.fw.state("d") == LifecycleState::Added);
    CHECK(error_of([&] { rig.fw.dispatch_request("d", {}); }) == Errc::DeviceNotStarted);
    const auto before = rig.fw.trace().size();
    rig.kernel.unplug_device("d");
    CHECK(rig.fw.trace().size() == before);
    CHECK(rig.fw.state("d") == LifecycleState::Removed);
}

TEST_CASE("lifecycle trace over 100 random plug/unplug cycles") {
    auto rng = gen::rng(30);
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    CallbackTrace expected{"driver_entry"};
    bool plugged = false;
    int cycles = 0;
    while (cycles < 100) {
        if (!plugged) {
            rig.kernel.plug_device(descriptor("d"));
            expected.insert(expected.end(), kArrival.begin(), kArrival.end());
            CHECK(rig.fw.state("d") == LifecycleState::Started);
            plugged = true;
        } else if (gen::uniform(rng, 0, 2) == 0) {
            // Some IO in between: must not disturb the lifecycle trace shape.
            rig.fw.dispatch_request("d", {QueueKind::IoControl, 0x80002014, {}, 64});
            expected.push_back("evt_io_device_control");
        } else {
            rig.kernel.unplug_device("d");
            expected.insert(expected.end(), kRemoval.begin(), kRemoval.end());
            CHECK(rig.fw.state("d") == LifecycleState::Removed);
            plugged = false;
            ++cycles;
            if (gen::uniform(rng, 0, 1) == 0) rig.fw.cleanup("d");
        }
    }
    CHECK(rig.fw.trace() == expected);
    CHECK(rig.driver.entry_calls == 1);
    CHECK(rig.kernel.leak_report().empty());
}

TEST_CASE("queues") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    rig.kernel.plug_device(descriptor("d"));
    Device* dev = rig.fw.find_device("d");
    REQUIRE(dev != nullptr);
    CHECK(error_of([&] { rig.fw.create_queue(*dev, QueueKind::IoControl, kernel::Irql::Passive); }) ==
          Errc::DuplicateQueueKind);

    auto resp = rig.fw.dispatch_request("d", {QueueKind::IoControl, 0x80002014, {}, 64});
    CHECK(resp.status == NtStatus::Success);
    CHECK(resp.bytes_returned == 4);
    CHECK(rig.driver.seen_codes == std::vector<std::uint32_t>{0x80002014});

    rig.fw.create_queue(*dev, QueueKind::Read, kernel::Irql::Passive);
    // Read queue exists but has no handler: the request is completed as unsupported.
    CHECK(rig.fw.dispatch_request("d", {QueueKind::Read, 0, {}, 64}).status == NtStatus::NotSupported);
    CHECK(error_of([&] { rig.fw.dispatch_request("d", {QueueKind::Write, 0, {}, 64}); }) == Errc::NoQueueForRequest);
    CHECK(rig.driver.seen_codes.size() == 1);
}

TEST_CASE("a Read-only device does not route IoControl requests") {
    Rig rig;
    auto cb = rig.driver.callbacks();
    cb.evt_device_add = [&](Device& d) {
        rig.fw.create_queue(d, QueueKind::Read, kernel::Irql::Passive);
        return NtStatus::Success;
    };
    rig.fw.register_driver(cb);
    rig.kernel.plug_device(descriptor("d"));
    CHECK(error_of([&] { rig.fw.dispatch_request("d", {QueueKind::IoControl, 0, {}, 64}); }) ==
          Errc::NoQueueForRequest);
}

TEST_CASE("requests are served in FIFO order") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    rig.kernel.plug_device(descriptor("d"));
    for (std::uint32_t code = 1; code <= 20; ++code) rig.fw.dispatch_request("d", {QueueKind::IoControl, code, {}, 64});
    std::vector<std::uint32_t> expected;
    for (std::uint32_t code = 1; code <= 20; ++code) expected.push_back(code);
    CHECK(rig.driver.seen_codes == expected);
}

TEST_CASE("dispatch before arrival and after removal") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    CHECK(error_of([&] { rig.fw.dispatch_request("d", {}); }) == Errc::DeviceNotStarted);
    rig.kernel.plug_device(descriptor("d"));
    rig.kernel.unplug_device("d");
    CHECK(error_of([&] { rig.fw.dispatch_request("d", {}); }) == Errc::DeviceNotStarted);
    CHECK(rig.driver.seen_codes.empty());
}

TEST_CASE("output larger than the caller's buffer") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    rig.kernel.plug_device(descriptor("d"));
    auto resp = rig.fw.dispatch_request("d", {QueueKind::IoControl, 1, {}, 2});
    CHECK(resp.status == NtStatus::BufferTooSmall);
    CHECK(resp.bytes_returned == 0);
}

TEST_CASE("pageable IoControl handler at Dispatch halts the kernel") {
    Rig rig;
    rig.driver.pageable_io = true;
    rig.fw.register_driver(rig.driver.callbacks());
    rig.kernel.plug_device(descriptor("d"));
    CHECK(error_of([&] { rig.fw.dispatch_request("d", {QueueKind::IoControl, 1, {}, 64}); }) == Errc::KernelHalted);
    REQUIRE(rig.kernel.bugcheck().has_value());
    CHECK(rig.kernel.bugcheck()->code == kernel::BugcheckCode::PagedCodeAtElevatedIrql);
    CHECK(rig.kernel.bugcheck_count() == 1);
    CHECK(rig.driver.seen_codes.empty());
}

TEST_CASE("leaky release is recorded, then cleaned up by the framework") {
    Rig rig;
    rig.driver.leak = true;
    rig.fw.register_driver(rig.driver.callbacks());
    rig.kernel.plug_device(descriptor("d"));
    rig.kernel.unplug_device("d");
    REQUIRE(rig.kernel.leak_report().size() == 1);
    CHECK(rig.kernel.live_regions("d").empty());
    // The cleaned-up range can be mapped again by the next arrival.
    rig.driver.leak = false;
    rig.kernel.plug_device(descriptor("d"));
    CHECK(rig.fw.state("d") == LifecycleState::Started);
}

TEST_CASE("interface directory") {
    Rig rig;
    rig.fw.register_driver(rig.driver.callbacks());
    rig.kernel.plug_device(descriptor("a", 0x1000));
    rig.kernel.plug_device(descriptor("b", 0x9000));
    const auto ga = ioctl::Guid::generate(1000);
    const auto gb = ioctl::Guid::generate(1001);
    const auto pa = rig.fw.lookup_interface(ga);
    const auto pb = rig.fw.lookup_interface(gb);
    CHECK(pa == "\\\\interface\\{" + ga.to_string() + "}\\0");
    CHECK(pa != pb);
    CHECK(rig.fw.open_interface(pa) == "a");
    CHECK(rig.fw.open_interface(pb) == "b");
    CHECK(error_of([&] { rig.fw.lookup_interface(ioctl::Guid::generate(5)); }) == Errc::NotFound);
    CHECK(error_of([&] { rig.fw.register_device_interface(*rig.fw.find_device("b"), ga); }) ==
          Errc::DuplicateInterface);

    rig.kernel.unplug_device("a");
    CHECK(error_of([&] { rig.fw.lookup_interface(ga); }) == Errc::NotFound);
    CHECK(error_of([&] { rig.fw.open_interface(pa); }) == Errc::NotFound);
    CHECK(rig.fw.lookup_interface(gb) == pb);
}

TEST_CASE("interface directory property over random GUID sets") {
    auto rng = gen::rng(31);
    for (int round = 0; round < 20; ++round) {
        kernel::Kernel k;
        Framework fw(k);
        DriverCallbacks cb;
        cb.evt_device_add = [](Device&) { return NtStatus::Success; };
        cb.evt_prepare_hardware = [](Device&, std::span<const kernel::BarAssignment>) { return NtStatus::Success; };
        cb.evt_release_hardware = [](Device&) { return NtStatus::Success; };
        fw.register_driver(cb);
        std::map<ioctl::Guid, std::string> registered;
        const int n = gen::uniform(rng, 1, 12);
        for (int i = 0; i < n; ++i) {
            const std::string id = "dev" + std::to_string(i);
            k.plug_device(descriptor(id, 0x10000 * static_cast<std::uint64_t>(i + 1)));
            const auto g = ioctl::Guid::generate(gen::uniform<std::uint64_t>(rng, 0, ~0ULL));
            registered[g] = fw.register_device_interface(*fw.find_device(id), g);
        }
        for (const auto& [g, path] : registered) {
            CHECK(fw.lookup_interface(g) == path);
        }
    }
}

TEST_CASE("install manifest") {
    const std::string doc = "; comment\n[Version]\nClass=Multifunction\nProvider=HIT\n"
                            "DriverVer=06/01/2014,1.0.0.0 ; trailing\n\n[Interface]\n"
                            "Guid={5d9c1d8e-4f3a-4b7e-9c2a-53505743a001}\n";
    const auto m = parse_install_manifest(doc);
    CHECK(m.device_class == "Multifunction");
    CHECK(m.provider == "HIT");
    CHECK(m.driver_version.month == 6);
    CHECK(m.driver_version.day == 1);
    CHECK(m.driver_version.year == 2014);
    CHECK(m.driver_version.version == std::array<std::uint16_t, 4>{1, 0, 0, 0});
    CHECK(m.interface_guid.to_string() == "5d9c1d8e-4f3a-4b7e-9c2a-53505743a001");

    CHECK(parse_install_manifest(serialize_install_manifest(m)) == m);

    CHECK(error_of([] { parse_install_manifest("[Interface]\nGuid=5d9c1d8e-4f3a-4b7e-9c2a-53505743a001\n"); }) ==
          Errc::MissingSection);
    CHECK(error_of([] { parse_install_manifest("[Version]\nClass=X\nProvider=Y\nDriverVer=1.0\n[Interface]\nGuid=5d9c1d8e-4f3a-4b7e-9c2a-53505743a001\n"); }) ==
          Errc::BadVersionFormat);
    CHECK(error_of([] { parse_install_manifest("[Version]\nProvider=Y\nDriverVer=06/01/2014,1.0.0.0\n[Interface]\nGuid=5d9c1d8e-4f3a-4b7e-9c2a-53505743a001\n"); }) ==
          Errc::MissingKey);
    CHECK(error_of([] { parse_install_manifest("[Version]\nClass=X\nProvider=Y\nDriverVer=06/01/2014,1.0.0.0\n[Interface]\nGuid=zz\n"); }) ==
          Errc::BadGuid);
}

TEST_CASE("shipped manifest parses") {
    std::ifstream in(SPW_CONFIG_DIR "/spw_pcie.inf");
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto m = parse_install_manifest(ss.str());
    CHECK(m.device_class == "Multifunction");
    CHECK(m.driver_version.to_string() == "06/01/2014,1.0.0.0");
}

TEST_CASE("driver version format guard") {
    for (const char* bad : {"1.0", "06/01/2014", "06/01/2014,1.0.0", "13/01/2014,1.0.0.0", "06/32/2014,1.0.0.0",
                            "6/1/14,1.0.0.0", "06/01/2014,1.0.0.70000", "06/01/2014,a.b.c.d"}) {
        CHECK_MESSAGE(error_of([&] { DriverVersion::parse(bad); }) == Errc::BadVersionFormat, bad);
    }
    CHECK(DriverVersion::parse("6/1/2014,1.2.3.4").to_string() == "06/01/2014,1.2.3.4");
}

TEST_CASE("manifest round trip over random manifests") {
    auto rng = gen::rng(32);
    const std::string alphabet = "abcXYZ019 _-.;\"";
    for (int i = 0; i < 500; ++i) {
        InstallManifest m;
        auto word = [&] {
            std::string s;
            const int n = gen::uniform(rng, 1, 12);
            for (int j = 0; j < n; ++j) s += alphabet[gen::uniform<std::size_t>(rng, 0, alphabet.size() - 1)];
            return s;
        };
        m.device_class = word();
        m.provider = word();
        m.driver_version.month = gen::uniform(rng, 1u, 12u);
        m.driver_version.day = gen::uniform(rng, 1u, 28u);
        m.driver_version.year = gen::uniform(rng, 1990u, 2099u);
        for (auto& v : m.driver_version.version) v = gen::uniform<std::uint16_t>(rng, 0, 0xFFFF);
        m.interface_guid = ioctl::Guid::generate(static_cast<std::uint64_t>(i));
        const auto text = serialize_install_manifest(m);
        InstallManifest back;
        try {
            back = parse_install_manifest(text);
        } catch (const Error& e) {
            FAIL_CHECK("re-parse failed: " << e.what() << "\n" << text);
            continue;
        }
        CHECK_MESSAGE(back == m, text);
    }
}
