#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spw/service/cli.hpp"
#include "spw/service/control_service.hpp"
#include "support/oracles.hpp"

using namespace spw;
using namespace spw::svc;

namespace {

struct CliRun {
    int rc = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args, CliBackend* backend = nullptr, const std::string& input = {}) {
    std::ostringstream out;
    std::ostringstream err;
    std::istringstream in(input);
    CliRun r;
    r.rc = run_cli(args, out, err, &in, backend);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

} // namespace

TEST_CASE("config: defaults and the shipped file agree") {
    const auto shipped = ServiceConfig::load(std::filesystem::path(SPW_CONFIG_DIR) / "spw.conf");
    const ServiceConfig defaults;
    CHECK(shipped.bar0_base == 0xD2100000);
    CHECK(shipped.bar2_base == defaults.bar2_base);
    CHECK(shipped.guid == defaults.guid);
    CHECK(shipped.sample_period == 10);
    CHECK(shipped.listen_host == "127.0.0.1");
    CHECK(shipped.listen_port == 8080);
    CHECK_FALSE(shipped.auto_tick);
    CHECK(shipped.topology.router_ports == defaults.topology.router_ports);
}

TEST_CASE("config: parse values, comments and a topology file") {
    const auto cfg = ServiceConfig::parse("# comment\n"
                                          "bar0_base = 0xE0000000\n"
                                          "\n"
                                          "sample_period=25\n"
                                          "auto_tick=on\n"
                                          "listen=0.0.0.0:9000\n"
                                          "topology=topology_port2.txt\n",
                                          SPW_CONFIG_DIR);
    CHECK(cfg.bar0_base == 0xE0000000);
    CHECK(cfg.sample_period == 25);
    CHECK(cfg.auto_tick);
    CHECK(cfg.listen_host == "0.0.0.0");
    CHECK(cfg.listen_port == 9000);
    CHECK(cfg.topology.router_ports == 4);
    CHECK(cfg.topology_source.find("topology_port2.txt") != std::string::npos);
}

TEST_CASE("config: errors are BadConfig") {
    auto code = [](std::string_view text) {
        try {
            ServiceConfig::parse(text);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::NotFound;
    };
    for (std::string_view bad : {"colour=blue", "bar0_base", "bar0_base=zz", "guid=nope", "listen=localhost",
                                 "listen=h:70000", "auto_tick=maybe", "bar0_length=16", "topology=/no/such/file"}) {
        CHECK_MESSAGE(code(bad) == Errc::BadConfig, bad);
    }
    CHECK_THROWS_AS(ServiceConfig::load("/no/such/spw.conf"), Error);
}

TEST_CASE("config: SPW_CONFIG selects the file") {
    const auto path = temp_file("spw_env_test.conf", "bar0_base=0xC0000000\n");
    ::setenv(std::string(kConfigEnv).c_str(), path.c_str(), 1);
    CHECK(ServiceConfig::from_environment().bar0_base == 0xC0000000);
    const auto r = cli({"bar0"});
    CHECK(r.out == "BAR0 physical address: 0xC0000000\n");
    ::unsetenv(std::string(kConfigEnv).c_str());
    CHECK(ServiceConfig::from_environment().bar0_base == 0xD2100000);
}

TEST_CASE("open_device by GUID") {
    ControlService svc{ServiceConfig{}};
    auto h = svc.open_device(ServiceConfig{}.guid);
    CHECK(h.open);
    CHECK(h.interface_path == svc.simulation().framework().lookup_interface(ServiceConfig{}.guid));

    auto rng = gen::rng(50);
    for (int i = 0; i < 100; ++i) {
        const auto g = ioctl::Guid::generate(rng());
        if (g == ServiceConfig{}.guid) continue;
        try {
            svc.open_device(g);
            FAIL("opened an unregistered GUID");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NotFound);
        }
    }

    ControlService::close_device(h);
    CHECK_FALSE(h.open);
    try {
        svc.device_io_control(h, ioctl::cmd::GetBar0Addr{});
        FAIL("closed handle accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::HandleClosed);
    }
    h = svc.open_device(ServiceConfig{}.guid);
    CHECK(svc.device_io_control(h, ioctl::cmd::GetBar0Addr{}).success);
}

TEST_CASE("an unplugged device is not found and comes back after replug") {
    ControlService svc{ServiceConfig{}};
    auto h = svc.open_device(ServiceConfig{}.guid);
    svc.simulation().unplug();
    CHECK_THROWS_AS(svc.open_device(ServiceConfig{}.guid), Error);
    auto r = svc.device_io_control(h, ioctl::cmd::GetBar0Addr{});
    CHECK_FALSE(r.success);
    CHECK(r.reason == "NotFound");
    CHECK_FALSE(svc.execute(ioctl::cmd::GetBar0Addr{}).success);
    svc.simulation().plug();
    auto again = svc.execute(ioctl::cmd::GetBar0Addr{});
    REQUIRE(again.success);
    CHECK(std::get<ioctl::reply::Bar0Addr>(*again.payload).phys == 0xD2100000);
}

TEST_CASE("command results") {
    ControlService svc{ServiceConfig{}};
    auto w = svc.execute(ioctl::cmd::WriteReg{0x100, 4, oracle::le_bytes(2222, 4)});
    REQUIRE(w.success);
    CHECK(w.command == "WriteReg");
    CHECK(w.reason.empty());
    CHECK(std::get<ioctl::reply::Written>(*w.payload).count == 4);
    auto r = svc.execute(ioctl::cmd::ReadReg{0x100, 4});
    REQUIRE(r.success);
    CHECK(std::get<ioctl::reply::RegData>(*r.payload).value() == 2222);
    CHECK(std::get<ioctl::reply::RegData>(*r.payload).bytes.size() == 4);

    auto bad = svc.execute(ioctl::cmd::ReadReg{0x100, 3});
    CHECK_FALSE(bad.success);
    CHECK(bad.status == wdf::NtStatus::InvalidParameter);
    CHECK(bad.reason == "InvalidParameter");
    CHECK_FALSE(bad.payload.has_value());

    auto outside = svc.execute(ioctl::cmd::ReadReg{0x2000, 4});
    CHECK_FALSE(outside.success);
    CHECK(outside.reason == "InvalidParameter");
    CHECK_FALSE(svc.simulation().kernel().halted());
}

TEST_CASE("a failing command does not disturb the next ones") {
    ControlService svc{ServiceConfig{}};
    auto rng = gen::rng(51);
    for (int round = 0; round < 20; ++round) {
        auto bad = svc.execute(ioctl::cmd::ReadReg{0x100, 3});
        CHECK_FALSE(bad.success);
        for (int i = 0; i < 100; ++i) {
            const auto v = gen::uniform(rng, 0u, 0xFFFFFFFFu);
            REQUIRE(svc.execute(ioctl::cmd::WriteReg{0x100, 4, oracle::le_bytes(v, 4)}).success);
            auto r = svc.execute(ioctl::cmd::ReadReg{0x100, 4});
            REQUIRE(r.success);
            REQUIRE(std::get<ioctl::reply::RegData>(*r.payload).value() == v);
        }
    }
}

TEST_CASE("command duration is measured in ticks and is zero for register IO") {
    ControlService svc{ServiceConfig{}};
    svc.tick(17);
    auto r = svc.execute(ioctl::cmd::PortDiscovery{});
    CHECK(r.duration_ticks == 0);
    CHECK(svc.simulation().now() == 17);
}

TEST_CASE("device_info") {
    ControlService svc{ServiceConfig{}};
    auto info = svc.device_info();
    CHECK(info.bar0_phys == 0xD2100000);
    CHECK(info.lifecycle == wdf::LifecycleState::Started);
    CHECK_FALSE(info.interface_path.empty());
    svc.simulation().unplug();
    info = svc.device_info();
    CHECK(info.lifecycle == wdf::LifecycleState::Removed);
    CHECK(info.bar0_phys == 0);
    CHECK(info.interface_path.empty());
}

TEST_CASE("access audit: every region access comes from a dispatched request") {
    ControlService svc{ServiceConfig{}};
    auto& sim = svc.simulation();
    const auto baseline = sim.kernel().region_access_count();
    CHECK(baseline == 0);
    auto rng = gen::rng(52);
    for (int i = 0; i < 2000; ++i) {
        switch (gen::uniform(rng, 0, 5)) {
        case 0: svc.execute(ioctl::cmd::ReadReg{gen::uniform(rng, 0u, 0x110u) & ~3u, 4}); break;
        case 1: svc.execute(ioctl::cmd::WriteReg{0x100, 4, oracle::le_bytes(i, 4)}); break;
        case 2: svc.execute(ioctl::cmd::LinkEnable{gen::uniform(rng, 1u, 3u)}); break;
        case 3: svc.execute(ioctl::cmd::PortDiscovery{}); break;
        case 4: svc.execute(ioctl::cmd::AcquireData{gen::uniform(rng, 0u, 512u)}); break;
        default: svc.tick(gen::uniform(rng, 1u, 20u)); break;
        }
    }
    svc.device_info();
    CHECK(sim.kernel().region_access_count() > 0);
    CHECK(sim.kernel().region_access_count() == sim.dispatch_access_count());
}

TEST_CASE("cli: walkthrough strings") {
    CHECK(cli({"bar0"}).out == "BAR0 physical address: 0xD2100000\n");
    const auto r = cli({"read", "--offset", "0x100", "--len", "4"});
    CHECK(r.rc == 0);
    CHECK(r.out == "read data:0\ndatasize:4\n");
    CHECK(cli({"--ticks", "0", "discover"}).out == "port mask: 0x00(0B)\n");
    CHECK(format_port_mask(0x05) == "0x05(101B)");
    CHECK(format_port_mask(0x04) == "0x04(100B)");
    CHECK(format_port_mask(0) == "0x00(0B)");
    CHECK(format_port_mask(0x80000000) == "0x80000000(1" + std::string(31, '0') + "B)");
}

TEST_CASE("cli: one backend across invocations") {
    ControlService svc{ServiceConfig{}};
    EmbeddedBackend backend(svc);
    CHECK(cli({"write", "--offset", "0x100", "--data", "2222"}, &backend).out ==
          "Offset address has written to PCIe\nwrite data:2222\ndatasize:4\n");
    CHECK(cli({"read", "--offset", "0x100"}, &backend).out == "read data:2222\ndatasize:4\n");
    CHECK(cli({"read", "--offset", "0x100", "--len", "2"}, &backend).out == "read data:2222\ndatasize:2\n");
    CHECK(cli({"link", "enable", "1"}, &backend).out == "link enable port 1: status 0x00\n");
    CHECK(cli({"link", "enable", "3"}, &backend).out == "link enable port 3: status 0x00\n");
    CHECK(cli({"--ticks", "5", "discover"}, &backend).out == "port mask: 0x05(101B)\n");
    CHECK(cli({"link", "reset", "1"}, &backend).out == "link reset port 1: status 0x00\n");
    CHECK(cli({"discover"}, &backend).out == "port mask: 0x04(100B)\n");
    CHECK(cli({"tick", "10"}, &backend).out == "tick:15\n");
    CHECK(cli({"inject", "-1000", "5", "7"}, &backend).out == "inject x=-1000 y=5 z=7\n");
    CHECK(cli({"tick", "20"}, &backend).rc == 0);
    const auto acq = cli({"acquire"}, &backend);
    CHECK(acq.rc == 0);
    CHECK(acq.out.starts_with("acquired "));
    CHECK(acq.out.find("sample x=-1000 y=5 z=7\n") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
    ControlService svc{ServiceConfig{}};
    EmbeddedBackend backend(svc);
    CHECK(cli({}, &backend).rc == 2);
    CHECK(cli({"frobnicate"}, &backend).rc == 2);
    CHECK(cli({"read", "--offset", "ZZZ"}, &backend).rc == 2);
    CHECK(cli({"read"}, &backend).rc == 2);
    CHECK(cli({"link", "sideways", "1"}, &backend).rc == 2);
    CHECK(cli({"write", "--offset", "0x100", "--data", "1", "--len", "2", "--bogus"}, &backend).rc == 2);

    const auto bad_len = cli({"read", "--offset", "0x100", "--len", "3"}, &backend);
    CHECK(bad_len.rc == 1);
    CHECK(bad_len.err.find("InvalidParameter") != std::string::npos);
    CHECK(cli({"read", "--offset", "0x1000"}, &backend).rc == 1);
    CHECK(cli({"link", "enable", "9"}, &backend).rc == 1);
    CHECK(cli({"--config", "/no/such.conf", "bar0"}).rc == 1);
    CHECK(cli({"--help"}).rc == 0);
    // The backend is still healthy.
    CHECK(cli({"bar0"}, &backend).rc == 0);
}

TEST_CASE("cli: shell mode") {
    const std::string script = "# setup\n"
                               "link enable 1\n"
                               "link enable 3\n"
                               "tick 5\n"
                               "discover\n"
                               "\n"
                               "read --offset 0x100 --len 3\n"
                               "write --offset 0x100 --data 2222\n"
                               "read --offset 0x100\n"
                               "quit\n"
                               "bar0\n";
    const auto r = cli({"shell"}, nullptr, script);
    CHECK(r.rc == 1);
    CHECK(r.out == "link enable port 1: status 0x00\n"
                   "link enable port 3: status 0x00\n"
                   "tick:5\n"
                   "port mask: 0x05(101B)\n"
                   "Offset address has written to PCIe\nwrite data:2222\ndatasize:4\n"
                   "read data:2222\ndatasize:4\n");
    CHECK(cli({"shell"}, nullptr, "bogus\n").rc == 2);
    CHECK(cli({"shell"}, nullptr, "shell\n").rc == 2);
    CHECK(cli({"--ticks", "7", "shell"}, nullptr, "tick 0\n").out == "tick:7\n");
}

TEST_CASE("cli and direct calls produce the same IOCTL trace") {
    ControlService via_cli{ServiceConfig{}};
    EmbeddedBackend backend(via_cli);
    for (auto args : std::vector<std::vector<std::string>>{{"bar0"},
                                                           {"write", "--offset", "0x100", "--data", "2222"},
                                                           {"read", "--offset", "0x100"},
                                                           {"link", "enable", "1"},
                                                           {"discover"},
                                                           {"read", "--offset", "0x100", "--len", "3"},
                                                           {"acquire", "--max", "100"}}) {
        cli(args, &backend);
    }
    ControlService direct{ServiceConfig{}};
    direct.execute(ioctl::cmd::GetBar0Addr{});
    direct.execute(ioctl::cmd::WriteReg{0x100, 4, oracle::le_bytes(2222, 4)});
    direct.execute(ioctl::cmd::ReadReg{0x100, 4});
    direct.execute(ioctl::cmd::LinkEnable{1});
    direct.execute(ioctl::cmd::PortDiscovery{});
    direct.execute(ioctl::cmd::AcquireData{100});
    CHECK(via_cli.simulation().ioctl_trace() == direct.simulation().ioctl_trace());
    CHECK(direct.simulation().ioctl_trace().size() == 6);
}
