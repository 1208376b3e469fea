#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "spw/ioctl/protocol.hpp"
#include "spw/net/network.hpp"

namespace spw::svc {

inline constexpr std::string_view kDefaultGuid = "5d9c1d8e-4f3a-4b7e-9c2a-53505743a001";
inline constexpr std::string_view kConfigEnv = "SPW_CONFIG";

struct ServiceConfig {
    std::uint64_t bar0_base = 0xD2100000;
    std::uint64_t bar2_base = 0xD2000000;
    std::uint64_t bar0_length = 4096;
    std::uint64_t bar2_length = 65536;
    ioctl::Guid guid = ioctl::Guid::parse(kDefaultGuid);
    net::Topology topology = net::Topology::verification_default();
    std::string topology_source = "default";
    std::uint64_t sample_period = 10;
    std::int32_t accel_amplitude = 0;
    std::uint64_t accel_half_period = 50;
    std::string listen_host = "127.0.0.1";
    std::uint16_t listen_port = 8080;
    bool auto_tick = false;
    double auto_tick_rate = 50.0;

    // key=value lines; '#' starts a comment. A relative topology path is
    // resolved against base_dir.
    static ServiceConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
    static ServiceConfig load(const std::filesystem::path& path);
    // $SPW_CONFIG when set, built-in defaults otherwise.
    static ServiceConfig from_environment();
};

} // namespace spw::svc
