#include "spw/service/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spw::svc {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
    int base = 10;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        text.remove_prefix(2);
        base = 16;
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(Errc::BadConfig, std::string(key) + ": not a number");
    }
    return value;
}

bool parse_switch(std::string_view key, std::string_view text) {
    if (text == "on" || text == "true" || text == "1") return true;
    if (text == "off" || text == "false" || text == "0") return false;
    throw Error(Errc::BadConfig, std::string(key) + ": expected on|off");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::BadConfig, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

ServiceConfig ServiceConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
    ServiceConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::BadConfig, "line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));

        if (key == "bar0_base") {
            cfg.bar0_base = parse_u64(key, value);
        } else if (key == "bar2_base") {
            cfg.bar2_base = parse_u64(key, value);
        } else if (key == "bar0_length") {
            cfg.bar0_length = parse_u64(key, value);
        } else if (key == "bar2_length") {
            cfg.bar2_length = parse_u64(key, value);
        } else if (key == "guid") {
            auto g = ioctl::Guid::try_parse(value);
            if (!g) throw Error(Errc::BadConfig, "guid: not a GUID");
            cfg.guid = *g;
        } else if (key == "topology") {
            cfg.topology_source = std::string(value);
            if (value == "default") {
                cfg.topology = net::Topology::verification_default();
            } else {
                std::filesystem::path p{std::string(value)};
                if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                try {
                    cfg.topology = net::Topology::parse(read_file(p));
                } catch (const Error& e) {
                    throw Error(Errc::BadConfig, std::string("topology: ") + e.what());
                }
            }
        } else if (key == "sample_period") {
            cfg.sample_period = parse_u64(key, value);
        } else if (key == "accel_amplitude") {
            const auto v = parse_u64(key, value);
            if (v > 0x7FFFFFFF) throw Error(Errc::BadConfig, "accel_amplitude out of range");
            cfg.accel_amplitude = static_cast<std::int32_t>(v);
        } else if (key == "accel_half_period") {
            cfg.accel_half_period = parse_u64(key, value);
        } else if (key == "listen") {
            const auto colon = value.rfind(':');
            if (colon == std::string_view::npos) throw Error(Errc::BadConfig, "listen: expected host:port");
            const auto port = parse_u64(key, value.substr(colon + 1));
            if (port > 65535) throw Error(Errc::BadConfig, "listen: port out of range");
            cfg.listen_host = std::string(value.substr(0, colon));
            cfg.listen_port = static_cast<std::uint16_t>(port);
        } else if (key == "auto_tick") {
            cfg.auto_tick = parse_switch(key, value);
        } else if (key == "auto_tick_rate") {
            cfg.auto_tick_rate = static_cast<double>(parse_u64(key, value));
        } else {
            throw Error(Errc::BadConfig, "unknown key '" + std::string(key) + "'");
        }
    }
    if (cfg.bar0_length < 4096 || cfg.bar2_length == 0) {
        throw Error(Errc::BadConfig, "BAR0 must be at least 4096 bytes and BAR2 non-empty");
    }
    return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
    return parse(read_file(path), path.parent_path());
}

ServiceConfig ServiceConfig::from_environment() {
    const char* path = std::getenv(std::string(kConfigEnv).c_str());
    if (path == nullptr || *path == '\0') {
        return ServiceConfig{};
    }
    return load(path);
}

} // namespace spw::svc
