#include "spw/service/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <csignal>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "spw/service/api_router.hpp"
#include "spw/service/api_server.hpp"
#include "spw/service/command_channel.hpp"

namespace spw::svc {

namespace {

struct Options {
    std::string config_path;
    std::string connect;
    std::uint64_t pre_ticks = 0;

    std::string offset_hex;
    std::uint32_t len = 4;
    std::string data_dec;
    std::string link_action;
    std::uint32_t port = 0;
    std::uint32_t max_bytes = 65536;
    std::uint64_t tick_n = 1;
    std::vector<std::int32_t> xyz;
    std::string listen;
};

struct UsageError {
    std::string message;
};

// Hex with or without a 0x prefix: "100" and "0x100" are the same offset.
std::uint32_t parse_hex_offset(const std::string& text) {
    std::string_view digits = text;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) digits.remove_prefix(2);
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, 16);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
        throw UsageError{"--offset: '" + text + "' is not a hexadecimal offset"};
    }
    return v;
}

std::uint64_t parse_dec(const std::string& text, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 10);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw UsageError{std::string(what) + ": '" + text + "' is not a decimal number"};
    }
    return v;
}

std::pair<std::string, std::uint16_t> split_host_port(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw UsageError{"expected host:port, got '" + text + "'"};
    const auto port = parse_dec(text.substr(colon + 1), "port");
    if (port > 65535) throw UsageError{"port out of range"};
    return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

struct App {
    CLI::App app{"Control tool for the emulated PCIe-SpaceWire card", "spwctl"};
    Options opt;
    CLI::App* bar0;
    CLI::App* read;
    CLI::App* write;
    CLI::App* link;
    CLI::App* discover;
    CLI::App* acquire;
    CLI::App* tick;
    CLI::App* inject;
    CLI::App* shell;
    CLI::App* serve;

    App() {
        app.require_subcommand(1);
        app.add_option("--config", opt.config_path, "Config file (default: $SPW_CONFIG)");
        app.add_option("--connect", opt.connect, "host:port of a running `spwctl serve`");
        app.add_option("--ticks", opt.pre_ticks, "Advance simulated time before the command");

        bar0 = app.add_subcommand("bar0", "Print the BAR0 physical base address");
        read = app.add_subcommand("read", "Read a BAR0 register");
        read->add_option("--offset", opt.offset_hex, "Offset (hex, 0x optional)")->required();
        read->add_option("--len", opt.len, "Width in bytes")->capture_default_str();
        write = app.add_subcommand("write", "Write a BAR0 register");
        write->add_option("--offset", opt.offset_hex, "Offset (hex, 0x optional)")->required();
        write->add_option("--data", opt.data_dec, "Value (decimal)")->required();
        write->add_option("--len", opt.len, "Width in bytes")->capture_default_str();
        link = app.add_subcommand("link", "Enable or reset a router port link");
        link->add_option("action", opt.link_action)->required()->check(CLI::IsMember({"enable", "reset"}));
        link->add_option("port", opt.port)->required();
        discover = app.add_subcommand("discover", "Print the mask of ports with a running link");
        acquire = app.add_subcommand("acquire", "Drain delivered packets from the card");
        acquire->add_option("--max", opt.max_bytes, "Output buffer size")->capture_default_str();
        tick = app.add_subcommand("tick", "Advance simulated time");
        tick->add_option("n", opt.tick_n)->capture_default_str();
        inject = app.add_subcommand("inject", "Override the accelerometer sample");
        inject->add_option("xyz", opt.xyz, "X Y Z")->required()->expected(3);
        shell = app.add_subcommand("shell", "Run commands from stdin against one session");
        serve = app.add_subcommand("serve", "Run the HTTP/WebSocket API");
        serve->add_option("--listen", opt.listen, "host:port (default from config)");
    }

    int parse(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
        std::reverse(args.begin(), args.end());
        try {
            app.parse(args);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "usage error: " << e.what() << "\n";
            return 2;
        }
        return -1;
    }
};

int report_failure(const CommandResult& r, std::ostream& err) {
    fmt::print(err, "error: {} failed: {}\n", r.command, r.reason);
    return 1;
}

template <class Reply>
const Reply& payload(const CommandResult& r) {
    return std::get<Reply>(*r.payload);
}

// Runs one parsed (non-session) subcommand.
int run_command(App& a, CliBackend& backend, std::ostream& out, std::ostream& err) {
    auto& o = a.opt;
    if (o.pre_ticks > 0) backend.tick(o.pre_ticks);

    if (a.bar0->parsed()) {
        auto r = backend.execute(ioctl::cmd::GetBar0Addr{});
        if (!r.success) return report_failure(r, err);
        fmt::print(out, "BAR0 physical address: 0x{:08X}\n", payload<ioctl::reply::Bar0Addr>(r).phys);
        return 0;
    }
    if (a.read->parsed()) {
        const auto offset = parse_hex_offset(o.offset_hex);
        auto r = backend.execute(ioctl::cmd::ReadReg{offset, o.len});
        if (!r.success) return report_failure(r, err);
        const auto& data = payload<ioctl::reply::RegData>(r);
        fmt::print(out, "read data:{}\ndatasize:{}\n", data.value(), data.bytes.size());
        return 0;
    }
    if (a.write->parsed()) {
        const auto offset = parse_hex_offset(o.offset_hex);
        const auto value = parse_dec(o.data_dec, "--data");
        std::vector<std::uint8_t> bytes;
        for (std::uint32_t i = 0; i < o.len && i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
        if (o.len < 8 && (value >> (8 * o.len)) != 0) {
            throw UsageError{"--data does not fit in --len bytes"};
        }
        auto r = backend.execute(ioctl::cmd::WriteReg{offset, o.len, bytes});
        if (!r.success) return report_failure(r, err);
        fmt::print(out, "Offset address has written to PCIe\nwrite data:{}\ndatasize:{}\n", value,
                   payload<ioctl::reply::Written>(r).count);
        return 0;
    }
    if (a.link->parsed()) {
        auto r = o.link_action == "enable" ? backend.execute(ioctl::cmd::LinkEnable{o.port})
                                           : backend.execute(ioctl::cmd::LinkReset{o.port});
        if (!r.success) return report_failure(r, err);
        fmt::print(out, "link {} port {}: status 0x{:02X}\n", o.link_action, o.port,
                   payload<ioctl::reply::LinkStatus>(r).status);
        return 0;
    }
    if (a.discover->parsed()) {
        auto r = backend.execute(ioctl::cmd::PortDiscovery{});
        if (!r.success) return report_failure(r, err);
        fmt::print(out, "port mask: {}\n", format_port_mask(payload<ioctl::reply::PortMask>(r).mask));
        return 0;
    }
    if (a.acquire->parsed()) {
        auto r = backend.execute(ioctl::cmd::AcquireData{o.max_bytes});
        if (!r.success) return report_failure(r, err);
        const auto& frames = payload<ioctl::reply::Acquired>(r).frames;
        const auto packets = ioctl::split_frames(frames);
        fmt::print(out, "acquired {} bytes, {} packets\n", frames.size(), packets.size());
        for (const auto& p : packets) {
            if (p.size() == dev::kSampleBytes) {
                fmt::print(out, "sample x={} y={} z={}\n", static_cast<std::int32_t>(ioctl::get_u32(p, 0)),
                           static_cast<std::int32_t>(ioctl::get_u32(p, 4)),
                           static_cast<std::int32_t>(ioctl::get_u32(p, 8)));
            } else {
                fmt::print(out, "packet {}\n", to_hex(p));
            }
        }
        return 0;
    }
    if (a.tick->parsed()) {
        fmt::print(out, "tick:{}\n", backend.tick(o.tick_n));
        return 0;
    }
    if (a.inject->parsed()) {
        backend.inject(o.xyz[0], o.xyz[1], o.xyz[2]);
        fmt::print(out, "inject x={} y={} z={}\n", o.xyz[0], o.xyz[1], o.xyz[2]);
        return 0;
    }
    throw UsageError{"no command"};
}

std::vector<std::string> split_words(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> words;
    for (std::string w; ss >> w;) words.push_back(w);
    return words;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int serve(const ServiceConfig& config, const std::string& listen, std::ostream& out, std::ostream& err) {
    std::string host = config.listen_host;
    std::uint16_t port = config.listen_port;
    if (!listen.empty()) std::tie(host, port) = split_host_port(listen);

    SampleBus bus;
    CommandChannel channel(std::make_unique<ControlService>(config), &bus);
    if (config.auto_tick) channel.set_auto_tick(true, config.auto_tick_rate);
    ApiRouter router(channel);
    ApiServer server(router, bus);
    try {
        port = server.start(host, port);
    } catch (const std::exception& e) {
        fmt::print(err, "error: cannot listen on {}:{}: {}\n", host, port, e.what());
        return 1;
    }
    fmt::print(out, "listening on {}:{}\n", host, port);
    out.flush();

    g_interrupted = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    bus.close_all();
    return 0;
}

} // namespace

std::string format_port_mask(std::uint32_t mask) {
    std::string bits;
    for (std::uint32_t m = mask; m != 0; m >>= 1) bits.insert(bits.begin(), (m & 1) ? '1' : '0');
    if (bits.empty()) bits = "0";
    return fmt::format("0x{:02X}({}B)", mask, bits);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream* in,
            CliBackend* backend) {
    App top;
    if (int rc = top.parse(args, out, err); rc >= 0) return rc;

    try {
        if (top.serve->parsed()) {
            const auto config =
                top.opt.config_path.empty() ? ServiceConfig::from_environment() : ServiceConfig::load(top.opt.config_path);
            return serve(config, top.opt.listen, out, err);
        }

        std::unique_ptr<ControlService> service;
        std::unique_ptr<CliBackend> owned;
        if (backend == nullptr) {
            if (!top.opt.connect.empty()) {
                const auto [host, port] = split_host_port(top.opt.connect);
                owned = make_remote_backend(host, port);
            } else {
                const auto config = top.opt.config_path.empty() ? ServiceConfig::from_environment()
                                                                : ServiceConfig::load(top.opt.config_path);
                service = std::make_unique<ControlService>(config);
                owned = std::make_unique<EmbeddedBackend>(*service);
            }
            backend = owned.get();
        }

        if (!top.shell->parsed()) {
            return run_command(top, *backend, out, err);
        }

        if (in == nullptr) throw UsageError{"shell needs an input stream"};
        if (top.opt.pre_ticks > 0) backend->tick(top.opt.pre_ticks);
        int worst = 0;
        for (std::string line; std::getline(*in, line);) {
            auto words = split_words(line);
            if (words.empty() || words.front().starts_with('#')) continue;
            if (words.front() == "quit" || words.front() == "exit") break;
            App a;
            int rc = a.parse(words, out, err);
            if (rc < 0) {
                if (a.shell->parsed() || a.serve->parsed()) {
                    err << "usage error: '" << words.front() << "' is not available inside a shell\n";
                    rc = 2;
                } else {
                    try {
                        rc = run_command(a, *backend, out, err);
                    } catch (const UsageError& e) {
                        err << "usage error: " << e.message << "\n";
                        rc = 2;
                    }
                }
            }
            worst = std::max(worst, rc);
        }
        return worst;
    } catch (const UsageError& e) {
        err << "usage error: " << e.message << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace spw::svc
