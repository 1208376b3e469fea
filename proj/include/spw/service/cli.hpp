#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "spw/service/control_service.hpp"

namespace spw::svc {

// What a CLI command needs from the service, embedded or over HTTP.
class CliBackend {
public:
    virtual ~CliBackend() = default;
    virtual CommandResult execute(const ioctl::SpwCommand& command) = 0;
    virtual std::uint64_t tick(std::uint64_t n) = 0;
    virtual void inject(std::int32_t x, std::int32_t y, std::int32_t z) = 0;
};

class EmbeddedBackend final : public CliBackend {
public:
    explicit EmbeddedBackend(ControlService& service) : service_(service) {}
    CommandResult execute(const ioctl::SpwCommand& command) override { return service_.execute(command); }
    std::uint64_t tick(std::uint64_t n) override { return service_.tick(n); }
    void inject(std::int32_t x, std::int32_t y, std::int32_t z) override { service_.inject(x, y, z); }

private:
    ControlService& service_;
};

// Talks to a running `spwctl serve` through the HTTP API.
std::unique_ptr<CliBackend> make_remote_backend(const std::string& host, std::uint16_t port);

// argv without the program name. When `backend` is null the CLI builds its
// own: a remote one for --connect, otherwise a fresh embedded simulation
// from --config / $SPW_CONFIG. `in` feeds the `shell` subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream* in = nullptr,
            CliBackend* backend = nullptr);

std::string format_port_mask(std::uint32_t mask);

} // namespace spw::svc
