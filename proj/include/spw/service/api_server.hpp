#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "spw/service/api_router.hpp"
#include "spw/service/command_channel.hpp"

namespace spw::svc {

// Blocking HTTP/1.1 + WebSocket front end over an ApiRouter. One thread per
// connection; WS /api/stream forwards every sample published on the bus.
class ApiServer {
public:
    ApiServer(ApiRouter& router, SampleBus& bus);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds and starts accepting. Port 0 picks an ephemeral port; returns the bound port.
    std::uint16_t start(const std::string& host, std::uint16_t port);
    void stop();
    // Blocks until stop() is called from another thread.
    void wait();

    std::uint16_t port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ApiRouter& router_;
    SampleBus& bus_;
    std::uint16_t port_ = 0;
};

} // namespace spw::svc
