#pragma once

#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spw/service/command_channel.hpp"

namespace spw::svc {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Transport-independent HTTP API. Every handler runs its simulation work as
// one task on the command channel.
class ApiRouter {
public:
    explicit ApiRouter(CommandChannel& channel, bool record_trace = false)
        : channel_(channel), record_trace_(record_trace) {}

    ApiResponse handle(std::string_view method, std::string_view target, std::string_view body);

    // "METHOD target body -> status json" per handled request, when enabled.
    std::vector<std::string> trace() const;

private:
    ApiResponse route(std::string_view method, std::string_view path, std::string_view query, std::string_view body);

    CommandChannel& channel_;
    bool record_trace_;
    mutable std::mutex trace_mutex_;
    std::vector<std::string> trace_;
};

// Shared by the API and the remote CLI client.
std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex(std::string_view text);

} // namespace spw::svc
