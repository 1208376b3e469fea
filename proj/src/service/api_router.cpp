#include "spw/service/api_router.hpp"

#include <charconv>
#include <limits>

namespace spw::svc {

using nlohmann::json;

namespace {

ApiResponse error(int status, std::string message) { return {status, json{{"error", std::move(message)}}}; }

struct BadRequest {
    std::string message;
};

std::optional<std::string_view> query_param(std::string_view query, std::string_view name) {
    while (!query.empty()) {
        const auto amp = query.find('&');
        const std::string_view pair = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        const auto eq = pair.find('=');
        if (pair.substr(0, eq) == name) {
            return eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1);
        }
    }
    return std::nullopt;
}

std::uint64_t parse_decimal(std::string_view text, std::string_view what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw BadRequest{std::string(what) + " must be a non-negative integer"};
    }
    return v;
}

json parse_body(std::string_view body, bool required) {
    if (body.empty()) {
        if (required) throw BadRequest{"missing JSON body"};
        return json::object();
    }
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw BadRequest{"body must be a JSON object"};
    }
    return j;
}

std::uint64_t get_unsigned(const json& j, const char* key, std::optional<std::uint64_t> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw BadRequest{std::string("missing field '") + key + "'"};
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw BadRequest{std::string("field '") + key + "' must be a non-negative integer"};
    }
    return v.get<std::uint64_t>();
}

std::int32_t get_int32(const json& j, const char* key, std::optional<std::int32_t> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw BadRequest{std::string("missing field '") + key + "'"};
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer()) {
        throw BadRequest{std::string("field '") + key + "' must be an integer"};
    }
    const auto wide = v.get<std::int64_t>();
    if (wide < std::numeric_limits<std::int32_t>::min() || wide > std::numeric_limits<std::int32_t>::max()) {
        throw BadRequest{std::string("field '") + key + "' out of 32-bit range"};
    }
    return static_cast<std::int32_t>(wide);
}

std::uint32_t to_u32(std::uint64_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw BadRequest{std::string(what) + " out of 32-bit range"};
    }
    return static_cast<std::uint32_t>(v);
}

int status_for(const CommandResult& r) {
    if (r.reason == "DeviceNotStarted" || r.reason == "NotFound") return 409;
    switch (r.status) {
    case wdf::NtStatus::InvalidParameter:
    case wdf::NtStatus::NotSupported:
    case wdf::NtStatus::BufferTooSmall: return 400;
    case wdf::NtStatus::DeviceNotReady: return 409;
    default: return 500;
    }
}

ApiResponse command_error(const CommandResult& r) {
    return {status_for(r), json{{"error", r.reason}, {"command", r.command}}};
}

bool started(ControlService& svc) {
    auto& sim = svc.simulation();
    return sim.framework().state(sim.device_id()) == wdf::LifecycleState::Started;
}

ApiResponse not_started() { return error(409, "device not started"); }

json acquired_json(const std::vector<std::uint8_t>& frames) {
    json samples = json::array();
    std::size_t packets = 0;
    for (const auto& payload : ioctl::split_frames(frames)) {
        ++packets;
        if (payload.size() == dev::kSampleBytes) {
            samples.push_back({{"x", static_cast<std::int32_t>(ioctl::get_u32(payload, 0))},
                               {"y", static_cast<std::int32_t>(ioctl::get_u32(payload, 4))},
                               {"z", static_cast<std::int32_t>(ioctl::get_u32(payload, 8))}});
        }
    }
    return json{{"bytes", frames.size()}, {"packets", packets}, {"frames", to_hex(frames)}, {"samples", samples}};
}

} // namespace

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view text) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (text.size() % 2 != 0) throw Error(Errc::BadLength, "odd hex length");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        const int hi = nibble(text[i]);
        const int lo = nibble(text[i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::BadLength, "bad hex digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

ApiResponse ApiRouter::handle(std::string_view method, std::string_view target, std::string_view body) {
    const auto qmark = target.find('?');
    const std::string_view path = target.substr(0, qmark);
    const std::string_view query = qmark == std::string_view::npos ? std::string_view{} : target.substr(qmark + 1);
    ApiResponse response;
    try {
        response = route(method, path, query, body);
    } catch (const BadRequest& e) {
        response = error(400, e.message);
    } catch (const std::exception& e) {
        response = error(500, e.what());
    }
    if (record_trace_) {
        std::lock_guard lock(trace_mutex_);
        trace_.push_back(std::string(method) + " " + std::string(target) + " " + std::string(body) + " -> " +
                         std::to_string(response.status) + " " + response.body.dump());
    }
    return response;
}

std::vector<std::string> ApiRouter::trace() const {
    std::lock_guard lock(trace_mutex_);
    return trace_;
}

ApiResponse ApiRouter::route(std::string_view method, std::string_view path, std::string_view query,
                             std::string_view body) {
    const bool get = method == "GET";
    const bool post = method == "POST";
    auto wrong_method = [] { return error(405, "method not allowed"); };

    if (path == "/api/device") {
        if (!get) return wrong_method();
        return channel_.call([](ControlService& svc) {
            const auto info = svc.device_info();
            return ApiResponse{200, json{{"guid", info.guid.to_string()},
                                         {"bar0_phys", info.bar0_phys},
                                         {"interface", info.interface_path},
                                         {"lifecycle", std::string(wdf::to_string(info.lifecycle))},
                                         {"tick", svc.simulation().now()}}};
        });
    }

    if (path == "/api/device/plug" || path == "/api/device/unplug") {
        if (!post) return wrong_method();
        const bool plug = path == "/api/device/plug";
        return channel_.call([plug](ControlService& svc) {
            auto& sim = svc.simulation();
            try {
                plug ? sim.plug() : sim.unplug();
            } catch (const Error& e) {
                return error(409, e.what());
            }
            return ApiResponse{200, json{{"lifecycle", std::string(wdf::to_string(sim.framework().state(
                                                           sim.device_id())))}}};
        });
    }

    if (path == "/api/registers") {
        if (get) {
            const auto off = query_param(query, "offset");
            if (!off) throw BadRequest{"missing query parameter 'offset'"};
            const auto offset = to_u32(parse_decimal(*off, "offset"), "offset");
            const auto len_text = query_param(query, "len");
            const auto len = len_text ? to_u32(parse_decimal(*len_text, "len"), "len") : 4u;
            return channel_.call([=](ControlService& svc) {
                if (!started(svc)) return not_started();
                auto r = svc.execute(ioctl::cmd::ReadReg{offset, len});
                if (!r.success) return command_error(r);
                const auto& data = std::get<ioctl::reply::RegData>(*r.payload);
                return ApiResponse{200, json{{"offset", offset}, {"len", len}, {"data", data.value()}}};
            });
        }
        if (post) {
            const json j = parse_body(body, true);
            const auto offset = to_u32(get_unsigned(j, "offset"), "offset");
            const auto len = to_u32(get_unsigned(j, "len", 4), "len");
            const auto data = get_unsigned(j, "data");
            if (len != 1 && len != 2 && len != 4) throw BadRequest{"len must be 1, 2 or 4"};
            if (len < 8 && data >> (8 * len) != 0) throw BadRequest{"data does not fit in len bytes"};
            std::vector<std::uint8_t> bytes;
            for (std::uint32_t i = 0; i < len; ++i) bytes.push_back(static_cast<std::uint8_t>(data >> (8 * i)));
            return channel_.call([=](ControlService& svc) {
                if (!started(svc)) return not_started();
                auto r = svc.execute(ioctl::cmd::WriteReg{offset, len, bytes});
                if (!r.success) return command_error(r);
                return ApiResponse{200, json{{"offset", offset},
                                             {"len", len},
                                             {"written", std::get<ioctl::reply::Written>(*r.payload).count}}};
            });
        }
        return wrong_method();
    }

    if (path.starts_with("/api/links/")) {
        std::string_view rest = path.substr(std::string_view("/api/links/").size());
        const auto slash = rest.find('/');
        if (slash == std::string_view::npos) return error(404, "unknown endpoint");
        const std::string_view port_text = rest.substr(0, slash);
        const std::string_view action = rest.substr(slash + 1);
        if (action != "enable" && action != "reset") return error(404, "unknown endpoint");
        if (!post) return wrong_method();
        std::uint64_t port = 0;
        try {
            port = parse_decimal(port_text, "port");
        } catch (const BadRequest&) {
            return error(404, "unknown port");
        }
        const bool enable = action == "enable";
        return channel_.call([=](ControlService& svc) {
            if (port < 1 || port > svc.port_count()) return error(404, "unknown port");
            if (!started(svc)) return not_started();
            const auto p = static_cast<std::uint32_t>(port);
            auto r = enable ? svc.execute(ioctl::cmd::LinkEnable{p}) : svc.execute(ioctl::cmd::LinkReset{p});
            if (!r.success) return command_error(r);
            return ApiResponse{200, json{{"port", port},
                                         {"action", enable ? "enable" : "reset"},
                                         {"status", std::get<ioctl::reply::LinkStatus>(*r.payload).status}}};
        });
    }

    if (path == "/api/ports") {
        if (!get) return wrong_method();
        return channel_.call([](ControlService& svc) {
            if (!started(svc)) return not_started();
            auto r = svc.execute(ioctl::cmd::PortDiscovery{});
            if (!r.success) return command_error(r);
            return ApiResponse{200, json{{"mask", std::get<ioctl::reply::PortMask>(*r.payload).mask}}};
        });
    }

    if (path == "/api/acquire") {
        if (!post) return wrong_method();
        const json j = parse_body(body, false);
        const auto max_bytes = to_u32(get_unsigned(j, "max_bytes", 65536), "max_bytes");
        return channel_.call([=](ControlService& svc) {
            if (!started(svc)) return not_started();
            auto r = svc.execute(ioctl::cmd::AcquireData{max_bytes});
            if (!r.success) return command_error(r);
            return ApiResponse{200, acquired_json(std::get<ioctl::reply::Acquired>(*r.payload).frames)};
        });
    }

    if (path == "/api/inject") {
        if (!post) return wrong_method();
        const json j = parse_body(body, true);
        const auto x = get_int32(j, "x");
        const auto y = get_int32(j, "y", 0);
        const auto z = get_int32(j, "z", 0);
        return channel_.call([=](ControlService& svc) {
            svc.inject(x, y, z);
            return ApiResponse{200, json{{"x", x}, {"y", y}, {"z", z}}};
        });
    }

    if (path == "/api/tick") {
        if (!post) return wrong_method();
        const json j = parse_body(body, false);
        const auto n = get_unsigned(j, "n", 1);
        if (n > 10'000'000) throw BadRequest{"n too large"};
        return channel_.call([=](ControlService& svc) { return ApiResponse{200, json{{"tick", svc.tick(n)}}}; });
    }

    return error(404, "unknown endpoint");
}

} // namespace spw::svc
