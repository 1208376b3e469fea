#include <httplib.h>
#include <json.hpp>

#include "spw/service/api_router.hpp"
#include "spw/service/cli.hpp"

namespace spw::svc {

namespace {

using nlohmann::json;

class RemoteBackend final : public CliBackend {
public:
    RemoteBackend(const std::string& host, std::uint16_t port) : client_(host, port) {
        client_.set_connection_timeout(5);
        client_.set_read_timeout(30);
    }

    CommandResult execute(const ioctl::SpwCommand& command) override {
        CommandResult result;
        result.command = std::string(ioctl::command_name(command));
        try {
            result.payload = std::visit([this](const auto& c) { return run(c); }, command);
            result.success = true;
        } catch (const Failure& f) {
            result.reason = f.reason;
            result.status = wdf::NtStatus::Unsuccessful;
        }
        return result;
    }

    std::uint64_t tick(std::uint64_t n) override {
        return request("POST", "/api/tick", json{{"n", n}}).at("tick").get<std::uint64_t>();
    }

    void inject(std::int32_t x, std::int32_t y, std::int32_t z) override {
        request("POST", "/api/inject", json{{"x", x}, {"y", y}, {"z", z}});
    }

private:
    struct Failure {
        std::string reason;
    };

    json request(const std::string& method, const std::string& path, const json& body = nullptr) {
        httplib::Result res = method == "GET" ? client_.Get(path)
                                              : client_.Post(path, body.is_null() ? std::string{} : body.dump(),
                                                             "application/json");
        if (!res) throw Failure{"connection failed: " + httplib::to_string(res.error())};
        json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw Failure{"malformed response"};
        if (res->status != 200) throw Failure{j.value("error", "HTTP " + std::to_string(res->status))};
        return j;
    }

    ioctl::SpwResult run(const ioctl::cmd::GetBar0Addr&) {
        return ioctl::reply::Bar0Addr{request("GET", "/api/device").at("bar0_phys").get<std::uint64_t>()};
    }
    ioctl::SpwResult run(const ioctl::cmd::ReadReg& c) {
        const auto j = request("GET", "/api/registers?offset=" + std::to_string(c.offset) + "&len=" +
                                          std::to_string(c.length));
        const auto value = j.at("data").get<std::uint32_t>();
        ioctl::reply::RegData data;
        for (std::uint32_t i = 0; i < c.length; ++i) data.bytes.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
        return data;
    }
    ioctl::SpwResult run(const ioctl::cmd::WriteReg& c) {
        std::uint64_t value = 0;
        for (std::size_t i = 0; i < c.data.size() && i < 8; ++i) value |= std::uint64_t{c.data[i]} << (8 * i);
        const auto j = request("POST", "/api/registers", json{{"offset", c.offset}, {"len", c.length}, {"data", value}});
        return ioctl::reply::Written{j.at("written").get<std::uint32_t>()};
    }
    ioctl::SpwResult run(const ioctl::cmd::LinkEnable& c) {
        return ioctl::reply::LinkStatus{
            request("POST", "/api/links/" + std::to_string(c.port) + "/enable").at("status").get<std::uint32_t>()};
    }
    ioctl::SpwResult run(const ioctl::cmd::LinkReset& c) {
        return ioctl::reply::LinkStatus{
            request("POST", "/api/links/" + std::to_string(c.port) + "/reset").at("status").get<std::uint32_t>()};
    }
    ioctl::SpwResult run(const ioctl::cmd::PortDiscovery&) {
        return ioctl::reply::PortMask{request("GET", "/api/ports").at("mask").get<std::uint32_t>()};
    }
    ioctl::SpwResult run(const ioctl::cmd::AcquireData& c) {
        const auto j = request("POST", "/api/acquire", json{{"max_bytes", c.max_bytes}});
        return ioctl::reply::Acquired{from_hex(j.at("frames").get<std::string>())};
    }

    httplib::Client client_;
};

} // namespace

std::unique_ptr<CliBackend> make_remote_backend(const std::string& host, std::uint16_t port) {
    return std::make_unique<RemoteBackend>(host, port);
}

} // namespace spw::svc
