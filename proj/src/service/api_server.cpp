#include "spw/service/api_server.hpp"

#include <condition_variable>
#include <deque>
#include <functional>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace spw::svc {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct ApiServer::Impl {
    asio::io_context ioc;
    std::optional<tcp::acceptor> acceptor;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};

    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool stopped = false;
    std::list<std::shared_ptr<tcp::socket>> sockets;
    std::list<std::thread> sessions;

    void session(std::shared_ptr<tcp::socket> socket, ApiRouter& router, SampleBus& bus);
};

namespace {

// Runs one /api/stream connection on its own io_context: a read is always
// pending so close and ping frames get answered, and a timer moves samples
// from the bus subscription to the socket one write at a time.
void stream_samples(tcp::socket& accepted, const http::request<http::string_body>& req, SampleBus& bus,
                    const std::atomic<bool>& stopping) {
    asio::io_context ioc;
    const auto protocol = accepted.local_endpoint().protocol();
    websocket::stream<tcp::socket> ws(tcp::socket(ioc, protocol, accepted.release()));
    ws.accept(req);
    ws.text(true);

    auto sub = bus.subscribe();
    beast::flat_buffer inbound;
    std::deque<std::string> outbound;
    bool writing = false;
    bool done = false;
    asio::steady_timer timer(ioc);

    auto finish = [&] {
        done = true;
        timer.cancel();
        beast::error_code ignored;
        beast::get_lowest_layer(ws).close(ignored);
    };
    std::function<void()> read_next = [&] {
        ws.async_read(inbound, [&](beast::error_code ec, std::size_t) {
            if (ec) return finish();
            inbound.consume(inbound.size());
            read_next();
        });
    };
    std::function<void()> write_next = [&] {
        if (writing || done || outbound.empty()) return;
        writing = true;
        ws.async_write(asio::buffer(outbound.front()), [&](beast::error_code ec, std::size_t) {
            writing = false;
            outbound.pop_front();
            if (ec) return finish();
            write_next();
        });
    };
    std::function<void()> poll = [&] {
        if (done) return;
        if (stopping) return finish();
        while (auto sample = sub->next(std::chrono::milliseconds(0))) {
            const nlohmann::json frame{{"tick", sample->tick}, {"x", sample->x}, {"y", sample->y}, {"z", sample->z}};
            outbound.push_back(frame.dump());
        }
        write_next();
        timer.expires_after(std::chrono::milliseconds(20));
        timer.async_wait([&](beast::error_code ec) {
            if (!ec) poll();
        });
    };
    read_next();
    poll();
    ioc.run();
    sub->close();
}

} // namespace

ApiServer::ApiServer(ApiRouter& router, SampleBus& bus) : impl_(std::make_unique<Impl>()), router_(router), bus_(bus) {}

ApiServer::~ApiServer() { stop(); }

std::uint16_t ApiServer::start(const std::string& host, std::uint16_t port) {
    auto& impl = *impl_;
    const tcp::endpoint endpoint{asio::ip::make_address(host), port};
    impl.acceptor.emplace(impl.ioc);
    impl.acceptor->open(endpoint.protocol());
    impl.acceptor->set_option(asio::socket_base::reuse_address(true));
    impl.acceptor->bind(endpoint);
    impl.acceptor->listen();
    port_ = impl.acceptor->local_endpoint().port();

    impl.accept_thread = std::thread([this] {
        auto& impl = *impl_;
        while (!impl.stopping) {
            auto socket = std::make_shared<tcp::socket>(impl.ioc);
            beast::error_code ec;
            impl.acceptor->accept(*socket, ec);
            if (ec) {
                if (impl.stopping) break;
                continue;
            }
            std::lock_guard lock(impl.mutex);
            impl.sockets.push_back(socket);
            impl.sessions.emplace_back([this, socket] { impl_->session(socket, router_, bus_); });
        }
    });
    return port_;
}

void ApiServer::Impl::session(std::shared_ptr<tcp::socket> socket, ApiRouter& router, SampleBus& bus) {
    auto& impl = *this;
    beast::error_code ec;
    beast::flat_buffer buffer;
    try {
        while (!impl.stopping) {
            http::request<http::string_body> req;
            http::read(*socket, buffer, req, ec);
            if (ec) break;

            if (websocket::is_upgrade(req)) {
                if (req.target() != "/api/stream") {
                    http::response<http::string_body> res{http::status::not_found, req.version()};
                    res.set(http::field::content_type, "application/json");
                    res.body() = R"({"error":"unknown endpoint"})";
                    res.prepare_payload();
                    http::write(*socket, res, ec);
                    break;
                }
                stream_samples(*socket, req, bus, impl.stopping);
                return;
            }

            const auto api = router.handle(std::string(req.method_string()), std::string(req.target()), req.body());
            http::response<http::string_body> res{static_cast<http::status>(api.status), req.version()};
            res.set(http::field::content_type, "application/json");
            res.keep_alive(req.keep_alive());
            res.body() = api.body.dump();
            res.prepare_payload();
            http::write(*socket, res, ec);
            if (ec || !res.keep_alive()) break;
        }
    } catch (const std::exception&) {
        // Peer went away mid-stream.
    }
    socket->shutdown(tcp::socket::shutdown_both, ec);
}

void ApiServer::stop() {
    auto& impl = *impl_;
    if (impl.stopping.exchange(true)) {
        return;
    }
    beast::error_code ec;
    if (impl.acceptor) {
        impl.acceptor->cancel(ec);
        impl.acceptor->close(ec);
    }
    // A blocked accept() is not reliably woken by close(); poke it.
    if (port_ != 0) {
        tcp::socket poke(impl.ioc);
        poke.connect({asio::ip::make_address("127.0.0.1"), port_}, ec);
    }
    if (impl.accept_thread.joinable()) impl.accept_thread.join();

    std::list<std::thread> sessions;
    {
        std::lock_guard lock(impl.mutex);
        for (auto& s : impl.sockets) {
            s->shutdown(tcp::socket::shutdown_both, ec);
        }
        sessions.swap(impl.sessions);
    }
    for (auto& t : sessions) t.join();
    {
        std::lock_guard lock(impl.mutex);
        impl.sockets.clear();
        impl.stopped = true;
    }
    impl.stopped_cv.notify_all();
}

void ApiServer::wait() {
    auto& impl = *impl_;
    std::unique_lock lock(impl.mutex);
    impl.stopped_cv.wait(lock, [&] { return impl.stopped; });
}

} // namespace spw::svc
