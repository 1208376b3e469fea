#include "spw/net/network.hpp"

#include <string>

namespace spw::net {

std::string_view to_string(LinkState state) noexcept {
    switch (state) {
    case LinkState::ErrorReset: return "ErrorReset";
    case LinkState::ErrorWait: return "ErrorWait";
    case LinkState::Ready: return "Ready";
    case LinkState::Started: return "Started";
    case LinkState::Connecting: return "Connecting";
    case LinkState::Run: return "Run";
    }
    return "?";
}

std::vector<std::uint8_t> encode_sample(const AccelSample& sample) {
    std::vector<std::uint8_t> out;
    out.reserve(12);
    for (std::int32_t v : {sample.x, sample.y, sample.z}) {
        const auto u = static_cast<std::uint32_t>(v);
        for (unsigned i = 0; i < 4; ++i) {
            out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
        }
    }
    return out;
}

namespace {

// One handshake stage of an endpoint whose link is allowed to come up.
LinkState advance(LinkState self, LinkState partner, bool live) {
    switch (self) {
    case LinkState::ErrorReset: return LinkState::ErrorWait;
    case LinkState::ErrorWait: return LinkState::Ready;
    case LinkState::Ready:
        return live && partner >= LinkState::Ready ? LinkState::Started : LinkState::Ready;
    case LinkState::Started:
        return partner >= LinkState::Started ? LinkState::Connecting : LinkState::Started;
    case LinkState::Connecting:
        return partner >= LinkState::Connecting ? LinkState::Run : LinkState::Connecting;
    case LinkState::Run: return LinkState::Run;
    }
    return self;
}

} // namespace

Network::Network(Topology topology, NetworkConfig config)
    : topology_(std::move(topology)), config_(config) {
    topology_.validate();
    hops_.resize(topology_.router_ports);
    for (unsigned port = 1; port <= topology_.router_ports; ++port) {
        if (topology_.at(port) != NodeKind::Empty) {
            // Nodes start their link autonomously; the router side waits
            // for an explicit enable.
            hops_[port - 1].node = Endpoint{LinkState::ErrorReset, true};
        }
    }
}

Network::Hop& Network::hop(unsigned port) {
    if (port == 0 || port > hops_.size()) {
        throw Error(Errc::NoSuchPort, std::to_string(port));
    }
    return hops_[port - 1];
}

const Network::Hop& Network::hop(unsigned port) const {
    if (port == 0 || port > hops_.size()) {
        throw Error(Errc::NoSuchPort, std::to_string(port));
    }
    return hops_[port - 1];
}

bool Network::running(unsigned port) const { return hop(port).router.state == LinkState::Run; }

void Network::tick(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) {
        ++now_;
        step_links();
        step_packets();
        emit_samples();
    }
}

void Network::step_links() {
    for (unsigned port = 1; port <= hops_.size(); ++port) {
        Hop& h = hops_[port - 1];
        const bool was_run = h.router.state == LinkState::Run;
        if (!h.node) {
            h.router.state = advance(h.router.state, LinkState::ErrorReset, false);
            continue;
        }
        const bool live = h.router.enabled && h.node->enabled;
        const LinkState r = h.router.state;
        const LinkState n = h.node->state;
        if (!live && (r >= LinkState::Started || n >= LinkState::Started)) {
            h.router.state = LinkState::ErrorReset;
            h.node->state = LinkState::ErrorReset;
        } else {
            h.router.state = advance(r, n, live);
            h.node->state = advance(n, r, live);
        }
        const bool is_run = h.router.state == LinkState::Run;
        if (is_run != was_run) {
            trace_.push_back({now_, is_run ? TraceKind::LinkRun : TraceKind::LinkDown, port, {}});
        }
    }
}

void Network::step_packets() {
    std::deque<InFlight> pending;
    while (!in_flight_.empty()) {
        InFlight pkt = std::move(in_flight_.front());
        in_flight_.pop_front();
        if (pkt.due > now_) {
            pending.push_back(std::move(pkt));
            continue;
        }
        if (!pkt.at_router) {
            if (!running(pkt.src_port)) {
                ++dropped_;
                trace_.push_back({now_, TraceKind::Drop, pkt.src_port, std::move(pkt.payload)});
                continue;
            }
            pkt.at_router = true;
            pkt.due = now_ + 1;
            trace_.push_back({now_, TraceKind::Forward, pkt.dst_port, pkt.payload});
            pending.push_back(std::move(pkt));
            continue;
        }
        if (!running(pkt.dst_port)) {
            ++dropped_;
            trace_.push_back({now_, TraceKind::Drop, pkt.dst_port, std::move(pkt.payload)});
            continue;
        }
        trace_.push_back({now_, TraceKind::Deliver, pkt.dst_port, pkt.payload});
        if (card_sink_ && topology_.at(pkt.dst_port) == NodeKind::InterfaceCard) {
            card_sink_(pkt.dst_port, pkt.payload, now_);
        }
    }
    in_flight_ = std::move(pending);
}

void Network::emit_samples() {
    if (config_.sample_period == 0 || now_ % config_.sample_period != 0) {
        return;
    }
    const auto card = topology_.card_port();
    for (const auto& [port, kind] : topology_.attachments) {
        if (kind != NodeKind::Accelerometer || !running(port)) {
            continue;
        }
        auto payload = encode_sample(accel_waveform(now_));
        ++emitted_;
        trace_.push_back({now_, TraceKind::Emit, port, payload});
        if (!card) {
            ++dropped_;
            trace_.push_back({now_, TraceKind::Drop, port, std::move(payload)});
            continue;
        }
        in_flight_.push_back({std::move(payload), port, *card, false, now_ + 1});
    }
}

void Network::link_command(unsigned port, LinkCommand cmd) {
    Hop& h = hop(port);
    switch (cmd) {
    case LinkCommand::Enable: h.router.enabled = true; break;
    case LinkCommand::Disable: h.router.enabled = false; break;
    case LinkCommand::Reset:
        if (h.router.state == LinkState::Run) {
            trace_.push_back({now_, TraceKind::LinkDown, port, {}});
        }
        h.router.state = LinkState::ErrorReset;
        if (h.node) {
            h.node->state = LinkState::ErrorReset;
        }
        break;
    }
}

void Network::set_node_enabled(unsigned port, bool enabled) {
    Hop& h = hop(port);
    if (!h.node) {
        throw Error(Errc::NoSuchPort, "nothing attached to port " + std::to_string(port));
    }
    h.node->enabled = enabled;
}

std::uint32_t Network::discovery_mask() const {
    std::uint32_t mask = 0;
    for (unsigned port = 1; port <= hops_.size(); ++port) {
        if (hops_[port - 1].router.state == LinkState::Run) {
            mask |= 1u << (port - 1);
        }
    }
    return mask;
}

LinkState Network::router_state(unsigned port) const { return hop(port).router.state; }

std::optional<LinkState> Network::node_state(unsigned port) const {
    const Hop& h = hop(port);
    if (!h.node) {
        return std::nullopt;
    }
    return h.node->state;
}

bool Network::router_enabled(unsigned port) const { return hop(port).router.enabled; }

AccelSample Network::accel_waveform(std::uint64_t tick) const {
    if (injected_) {
        AccelSample s = *injected_;
        s.tick = tick;
        return s;
    }
    AccelSample s;
    s.tick = tick;
    if (config_.waveform.amplitude != 0 && config_.waveform.half_period != 0) {
        const bool negative = (tick / config_.waveform.half_period) % 2 == 1;
        s.x = negative ? -config_.waveform.amplitude : config_.waveform.amplitude;
    }
    return s;
}

void Network::set_injected_sample(std::int32_t x, std::int32_t y, std::int32_t z) {
    injected_ = AccelSample{x, y, z, 0};
}

void Network::clear_injected_sample() { injected_.reset(); }

} // namespace spw::net
