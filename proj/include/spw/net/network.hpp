#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spw/error.hpp"

namespace spw::net {

enum class LinkState { ErrorReset, ErrorWait, Ready, Started, Connecting, Run };
enum class NodeKind { Empty, InterfaceCard, Accelerometer };
enum class LinkCommand { Enable, Disable, Reset };

std::string_view to_string(LinkState state) noexcept;
std::string_view to_string(NodeKind kind) noexcept;

struct Topology {
    unsigned router_ports = 3;
    std::map<unsigned, NodeKind> attachments; // 1-based router port -> node

    // Accelerometer on port 1, interface card on port 3, port 2 empty.
    static Topology verification_default();
    // key=value lines: router_ports=N, port.<i>=card|accelerometer|empty
    static Topology parse(std::string_view text);

    void validate() const;
    NodeKind at(unsigned port) const;
    std::optional<unsigned> card_port() const;
};

struct AccelSample {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t z = 0;
    std::uint64_t tick = 0;
    friend bool operator==(const AccelSample&, const AccelSample&) = default;
};

// x alternates between +amplitude and -amplitude every half_period ticks.
// amplitude 0 (the default) yields the all-zero sample.
struct Waveform {
    std::int32_t amplitude = 0;
    std::uint64_t half_period = 50;
};

struct NetworkConfig {
    std::uint64_t sample_period = 10;
    Waveform waveform;
};

enum class TraceKind { Emit, Forward, Deliver, Drop, LinkRun, LinkDown };

struct TraceEvent {
    std::uint64_t tick;
    TraceKind kind;
    unsigned port;
    std::vector<std::uint8_t> payload;
    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

std::vector<std::uint8_t> encode_sample(const AccelSample& sample);

// Tick-driven model of one router, its attached nodes and one link per
// attached port. Each link has a router-side and a node-side endpoint that
// progress through the six-state FSM together, one stage per tick.
class Network {
public:
    using CardSink = std::function<void(unsigned port, std::span<const std::uint8_t> payload, std::uint64_t tick)>;

    explicit Network(Topology topology, NetworkConfig config = {});

    void tick(std::uint64_t n = 1);
    std::uint64_t now() const noexcept { return now_; }

    void link_command(unsigned port, LinkCommand cmd);
    void set_node_enabled(unsigned port, bool enabled);

    std::uint32_t discovery_mask() const;
    LinkState router_state(unsigned port) const;
    std::optional<LinkState> node_state(unsigned port) const;
    bool router_enabled(unsigned port) const;

    AccelSample accel_waveform(std::uint64_t tick) const;
    void set_injected_sample(std::int32_t x, std::int32_t y, std::int32_t z);
    void clear_injected_sample();

    void set_card_sink(CardSink sink) { card_sink_ = std::move(sink); }

    const Topology& topology() const noexcept { return topology_; }
    const NetworkConfig& config() const noexcept { return config_; }
    const std::vector<TraceEvent>& trace() const noexcept { return trace_; }
    std::uint64_t emitted_samples() const noexcept { return emitted_; }
    std::uint64_t dropped_packets() const noexcept { return dropped_; }

private:
    struct Endpoint {
        LinkState state = LinkState::ErrorReset;
        bool enabled = false;
    };
    struct Hop {
        Endpoint router;
        std::optional<Endpoint> node;
    };
    struct InFlight {
        std::vector<std::uint8_t> payload;
        unsigned src_port;
        unsigned dst_port;
        bool at_router; // false: still crossing the source hop
        std::uint64_t due;
    };

    Hop& hop(unsigned port);
    const Hop& hop(unsigned port) const;
    bool running(unsigned port) const;
    void step_links();
    void step_packets();
    void emit_samples();

    Topology topology_;
    NetworkConfig config_;
    std::vector<Hop> hops_; // index port-1
    std::deque<InFlight> in_flight_;
    std::optional<AccelSample> injected_;
    CardSink card_sink_;
    std::vector<TraceEvent> trace_;
    std::uint64_t now_ = 0;
    std::uint64_t emitted_ = 0;
    std::uint64_t dropped_ = 0;
};

} // namespace spw::net
