#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>

#include "spw/net/network.hpp"

namespace spw::net {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

unsigned parse_unsigned(std::string_view text, std::string_view what) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(Errc::BadTopology, "bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

} // namespace

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
    case NodeKind::Empty: return "empty";
    case NodeKind::InterfaceCard: return "card";
    case NodeKind::Accelerometer: return "accelerometer";
    }
    return "?";
}

Topology Topology::verification_default() {
    Topology t;
    t.router_ports = 3;
    t.attachments = {{1, NodeKind::Accelerometer}, {2, NodeKind::Empty}, {3, NodeKind::InterfaceCard}};
    return t;
}

Topology Topology::parse(std::string_view text) {
    Topology t;
    t.attachments.clear();
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::BadTopology, "line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = lower(trim(line.substr(eq + 1)));
        if (key == "router_ports") {
            t.router_ports = parse_unsigned(value, "router_ports");
        } else if (key.starts_with("port.")) {
            const unsigned port = parse_unsigned(std::string_view(key).substr(5), "port number");
            NodeKind kind;
            if (value == "card" || value == "interface_card") {
                kind = NodeKind::InterfaceCard;
            } else if (value == "accelerometer" || value == "accel") {
                kind = NodeKind::Accelerometer;
            } else if (value == "empty") {
                kind = NodeKind::Empty;
            } else {
                throw Error(Errc::BadTopology, "unknown node kind '" + value + "'");
            }
            if (!t.attachments.emplace(port, kind).second) {
                throw Error(Errc::BadTopology, "port " + std::to_string(port) + " attached twice");
            }
        } else {
            throw Error(Errc::BadTopology, "unknown key '" + key + "'");
        }
    }
    t.validate();
    return t;
}

void Topology::validate() const {
    if (router_ports == 0 || router_ports > 32) {
        throw Error(Errc::BadTopology, "router_ports must be in 1..32");
    }
    unsigned cards = 0;
    for (const auto& [port, kind] : attachments) {
        if (port == 0 || port > router_ports) {
            throw Error(Errc::BadTopology, "port " + std::to_string(port) + " outside 1.." + std::to_string(router_ports));
        }
        if (kind == NodeKind::InterfaceCard) {
            ++cards;
        }
    }
    if (cards > 1) {
        throw Error(Errc::BadTopology, "at most one interface card");
    }
}

NodeKind Topology::at(unsigned port) const {
    auto it = attachments.find(port);
    return it == attachments.end() ? NodeKind::Empty : it->second;
}

std::optional<unsigned> Topology::card_port() const {
    for (const auto& [port, kind] : attachments) {
        if (kind == NodeKind::InterfaceCard) {
            return port;
        }
    }
    return std::nullopt;
}

} // namespace spw::net
