#include <string>

#include "spw/ioctl/protocol.hpp"

namespace spw::ioctl {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
    for (unsigned i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value) {
    for (unsigned i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    if (at + 4 > in.size()) throw Error(Errc::BadLength, "u32 past end of buffer");
    std::uint32_t v = 0;
    for (unsigned i = 0; i < 4; ++i) v |= std::uint32_t{in[at + i]} << (8 * i);
    return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
    if (at + 8 > in.size()) throw Error(Errc::BadLength, "u64 past end of buffer");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < 8; ++i) v |= std::uint64_t{in[at + i]} << (8 * i);
    return v;
}

std::uint32_t reply::RegData::value() const noexcept {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < bytes.size() && i < 4; ++i) v |= std::uint32_t{bytes[i]} << (8 * i);
    return v;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool valid_width(std::uint32_t length) { return length == 1 || length == 2 || length == 4; }

void expect_size(std::span<const std::uint8_t> buf, std::size_t size, std::string_view what) {
    if (buf.size() != size) {
        throw Error(Errc::BadLength, std::string(what) + ": expected " + std::to_string(size) + " bytes, got " +
                                         std::to_string(buf.size()));
    }
}

} // namespace

std::string_view command_name(const SpwCommand& command) noexcept {
    return std::visit(overloaded{
                          [](const cmd::GetBar0Addr&) { return std::string_view("GetBar0Addr"); },
                          [](const cmd::ReadReg&) { return std::string_view("ReadReg"); },
                          [](const cmd::WriteReg&) { return std::string_view("WriteReg"); },
                          [](const cmd::LinkEnable&) { return std::string_view("LinkEnable"); },
                          [](const cmd::LinkReset&) { return std::string_view("LinkReset"); },
                          [](const cmd::PortDiscovery&) { return std::string_view("PortDiscovery"); },
                          [](const cmd::AcquireData&) { return std::string_view("AcquireData"); },
                      },
                      command);
}

SpwFunction command_function(const SpwCommand& command) noexcept {
    static constexpr SpwFunction kByIndex[] = {SpwFunction::GetBar0Addr, SpwFunction::ReadReg,
                                               SpwFunction::WriteReg,    SpwFunction::LinkEnable,
                                               SpwFunction::LinkReset,   SpwFunction::PortDiscovery,
                                               SpwFunction::AcquireData};
    return kByIndex[command.index()];
}

EncodedRequest encode_command(const SpwCommand& command) {
    EncodedRequest req;
    req.ctl_code = control_code(command_function(command));
    std::visit(overloaded{
                   [](const cmd::GetBar0Addr&) {},
                   [&](const cmd::ReadReg& c) {
                       if (!valid_width(c.length)) {
                           throw Error(Errc::FieldOutOfRange, "ReadReg length " + std::to_string(c.length));
                       }
                       put_u32(req.input, c.offset);
                       put_u32(req.input, c.length);
                   },
                   [&](const cmd::WriteReg& c) {
                       if (!valid_width(c.length) || c.data.size() != c.length) {
                           throw Error(Errc::FieldOutOfRange, "WriteReg length " + std::to_string(c.length) +
                                                                  " with " + std::to_string(c.data.size()) +
                                                                  " data bytes");
                       }
                       put_u32(req.input, c.offset);
                       put_u32(req.input, c.length);
                       req.input.insert(req.input.end(), c.data.begin(), c.data.end());
                   },
                   [&](const cmd::LinkEnable& c) { put_u32(req.input, c.port); },
                   [&](const cmd::LinkReset& c) { put_u32(req.input, c.port); },
                   [](const cmd::PortDiscovery&) {},
                   [&](const cmd::AcquireData& c) { put_u32(req.input, c.max_bytes); },
               },
               command);
    return req;
}

SpwCommand decode_request(std::uint32_t ctl_code, std::span<const std::uint8_t> input) {
    const CtlCode code = decode_ctl_code(ctl_code);
    if (code.device_type != kSpwDeviceType || code.method != kMethodBuffered || code.access != kFileAnyAccess) {
        throw Error(Errc::UnknownControlCode, std::to_string(ctl_code));
    }
    switch (static_cast<SpwFunction>(code.function)) {
    case SpwFunction::GetBar0Addr:
        expect_size(input, 0, "GetBar0Addr input");
        return cmd::GetBar0Addr{};
    case SpwFunction::ReadReg:
        expect_size(input, 8, "ReadReg input");
        return cmd::ReadReg{get_u32(input, 0), get_u32(input, 4)};
    case SpwFunction::WriteReg: {
        if (input.size() < 8) throw Error(Errc::BadLength, "WriteReg input header");
        cmd::WriteReg c{get_u32(input, 0), get_u32(input, 4), {}};
        expect_size(input, 8 + std::size_t{c.length}, "WriteReg input");
        c.data.assign(input.begin() + 8, input.end());
        return c;
    }
    case SpwFunction::LinkEnable:
        expect_size(input, 4, "LinkEnable input");
        return cmd::LinkEnable{get_u32(input, 0)};
    case SpwFunction::LinkReset:
        expect_size(input, 4, "LinkReset input");
        return cmd::LinkReset{get_u32(input, 0)};
    case SpwFunction::PortDiscovery:
        expect_size(input, 0, "PortDiscovery input");
        return cmd::PortDiscovery{};
    case SpwFunction::AcquireData:
        expect_size(input, 4, "AcquireData input");
        return cmd::AcquireData{get_u32(input, 0)};
    }
    throw Error(Errc::UnknownControlCode, "function " + std::to_string(code.function));
}

std::vector<std::uint8_t> encode_response(const SpwResult& result) {
    std::vector<std::uint8_t> out;
    std::visit(overloaded{
                   [&](const reply::Bar0Addr& r) { put_u64(out, r.phys); },
                   [&](const reply::RegData& r) { out = r.bytes; },
                   [&](const reply::Written& r) { put_u32(out, r.count); },
                   [&](const reply::LinkStatus& r) { put_u32(out, r.status); },
                   [&](const reply::PortMask& r) { put_u32(out, r.mask); },
                   [&](const reply::Acquired& r) { out = r.frames; },
               },
               result);
    return out;
}

SpwResult decode_response(const SpwCommand& command, std::span<const std::uint8_t> output) {
    return std::visit(
        overloaded{
            [&](const cmd::GetBar0Addr&) -> SpwResult {
                expect_size(output, 8, "GetBar0Addr output");
                return reply::Bar0Addr{get_u64(output, 0)};
            },
            [&](const cmd::ReadReg& c) -> SpwResult {
                expect_size(output, c.length, "ReadReg output");
                return reply::RegData{{output.begin(), output.end()}};
            },
            [&](const cmd::WriteReg&) -> SpwResult {
                expect_size(output, 4, "WriteReg output");
                return reply::Written{get_u32(output, 0)};
            },
            [&](const cmd::LinkEnable&) -> SpwResult {
                expect_size(output, 4, "LinkEnable output");
                return reply::LinkStatus{get_u32(output, 0)};
            },
            [&](const cmd::LinkReset&) -> SpwResult {
                expect_size(output, 4, "LinkReset output");
                return reply::LinkStatus{get_u32(output, 0)};
            },
            [&](const cmd::PortDiscovery&) -> SpwResult {
                expect_size(output, 4, "PortDiscovery output");
                return reply::PortMask{get_u32(output, 0)};
            },
            [&](const cmd::AcquireData& c) -> SpwResult {
                if (output.size() > c.max_bytes) {
                    throw Error(Errc::BadLength, "AcquireData output exceeds max_bytes");
                }
                split_frames(output);
                return reply::Acquired{{output.begin(), output.end()}};
            },
        },
        command);
}

std::vector<std::vector<std::uint8_t>> split_frames(std::span<const std::uint8_t> frames) {
    std::vector<std::vector<std::uint8_t>> out;
    std::size_t at = 0;
    while (at < frames.size()) {
        const std::uint32_t len = get_u32(frames, at);
        if (len > frames.size() - at - 4) {
            throw Error(Errc::BadLength, "torn frame at byte " + std::to_string(at));
        }
        out.emplace_back(frames.begin() + static_cast<std::ptrdiff_t>(at + 4),
                         frames.begin() + static_cast<std::ptrdiff_t>(at + 4 + len));
        at += 4 + std::size_t{len};
    }
    return out;
}

} // namespace spw::ioctl
