#include <charconv>
#include <cstdio>
#include <istream>
#include <string>

#include "spw/ioctl/protocol.hpp"

namespace spw::ioctl {

std::uint32_t encode_ctl_code(std::uint32_t device_type, std::uint32_t access, std::uint32_t function,
                              std::uint32_t method) {
    if (device_type > kMaxDeviceType || access > kMaxAccess || function > kMaxFunction || method > kMaxMethod) {
        throw Error(Errc::FieldOutOfRange, "CTL_CODE field exceeds its bit width");
    }
    return (device_type << 16) | (access << 14) | (function << 2) | method;
}

CtlCode decode_ctl_code(std::uint32_t word) noexcept {
    return CtlCode{static_cast<std::uint16_t>(word >> 16), static_cast<std::uint8_t>((word >> 14) & kMaxAccess),
                   static_cast<std::uint16_t>((word >> 2) & kMaxFunction), static_cast<std::uint8_t>(word & kMaxMethod)};
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Decimal, or hex with a 0x prefix.
std::uint32_t parse_number(std::string_view text, int default_base) {
    text = trim(text);
    int base = default_base;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        text.remove_prefix(2);
        base = 16;
    }
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(Errc::FieldOutOfRange, "bad number '" + std::string(text) + "'");
    }
    return value;
}

} // namespace

std::vector<GoldenVector> parse_golden_vectors(std::istream& in) {
    std::vector<GoldenVector> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto tab = view.find('\t');
        if (tab == std::string_view::npos) {
            throw Error(Errc::FieldOutOfRange, "golden line without TAB: " + line);
        }
        GoldenVector v;
        v.word = parse_number(view.substr(0, tab), 16);
        std::string_view rest = view.substr(tab + 1);
        std::uint32_t fields[4];
        for (int i = 0; i < 4; ++i) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (i == 3)) {
                throw Error(Errc::FieldOutOfRange, "golden line needs four fields: " + line);
            }
            fields[i] = parse_number(rest.substr(0, comma), 10);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        if (fields[0] > kMaxDeviceType || fields[1] > kMaxAccess || fields[2] > kMaxFunction || fields[3] > kMaxMethod) {
            throw Error(Errc::FieldOutOfRange, "golden field exceeds bit width: " + line);
        }
        v.fields = CtlCode{static_cast<std::uint16_t>(fields[0]), static_cast<std::uint8_t>(fields[1]),
                           static_cast<std::uint16_t>(fields[2]), static_cast<std::uint8_t>(fields[3])};
        out.push_back(v);
    }
    return out;
}

std::string format_golden_vector(const GoldenVector& v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%08X\t0x%X,%u,0x%X,%u", v.word, unsigned{v.fields.device_type},
                  unsigned{v.fields.access}, unsigned{v.fields.function}, unsigned{v.fields.method});
    return buf;
}

} // namespace spw::ioctl
