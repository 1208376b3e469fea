#include "spw/wdf/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>

#include "spw/error.hpp"

namespace spw::wdf {

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

// Drops a trailing ';' comment that is not inside double quotes.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == ';' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string unquote(std::string_view value) {
    value = trim(value);
    if (value.size() < 2 || value.front() != '"' || value.back() != '"') {
        return std::string(value);
    }
    // Inside quotes a doubled quote stands for one literal quote.
    std::string out;
    value = value.substr(1, value.size() - 2);
    for (std::size_t i = 0; i < value.size(); ++i) {
        out += value[i];
        if (value[i] == '"' && i + 1 < value.size() && value[i + 1] == '"') ++i;
    }
    return out;
}

bool needs_quotes(const std::string& value) {
    return value.find(';') != std::string::npos || value.find('"') != std::string::npos ||
           (!value.empty() && (std::isspace(static_cast<unsigned char>(value.front())) ||
                               std::isspace(static_cast<unsigned char>(value.back()))));
}

template <class T>
bool parse_int(std::string_view text, T& out, std::size_t min_digits, std::size_t max_digits) {
    if (text.size() < min_digits || text.size() > max_digits) return false;
    if (!std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

Sections parse_sections(std::string_view text) {
    Sections sections;
    std::map<std::string, std::string>* current = nullptr;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        line = trim(strip_comment(line));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string_view::npos) {
                throw Error(Errc::MissingSection, "unterminated section header '" + std::string(line) + "'");
            }
            current = &sections[lower(trim(line.substr(1, close - 1)))];
            continue;
        }
        const auto eq = line.find('=');
        if (current == nullptr || eq == std::string_view::npos) {
            continue; // directive lines outside key=value form are not part of the subset
        }
        (*current)[lower(trim(line.substr(0, eq)))] = unquote(line.substr(eq + 1));
    }
    return sections;
}

const std::string& require(const Sections& sections, const std::string& section, const std::string& key) {
    auto s = sections.find(section);
    if (s == sections.end()) {
        throw Error(Errc::MissingSection, "[" + section + "]");
    }
    auto k = s->second.find(key);
    if (k == s->second.end() || k->second.empty()) {
        throw Error(Errc::MissingKey, section + "." + key);
    }
    return k->second;
}

} // namespace

DriverVersion DriverVersion::parse(std::string_view text) {
    auto bad = [&] { return Error(Errc::BadVersionFormat, "'" + std::string(text) + "'"); };
    text = trim(text);
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw bad();
    const std::string_view date = trim(text.substr(0, comma));
    std::string_view ver = trim(text.substr(comma + 1));

    DriverVersion v;
    const auto s1 = date.find('/');
    const auto s2 = s1 == std::string_view::npos ? s1 : date.find('/', s1 + 1);
    if (s2 == std::string_view::npos) throw bad();
    if (!parse_int(date.substr(0, s1), v.month, 1, 2) || !parse_int(date.substr(s1 + 1, s2 - s1 - 1), v.day, 1, 2) ||
        !parse_int(date.substr(s2 + 1), v.year, 4, 4)) {
        throw bad();
    }
    if (v.month < 1 || v.month > 12 || v.day < 1 || v.day > 31) throw bad();

    for (std::size_t i = 0; i < 4; ++i) {
        const auto dot = ver.find('.');
        if ((dot == std::string_view::npos) != (i == 3)) throw bad();
        unsigned part = 0;
        if (!parse_int(ver.substr(0, dot), part, 1, 5) || part > 0xFFFF) throw bad();
        v.version[i] = static_cast<std::uint16_t>(part);
        ver = dot == std::string_view::npos ? std::string_view{} : ver.substr(dot + 1);
    }
    return v;
}

std::string DriverVersion::to_string() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%02u/%02u/%04u,%u.%u.%u.%u", month, day, year, unsigned{version[0]},
                  unsigned{version[1]}, unsigned{version[2]}, unsigned{version[3]});
    return buf;
}

InstallManifest parse_install_manifest(std::string_view text) {
    const Sections sections = parse_sections(text);
    InstallManifest m;
    m.device_class = require(sections, "version", "class");
    m.provider = require(sections, "version", "provider");
    m.driver_version = DriverVersion::parse(require(sections, "version", "driverver"));
    m.interface_guid = ioctl::Guid::parse(require(sections, "interface", "guid"));
    return m;
}

std::string serialize_install_manifest(const InstallManifest& m) {
    auto value = [](const std::string& v) {
        if (!needs_quotes(v)) return v;
        std::string quoted = "\"";
        for (char c : v) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        return quoted + "\"";
    };
    std::string out;
    out += "[Version]\n";
    out += "Class=" + value(m.device_class) + "\n";
    out += "Provider=" + value(m.provider) + "\n";
    out += "DriverVer=" + m.driver_version.to_string() + "\n";
    out += "\n[Interface]\n";
    out += "Guid={" + m.interface_guid.to_string() + "}\n";
    return out;
}

} // namespace spw::wdf
