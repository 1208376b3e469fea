#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "spw/ioctl/protocol.hpp"

namespace spw::wdf {

// Install manifest: a minimal INI subset of an INF file.

struct DriverVersion {
    unsigned month = 1;
    unsigned day = 1;
    unsigned year = 2000;
    std::array<std::uint16_t, 4> version{};
    friend bool operator==(const DriverVersion&, const DriverVersion&) = default;

    // "MM/DD/YYYY,a.b.c.d"
    static DriverVersion parse(std::string_view text);
    std::string to_string() const;
};

struct InstallManifest {
    std::string device_class;
    std::string provider;
    DriverVersion driver_version;
    ioctl::Guid interface_guid;
    friend bool operator==(const InstallManifest&, const InstallManifest&) = default;
};

InstallManifest parse_install_manifest(std::string_view text);
std::string serialize_install_manifest(const InstallManifest& manifest);

} // namespace spw::wdf
