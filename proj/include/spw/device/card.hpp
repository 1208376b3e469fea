#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "spw/device/registers.hpp"
#include "spw/kernel/kernel.hpp"

namespace spw::dev {

enum class PortAction { Enable, Disable, Reset };

// What the card can see of the SpaceWire side: per-port link control and the
// set of ports whose link is running.
class PortLinkControl {
public:
    virtual ~PortLinkControl() = default;
    virtual unsigned port_count() const = 0;
    virtual void port_action(unsigned port, PortAction action) = 0;
    virtual std::uint32_t run_mask() const = 0;
};

struct RegisterSnapshot {
    std::map<std::uint32_t, std::uint32_t> values; // offset -> value as read
    std::uint32_t fifo_write_cursor = 0;
};

// Emulated PCIe-SpaceWire interface card.
//
// BAR0 is the control/status register file (see registers.hpp); BAR2 is a
// linear packet buffer holding [u32 length][payload] frames written by
// deliver_packet. Reads have no side effects. Writes to read-only registers
// are dropped, write-one-self-clear registers act per set bit and read 0.
class Card final : public kernel::MmioTarget {
public:
    explicit Card(PortLinkControl* ports = nullptr);

    void attach_ports(PortLinkControl* ports) { ports_ = ports; }
    void reset();

    std::uint64_t mmio_read(unsigned bar, std::uint64_t offset, unsigned width) override;
    void mmio_write(unsigned bar, std::uint64_t offset, unsigned width, std::uint64_t value) override;

    // Throws Error(FifoOverflow) and counts the drop when the frame does not fit.
    void deliver_packet(unsigned port, std::span<const std::uint8_t> payload);
    std::vector<std::uint8_t> drain_fifo();

    std::uint32_t fifo_level() const noexcept { return fifo_write_cursor_; }
    std::uint32_t dropped_packets() const noexcept { return dropped_; }
    std::uint32_t sample_count() const noexcept { return sample_count_; }
    std::uint64_t mmio_access_count() const noexcept { return access_count_; }

    RegisterSnapshot snapshot() const;

private:
    std::uint32_t register_value(std::uint32_t offset) const;
    void write_register(const RegisterSpec& spec, std::uint32_t merged, std::uint32_t set_bits);
    static void check_width(unsigned width);

    PortLinkControl* ports_;
    std::map<std::uint32_t, std::uint32_t> latched_;
    std::vector<std::uint8_t> bar2_ram_;
    std::uint32_t fifo_write_cursor_ = 0;
    std::array<std::int32_t, 3> sample_latch_{};
    std::uint32_t sample_count_ = 0;
    std::uint32_t dropped_ = 0;
    std::uint64_t access_count_ = 0;
};

} // namespace spw::dev
