#include "spw/device/card.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace spw::dev {

namespace {

std::uint64_t width_mask(unsigned width) {
    return width >= 8 ? ~std::uint64_t{0} : (std::uint64_t{1} << (8 * width)) - 1;
}

void store_le(std::uint8_t* dst, std::uint64_t value, unsigned width) {
    for (unsigned i = 0; i < width; ++i) {
        dst[i] = static_cast<std::uint8_t>(value >> (8 * i));
    }
}

std::uint64_t load_le(const std::uint8_t* src, unsigned width) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
        v |= std::uint64_t{src[i]} << (8 * i);
    }
    return v;
}

} // namespace

Card::Card(PortLinkControl* ports) : ports_(ports), bar2_ram_(kBar2Size, 0) { reset(); }

void Card::reset() {
    latched_.clear();
    for (const auto& spec : kRegisterMap) {
        if (spec.kind == RegisterKind::ReadWrite) {
            latched_[spec.offset] = spec.reset_value;
        }
    }
    std::fill(bar2_ram_.begin(), bar2_ram_.end(), 0);
    fifo_write_cursor_ = 0;
    sample_latch_ = {};
    sample_count_ = 0;
    dropped_ = 0;
}

void Card::check_width(unsigned width) {
    if (width != 1 && width != 2 && width != 4) {
        throw Error(Errc::OutOfRange, "unsupported MMIO width " + std::to_string(width));
    }
}

std::uint32_t Card::register_value(std::uint32_t offset) const {
    switch (offset) {
    case reg::kDeviceId: return kDeviceIdValue;
    case reg::kVersion: return kVersionValue;
    case reg::kPortStatus: return ports_ != nullptr ? ports_->run_mask() : 0;
    case reg::kAccX: return static_cast<std::uint32_t>(sample_latch_[0]);
    case reg::kAccY: return static_cast<std::uint32_t>(sample_latch_[1]);
    case reg::kAccZ: return static_cast<std::uint32_t>(sample_latch_[2]);
    case reg::kSampleCount: return sample_count_;
    case reg::kFifoLevel: return fifo_write_cursor_;
    case reg::kDropCount: return dropped_;
    case reg::kPortCount: return ports_ != nullptr ? ports_->port_count() : 0;
    case reg::kLinkReset:
    case reg::kFifoCtrl: return 0;
    default: break;
    }
    auto it = latched_.find(offset);
    return it == latched_.end() ? 0 : it->second;
}

std::uint64_t Card::mmio_read(unsigned bar, std::uint64_t offset, unsigned width) {
    check_width(width);
    ++access_count_;
    if (bar == 0) {
        if (offset + width > kBar0Size) {
            throw Error(Errc::OutOfRange, "BAR0 offset " + std::to_string(offset));
        }
        auto spec = find_register(offset, width);
        if (!spec) {
            throw Error(Errc::UndefinedRegister, "BAR0 offset " + std::to_string(offset));
        }
        const unsigned shift = static_cast<unsigned>(offset - spec->offset) * 8;
        return (std::uint64_t{register_value(spec->offset)} >> shift) & width_mask(width);
    }
    if (bar == 2) {
        if (offset + width > kBar2Size) {
            throw Error(Errc::OutOfRange, "BAR2 offset " + std::to_string(offset));
        }
        return load_le(bar2_ram_.data() + offset, width);
    }
    throw Error(Errc::OutOfRange, "no BAR" + std::to_string(bar));
}

void Card::mmio_write(unsigned bar, std::uint64_t offset, unsigned width, std::uint64_t value) {
    check_width(width);
    ++access_count_;
    value &= width_mask(width);
    if (bar == 0) {
        if (offset + width > kBar0Size) {
            throw Error(Errc::OutOfRange, "BAR0 offset " + std::to_string(offset));
        }
        auto spec = find_register(offset, width);
        if (!spec) {
            throw Error(Errc::UndefinedRegister, "BAR0 offset " + std::to_string(offset));
        }
        const unsigned shift = static_cast<unsigned>(offset - spec->offset) * 8;
        const std::uint32_t field = static_cast<std::uint32_t>(width_mask(width) << shift);
        const std::uint32_t bits = static_cast<std::uint32_t>(value << shift);
        const std::uint32_t merged = (register_value(spec->offset) & ~field) | bits;
        write_register(*spec, merged, bits);
        return;
    }
    if (bar == 2) {
        if (offset + width > kBar2Size) {
            throw Error(Errc::OutOfRange, "BAR2 offset " + std::to_string(offset));
        }
        store_le(bar2_ram_.data() + offset, value, width);
        return;
    }
    throw Error(Errc::OutOfRange, "no BAR" + std::to_string(bar));
}

void Card::write_register(const RegisterSpec& spec, std::uint32_t merged, std::uint32_t set_bits) {
    switch (spec.kind) {
    case RegisterKind::ReadOnly:
        return;
    case RegisterKind::ReadWrite:
        latched_[spec.offset] = merged;
        if (spec.offset == reg::kLinkEnable && ports_ != nullptr) {
            const unsigned n = std::min(ports_->port_count(), 32u);
            for (unsigned i = 0; i < n; ++i) {
                ports_->port_action(i + 1, (merged >> i) & 1u ? PortAction::Enable : PortAction::Disable);
            }
        }
        return;
    case RegisterKind::WriteOneSelfClear:
        if (spec.offset == reg::kLinkReset && ports_ != nullptr) {
            const unsigned n = std::min(ports_->port_count(), 32u);
            for (unsigned i = 0; i < n; ++i) {
                if ((set_bits >> i) & 1u) {
                    ports_->port_action(i + 1, PortAction::Reset);
                }
            }
        } else if (spec.offset == reg::kFifoCtrl && (set_bits & 1u)) {
            drain_fifo();
        }
        return;
    }
}

void Card::deliver_packet(unsigned /*port*/, std::span<const std::uint8_t> payload) {
    const std::uint64_t room = kBar2Size - fifo_write_cursor_;
    if (room < kFrameHeaderBytes || payload.size() > room - kFrameHeaderBytes) {
        ++dropped_;
        throw Error(Errc::FifoOverflow, std::to_string(payload.size()) + "-byte packet, " + std::to_string(room) +
                                            " bytes free");
    }
    std::uint8_t* dst = bar2_ram_.data() + fifo_write_cursor_;
    store_le(dst, payload.size(), kFrameHeaderBytes);
    std::copy(payload.begin(), payload.end(), dst + kFrameHeaderBytes);
    fifo_write_cursor_ += kFrameHeaderBytes + static_cast<std::uint32_t>(payload.size());

    if (payload.size() == kSampleBytes) {
        for (unsigned axis = 0; axis < 3; ++axis) {
            sample_latch_[axis] = static_cast<std::int32_t>(load_le(payload.data() + 4 * axis, 4));
        }
        ++sample_count_;
    }
}

std::vector<std::uint8_t> Card::drain_fifo() {
    std::vector<std::uint8_t> out(bar2_ram_.begin(), bar2_ram_.begin() + fifo_write_cursor_);
    fifo_write_cursor_ = 0;
    return out;
}

RegisterSnapshot Card::snapshot() const {
    RegisterSnapshot snap;
    for (const auto& spec : kRegisterMap) {
        snap.values[spec.offset] = register_value(spec.offset);
    }
    snap.fifo_write_cursor = fifo_write_cursor_;
    return snap;
}

} // namespace spw::dev
