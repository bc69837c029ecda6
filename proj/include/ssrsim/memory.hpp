#pragma once

#include <cstdint>
#include <vector>

#include "ssrsim/isa.hpp"

namespace ssrsim {

// Flat little-endian byte-addressed memory with a word-interleaved bank
// timing model. Functional state and timing state are kept together but are
// independent: functional accessors never touch bank bookkeeping.
//
// Timing contract: a requester that wants bank service at cycle t receives a
// grant cycle g >= t (g == t when the bank is free; queued requests serialize
// one per cycle per bank). Loaded data is usable the cycle after the grant.
// In ideal mode every request is granted immediately (conflict-free ports).
class Memory {
public:
    explicit Memory(uint64_t size_bytes, unsigned banks = 32, bool banked = false)
        : data_(size_bytes, 0), bank_free_(banks, 0), banks_(banks), banked_(banked) {}

    uint64_t size() const { return data_.size(); }
    unsigned banks() const { return banks_; }
    bool banked() const { return banked_; }

    unsigned bank_of(uint64_t addr) const { return unsigned((addr >> 3) % banks_); }

    // Throws SimFault on out-of-range or misaligned access.
    void check(uint64_t addr, unsigned bytes) const {
        if (addr + bytes > data_.size() || addr + bytes < addr)
            throw SimFault("memory access out of range: addr " + std::to_string(addr) +
                           " size " + std::to_string(bytes));
        if (bytes != 1 && (addr & (bytes - 1)) != 0)
            throw SimFault("misaligned " + std::to_string(bytes) + "-byte access at " +
                           std::to_string(addr));
    }

    bool in_range(uint64_t addr, unsigned bytes) const {
        return addr + bytes <= data_.size() && addr + bytes >= addr;
    }

    uint64_t load_uint(uint64_t addr, unsigned bytes) const {
        check(addr, bytes);
        uint64_t v = 0;
        for (unsigned i = 0; i < bytes; ++i) v |= uint64_t(data_[addr + i]) << (8 * i);
        ++reads_;
        return v;
    }

    void store_uint(uint64_t addr, unsigned bytes, uint64_t value) {
        check(addr, bytes);
        for (unsigned i = 0; i < bytes; ++i) data_[addr + i] = uint8_t(value >> (8 * i));
        ++writes_;
    }

    double load_f64(uint64_t addr) const {
        uint64_t bits = load_uint(addr, 8);
        double d;
        static_assert(sizeof d == sizeof bits);
        __builtin_memcpy(&d, &bits, sizeof d);
        return d;
    }

    void store_f64(uint64_t addr, double v) {
        uint64_t bits;
        __builtin_memcpy(&bits, &v, sizeof bits);
        store_uint(addr, 8, bits);
    }

    // Claim one bank slot for the access at `addr`, wanted at cycle `cycle`.
    // Returns the grant cycle (== cycle if no conflict). Requests must be
    // issued in global priority order within each cycle.
    uint64_t request(uint64_t cycle, uint64_t addr) {
        if (!banked_) return cycle;
        unsigned b = bank_of(addr);
        uint64_t g = cycle > bank_free_[b] ? cycle : bank_free_[b];
        bank_free_[b] = g + 1;
        if (g != cycle) ++conflicts_;
        return g;
    }

    // Reserve a bank outright for `cycle` (DMA traffic; issued before all
    // core/lane requests of that cycle).
    void occupy(uint64_t cycle, unsigned bank) {
        if (!banked_) return;
        if (bank_free_[bank] <= cycle) bank_free_[bank] = cycle + 1;
    }

    void reset_timing() {
        for (auto& f : bank_free_) f = 0;
        conflicts_ = 0;
    }

    // Functional traffic counters (phantom-traffic checks in tests).
    uint64_t read_count() const { return reads_; }
    uint64_t write_count() const { return writes_; }
    uint64_t conflict_count() const { return conflicts_; }
    void reset_counters() { reads_ = writes_ = 0; }

    uint8_t* raw() { return data_.data(); }
    const uint8_t* raw() const { return data_.data(); }

private:
    std::vector<uint8_t> data_;
    std::vector<uint64_t> bank_free_;
    unsigned banks_;
    bool banked_;
    mutable uint64_t reads_ = 0;
    uint64_t writes_ = 0;
    uint64_t conflicts_ = 0;
};

} // namespace ssrsim
