#pragma once

#include <array>
#include <cstdint>
#include <deque>

#include "ssrsim/isa.hpp"
#include "ssrsim/memory.hpp"
#include "ssrsim/streamer.hpp"

namespace ssrsim {

struct MachineConfig {
    unsigned fpu_latency = 3; // cycles from FP issue to result availability
    unsigned fpu_queue = 8;   // dispatch queue entries (descriptors + ops)
    StreamerConfig streamer;
    uint64_t watchdog = 100'000'000; // cycle budget, 0 disables
    // First cycle this core acts. Cluster engines join a shared-memory
    // timeline mid-flight; bank arbitration needs their absolute time.
    uint64_t start_cycle = 0;
};

// Every simulated cycle is either an instruction issue or exactly one stall
// bucket; run() checks the books balance.
struct SimReport {
    uint64_t total_cycles = 0;
    uint64_t instructions = 0;
    uint64_t fpu_busy = 0; // cycles an FP compute op issued
    uint64_t stall_stream_data = 0;
    uint64_t stall_stream_control = 0;
    uint64_t stall_bank_conflict = 0;
    uint64_t stall_dependency = 0;
    uint64_t stall_fence_drain = 0;
    uint64_t stall_icache = 0; // cluster-injected, zero in single-core runs
    LaneStats lanes[3];
    uint64_t comparator_events = 0;
    uint64_t setup_first = ~0ull; // scfgw burst before the first FP issue
    uint64_t setup_last = 0;
    uint64_t mem_reads = 0, mem_writes = 0, bank_conflicts = 0;

    uint64_t stalls_total() const {
        return stall_stream_data + stall_stream_control + stall_bank_conflict +
               stall_dependency + stall_fence_drain + stall_icache;
    }
    double utilization() const {
        return total_cycles ? double(fpu_busy) / double(total_cycles) : 0.0;
    }
    uint64_t setup_span() const {
        return setup_first == ~0ull ? 0 : setup_last - setup_first + 1;
    }
};

class CoreEngine {
public:
    CoreEngine(Program prog, Memory& mem, MachineConfig cfg = {});

    // Advance one cycle. Returns false once the core has halted.
    bool step();
    // Step to completion and return the final report.
    SimReport run();

    bool halted() const { return halted_; }
    uint64_t now() const { return cycle_; }
    // Swap in a new program on a drained, halted core (cluster chunk switch).
    void load_program(Program prog);
    void add_icache_stall(uint64_t cycles) { rpt_.stall_icache += cycles; }

    SimReport& report() { return rpt_; }
    const Streamer& streamer() const { return ssr_; }

    uint64_t xreg(unsigned r) const { return x_[r]; }
    double freg(unsigned r) const { return f_[r]; }
    void set_xreg(unsigned r, uint64_t v) {
        if (r) x_[r] = v;
    }

private:
    enum class Blocker { Idle, StreamData, StreamControl, Dependency, BodyWait };

    struct FpuEntry {
        Instruction ins;
        bool is_desc = false;
        bool is_body = false;
        bool token_mode = false;
        uint64_t iterations = 0;
        uint32_t reads = 0, writes = 0; // FP register masks, stagger-expanded
    };

    void core_issue();
    void fpu_issue();
    bool fp_operands_ready(const Instruction& ins, Blocker& why) const;
    void fp_execute(const Instruction& ins);
    bool is_stream_reg(unsigned r) const;
    void stall(uint64_t& counter) { ++counter; }
    void note_enqueue(FpuEntry& e);
    void recompute_masks();
    Instruction staggered(const Instruction& body, const FpuEntry& desc, uint64_t iter) const;
    bool drained(bool include_reads) const;
    uint64_t fpu_stall_counter();
    static uint32_t reg_mask(const FpuEntry& desc_like, uint8_t r, unsigned stagger_count,
                             unsigned stagger_base);

    Program prog_;
    Memory& mem_;
    MachineConfig cfg_;
    Streamer ssr_;
    SimReport rpt_;

    uint64_t cycle_ = 0;
    uint64_t pc_ = 0;
    bool halted_ = false;
    bool ssr_enabled_ = false;
    std::array<uint64_t, 32> x_{};
    std::array<double, 32> f_{};
    std::array<uint64_t, 32> fp_ready_{}; // cycle the register value lands

    // in-flight core memory op
    bool mem_wait_ = false;
    uint64_t mem_grant_ = 0;
    Instruction mem_ins_{};
    uint64_t mem_addr_ = 0;
    bool core_port_busy_ = false; // this cycle, for ISSR0 arbitration

    bool bubble_ = false; // mispredicted branch slot

    // FPU dispatch queue + loop sequencer
    std::deque<FpuEntry> fpu_q_;
    bool seq_active_ = false;
    uint64_t seq_iter_ = 0;
    unsigned seq_body_pos_ = 0;
    uint32_t pend_reads_ = 0, pend_writes_ = 0;
    uint64_t last_fp_ready_ = 0;
    Blocker fpu_block_ = Blocker::Idle;
    unsigned body_remaining_ = 0; // body ops the core still owes the queue

    bool setup_frozen_ = false;
};

} // namespace ssrsim
