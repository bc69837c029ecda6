#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "ssrsim/formats.hpp"
#include "ssrsim/isa.hpp"
#include "ssrsim/memory.hpp"

namespace ssrsim {

// ---------------------------------------------------------------------------
// Stream configuration
// ---------------------------------------------------------------------------

enum class StreamMode : uint8_t {
    Affine = 0,
    Indirect = 1,
    MatchIntersect = 2,
    MatchUnion = 3,
    Egress = 4,
};

enum class StreamDir : uint8_t { Read = 0, Write = 1 };

// Config register ids, one register file per lane. DATA_BASE is the launch
// trigger: writing it commits the shadow set as a job.
enum CfgReg : uint8_t {
    kCfgCtrl = 0,
    kCfgBound0 = 1,
    kCfgStride0 = 2,
    kCfgBound1 = 3,
    kCfgStride1 = 4,
    kCfgBound2 = 5,
    kCfgStride2 = 6,
    kCfgBound3 = 7,
    kCfgStride3 = 8,
    kCfgIdxBase = 9,
    kCfgDataBase = 10,
    kCfgLength = 11, // read-only: element count of the last drained egress job
    kCfgStatus = 12, // read-only: bit0 job active, bit1 job pending
};

// Sentinel bound for endless read streams (prefetch parks at memory end; the
// job is cancelled by SSR_DISABLE rather than completing).
constexpr uint64_t kUnbounded = ~0ull;

// CTRL word layout: [2:0] mode, [3] dir, [6:4] log2(index bytes),
// [12:8] shift, [21:16] idx_lead.
constexpr uint64_t make_ctrl(StreamMode mode, StreamDir dir, IndexWidth width, unsigned shift,
                             unsigned idx_lead) {
    return uint64_t(mode) | (uint64_t(dir) << 3) |
           (uint64_t(width == IndexWidth::W8    ? 0
                     : width == IndexWidth::W16 ? 1
                     : width == IndexWidth::W32 ? 2
                                                : 3)
            << 4) |
           (uint64_t(shift & 31) << 8) | (uint64_t(idx_lead & 63) << 16);
}

struct LaneConfig {
    StreamMode mode = StreamMode::Affine;
    StreamDir dir = StreamDir::Read;
    IndexWidth width = IndexWidth::W64;
    unsigned shift = 0;
    unsigned idx_lead = 4;
    uint64_t bound[4] = {kUnbounded, 1, 1, 1};
    uint64_t stride[4] = {8, 0, 0, 0};
    uint64_t idx_base = 0;
    uint64_t data_base = 0;
    bool idx_base_set = false;

    void apply_ctrl(uint64_t v);
    uint64_t ctrl_word() const;
};

// ---------------------------------------------------------------------------
// Pure stream semantics (unit-testable without the cycle engine)
// ---------------------------------------------------------------------------

// Nested-loop affine enumeration, level 0 innermost:
// addr = base + sum(counter[l] * stride[l]); total = product of bounds.
// A zero bound yields an empty sequence.
std::vector<uint64_t> affine_addresses(uint64_t base,
                                       const std::vector<std::pair<uint64_t, uint64_t>>& loops);

// Extract `count` indices of the given width from consecutive 64-bit memory
// words, starting `first_offset` bytes into words[0]. Little-endian lanes.
std::vector<uint64_t> serialize_indices(const std::vector<uint64_t>& words, unsigned first_offset,
                                        uint64_t count, IndexWidth width);

// Pack indices into consecutive 64-bit words (inverse of serialize_indices
// at offset 0; values are truncated to the index width).
std::vector<uint64_t> coalesce_indices(const std::vector<uint64_t>& indices, IndexWidth width);

inline uint64_t indirect_address(uint64_t base, unsigned shift, uint64_t index) {
    return base + (index << shift);
}

std::vector<uint64_t> indirect_addresses(uint64_t base, unsigned shift,
                                         const std::vector<uint64_t>& indices);

enum class JointKind : uint8_t { Pair, LeftOnly, RightOnly, Done };

struct JointEvent {
    JointKind kind;
    uint64_t index;
};

// Merge two strictly increasing index streams. Intersect emits Pair per
// common index then Done; Union emits one event per union element then Done.
std::vector<JointEvent> compare_streams(const std::vector<uint64_t>& left,
                                        const std::vector<uint64_t>& right, bool is_union);

// ---------------------------------------------------------------------------
// Cycle-level streamer
// ---------------------------------------------------------------------------

struct StreamerConfig {
    unsigned fifo_depth = 4;       // data FIFO slots per lane
    unsigned idx_fifo = 8;         // decoded index capacity per lane
    unsigned max_outstanding = 4;  // inflight memory requests per lane
    unsigned directive_queue = 4;  // comparator -> lane directive backlog
    unsigned token_queue = 8;      // stream-control tokens
};

struct LaneStats {
    uint64_t delivered = 0;      // values handed to the register port
    uint64_t injected_zero = 0;  // union zero fills
    uint64_t skipped = 0;        // intersection fast-forwards
    uint64_t idx_words = 0;      // index word fetches / egress word writes
    uint64_t data_accesses = 0;  // data fetches / value writes
    uint64_t written = 0;        // values written (write-direction lanes)
    uint64_t first_grant = ~0ull;
    uint64_t last_activity = 0;
};

class Streamer {
public:
    Streamer(Memory& mem, const StreamerConfig& cfg);

    // --- core-facing config port (phase: core issue) ---
    // Returns false if the write must stall (both job slots occupied and the
    // write would start configuring a third job).
    bool cfg_write(unsigned lane, unsigned reg, uint64_t value, uint64_t cycle);
    uint64_t cfg_read(unsigned lane, unsigned reg) const;

    // Cancel read-direction jobs (active, pending, and half-built shadows
    // keep their register values; queued data is discarded). Write jobs
    // continue draining.
    void cancel_read_jobs();

    // --- register redirection queries ---
    bool lane_has_job(unsigned lane) const;
    bool lane_has_data(unsigned lane) const; // retired jobs can leave a FIFO tail
    bool lane_reads(unsigned lane) const;  // active/pending job streams reads
    bool lane_writes(unsigned lane) const; // active/pending job consumes writes

    // --- FPU/core data port (phase: core+fpu issue) ---
    bool can_pop(unsigned lane) const;
    double pop(unsigned lane, uint64_t cycle);
    bool can_push(unsigned lane) const;
    void push(unsigned lane, double value, uint64_t ready_cycle);

    // --- stream-control tokens ---
    bool token_ready() const { return !tokens_.empty(); }
    bool token_done() const { return tokens_.front(); }
    void token_pop() { tokens_.pop_front(); }

    // --- cycle phases ---
    void phase_arrivals(uint64_t cycle);
    void phase_comparator(uint64_t cycle);
    // core_used_port0: the core performed a memory access this cycle, which
    // preempts ISSR0's shared port.
    void phase_ports(uint64_t cycle, bool core_used_port0);

    // --- drain / teardown queries ---
    bool writes_drained() const; // all write jobs fully retired to memory
    bool fully_idle() const;     // no jobs, queues, or inflight traffic at all
    // Unbounded read stream parked at the memory end with nothing buffered:
    // a pop can never be satisfied, the consumer ran past the data.
    bool parked_dry(unsigned lane) const;

    const LaneStats& stats(unsigned lane) const { return lanes_[lane].stats; }
    uint64_t comparator_events() const { return comparator_events_; }

private:
    struct Slot {
        double value = 0.0;
        bool ready = false;
    };

    struct Inflight {
        uint64_t arrive;   // cycle the data becomes usable
        uint64_t addr;     // fetch address
        uint64_t seq;      // slot sequence number (read) for ordered fill
        bool is_idx;       // index word fetch
        unsigned count;    // indices contained (index fetch)
        unsigned offset;   // first valid byte within the word (index fetch)
    };

    enum class DirectiveKind : uint8_t { Deliver, InjectZero, Skip };

    struct PendingWrite {
        double value;
        uint64_t ready_at;
    };

    struct Lane {
        // job slots
        bool active = false;
        bool pending = false;
        LaneConfig job;     // running job
        LaneConfig next;    // committed pending job
        LaneConfig shadow;  // register file being written by scfgw
        // affine enumeration
        uint64_t counters[4] = {0, 0, 0, 0};
        uint64_t emitted = 0; // affine addresses generated
        bool parked = false;  // unbounded stream hit memory end
        // index ingress
        uint64_t idx_cursor = 0;  // byte address of next unread index
        uint64_t idx_remaining = 0;
        unsigned idx_buffered = 0; // decoded indices in flight + in FIFO
        std::deque<uint64_t> idx_fifo;
        // read data path
        std::deque<Slot> data_fifo;
        uint64_t slot_head_seq = 0; // seq of data_fifo.front()
        uint64_t slot_next_seq = 0;
        uint64_t fetched = 0; // elements fetched or injected (read jobs)
        // match-mode element cursor (sequential value addressing)
        uint64_t elem_pos = 0;
        bool match_done = false; // comparator emitted Done for this job
        std::deque<DirectiveKind> directives;
        // write data path
        std::deque<PendingWrite> write_fifo;
        uint64_t written = 0;
        // egress index side
        std::deque<uint64_t> egress_idx;
        uint64_t egress_idx_cursor = 0;  // byte address of next index write
        uint64_t egress_idx_written = 0; // index elements flushed to memory
        std::vector<uint64_t> coalesce;
        uint64_t egress_count = 0; // elements of the current egress job
        bool egress_done = false;  // comparator finished the joint stream
        IndexWidth egress_width = IndexWidth::W64;
        // bookkeeping
        unsigned outstanding = 0;
        std::deque<Inflight> inflight;
        bool rr_data_first = false;
        uint64_t port_free = 0; // lane port blocked until this cycle
        uint64_t gen = 0;       // job generation, bumps on each activation
        uint64_t length_latch = 0;
        LaneStats stats;
    };

    void commit_launch(unsigned lane, uint64_t cycle);
    void activate(unsigned lane, Lane& l);
    void retire_if_done(unsigned lane);
    bool job_complete(const Lane& l) const;
    void lane_request_idx(unsigned lane, Lane& l, uint64_t cycle);
    void lane_request_data(unsigned lane, Lane& l, uint64_t cycle);
    bool idx_channel_ready(const Lane& l, uint64_t cycle) const;
    bool data_channel_ready(const Lane& l, uint64_t cycle) const;
    bool process_directives(Lane& l); // true if a zero slot was filled
    uint64_t next_affine_addr(const Lane& l) const;
    void advance_affine(Lane& l);
    void push_token(bool done);
    bool lane_exhausted(const Lane& l) const;
    void grant_note(Lane& l, uint64_t grant);

    Memory& mem_;
    StreamerConfig cfg_;
    Lane lanes_[3];
    uint64_t session_gen_[2] = {~0ull, ~0ull};
    bool comparator_done_sent_ = false;
    uint64_t comparator_events_ = 0;
    std::deque<bool> tokens_; // false = available, true = done
};

} // namespace ssrsim
