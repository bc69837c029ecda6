#include "ssrsim/streamer.hpp"

#include <algorithm>
#include <bit>

namespace ssrsim {

// ---------------------------------------------------------------------------
// LaneConfig
// ---------------------------------------------------------------------------

void LaneConfig::apply_ctrl(uint64_t v) {
    unsigned m = v & 7;
    if (m > 4) throw ConfigFault("reserved stream mode " + std::to_string(m));
    mode = StreamMode(m);
    dir = (v >> 3) & 1 ? StreamDir::Write : StreamDir::Read;
    switch ((v >> 4) & 7) {
    case 0: width = IndexWidth::W8; break;
    case 1: width = IndexWidth::W16; break;
    case 2: width = IndexWidth::W32; break;
    case 3: width = IndexWidth::W64; break;
    default: throw ConfigFault("reserved index width code");
    }
    shift = (v >> 8) & 31;
    idx_lead = (v >> 16) & 63;
}

uint64_t LaneConfig::ctrl_word() const { return make_ctrl(mode, dir, width, shift, idx_lead); }

// ---------------------------------------------------------------------------
// Pure stream semantics
// ---------------------------------------------------------------------------

std::vector<uint64_t> affine_addresses(uint64_t base,
                                       const std::vector<std::pair<uint64_t, uint64_t>>& loops) {
    std::vector<uint64_t> out;
    if (loops.empty()) return out;
    std::vector<uint64_t> ctr(loops.size(), 0);
    for (auto& [stride, bound] : loops)
        if (bound == 0) return out;
    for (;;) {
        uint64_t addr = base;
        for (size_t l = 0; l < loops.size(); ++l) addr += ctr[l] * loops[l].first;
        out.push_back(addr);
        size_t l = 0;
        for (; l < loops.size(); ++l) {
            if (++ctr[l] < loops[l].second) break;
            ctr[l] = 0;
        }
        if (l == loops.size()) break;
    }
    return out;
}

std::vector<uint64_t> serialize_indices(const std::vector<uint64_t>& words, unsigned first_offset,
                                        uint64_t count, IndexWidth width) {
    const unsigned w = index_bytes(width);
    std::vector<uint64_t> out;
    out.reserve(count);
    uint64_t byte = first_offset;
    for (uint64_t k = 0; k < count; ++k) {
        uint64_t word_i = byte / 8;
        unsigned off = unsigned(byte % 8);
        if (word_i >= words.size()) throw SimFault("index serialization ran past word stream");
        uint64_t v = words[word_i] >> (off * 8);
        if (w < 8) v &= (uint64_t(1) << (w * 8)) - 1;
        out.push_back(v);
        byte += w;
    }
    return out;
}

std::vector<uint64_t> coalesce_indices(const std::vector<uint64_t>& indices, IndexWidth width) {
    const unsigned w = index_bytes(width);
    const unsigned per = 8 / w;
    std::vector<uint64_t> words((indices.size() + per - 1) / per, 0);
    for (size_t k = 0; k < indices.size(); ++k) {
        uint64_t v = indices[k];
        if (w < 8) v &= (uint64_t(1) << (w * 8)) - 1;
        words[k / per] |= v << ((k % per) * w * 8);
    }
    return words;
}

std::vector<uint64_t> indirect_addresses(uint64_t base, unsigned shift,
                                         const std::vector<uint64_t>& indices) {
    std::vector<uint64_t> out;
    out.reserve(indices.size());
    for (uint64_t i : indices) out.push_back(indirect_address(base, shift, i));
    return out;
}

std::vector<JointEvent> compare_streams(const std::vector<uint64_t>& left,
                                        const std::vector<uint64_t>& right, bool is_union) {
    std::vector<JointEvent> out;
    size_t i = 0, j = 0;
    for (;;) {
        bool lend = i == left.size(), rend = j == right.size();
        if (lend && rend) break;
        if (!is_union && (lend || rend)) break;
        if (rend || (!lend && left[i] < right[j])) {
            if (is_union) out.push_back({JointKind::LeftOnly, left[i]});
            ++i;
        } else if (lend || right[j] < left[i]) {
            if (is_union) out.push_back({JointKind::RightOnly, right[j]});
            ++j;
        } else {
            out.push_back({JointKind::Pair, left[i]});
            ++i;
            ++j;
        }
    }
    out.push_back({JointKind::Done, 0});
    return out;
}

// ---------------------------------------------------------------------------
// Cycle-level streamer
// ---------------------------------------------------------------------------

Streamer::Streamer(Memory& mem, const StreamerConfig& cfg) : mem_(mem), cfg_(cfg) {
    // Reset register files: ISSRs default to an affine read of consecutive
    // doubles, the ESSR to egress. A minimal launch is then a single
    // DATA_BASE write (ISSR) or IDX_BASE + DATA_BASE (ESSR).
    lanes_[0].shadow.apply_ctrl(make_ctrl(StreamMode::Affine, StreamDir::Read, IndexWidth::W64, 0, 4));
    lanes_[1].shadow = lanes_[0].shadow;
    lanes_[2].shadow.apply_ctrl(make_ctrl(StreamMode::Egress, StreamDir::Write, IndexWidth::W64, 0, 4));
}

bool Streamer::cfg_write(unsigned lane, unsigned reg, uint64_t value, uint64_t cycle) {
    if (lane > 2) throw ConfigFault("config write to nonexistent lane");
    Lane& l = lanes_[lane];
    switch (reg) {
    case kCfgCtrl: l.shadow.apply_ctrl(value); return true;
    case kCfgBound0:
    case kCfgBound1:
    case kCfgBound2:
    case kCfgBound3: l.shadow.bound[(reg - kCfgBound0) / 2] = value; return true;
    case kCfgStride0:
    case kCfgStride1:
    case kCfgStride2:
    case kCfgStride3: l.shadow.stride[(reg - kCfgStride0) / 2] = value; return true;
    case kCfgIdxBase:
        l.shadow.idx_base = value;
        l.shadow.idx_base_set = true;
        return true;
    case kCfgDataBase: break; // launch, handled below
    case kCfgLength:
    case kCfgStatus: throw ConfigFault("write to read-only stream register");
    default: throw ConfigFault("write to undefined stream register " + std::to_string(reg));
    }
    // DATA_BASE write: commit the shadow registers as a job.
    if (l.active && l.pending) return false; // both slots busy, caller stalls
    l.shadow.data_base = value;
    commit_launch(lane, cycle);
    return true;
}

void Streamer::commit_launch(unsigned lane, uint64_t cycle) {
    (void)cycle;
    Lane& l = lanes_[lane];
    const LaneConfig& c = l.shadow;
    switch (c.mode) {
    case StreamMode::Affine:
        if (c.dir == StreamDir::Write && c.bound[0] == kUnbounded)
            throw ConfigFault("affine write stream requires a bound");
        break;
    case StreamMode::Indirect:
        if (!c.idx_base_set) throw ConfigFault("indirect stream launched without an index base");
        if (c.bound[0] == kUnbounded) throw ConfigFault("indirect stream requires a bound");
        break;
    case StreamMode::MatchIntersect:
    case StreamMode::MatchUnion:
        if (lane == 2) throw ConfigFault("match streams pair the two ISSR lanes only");
        if (c.dir != StreamDir::Read) throw ConfigFault("match streams are read-only");
        if (!c.idx_base_set) throw ConfigFault("match stream launched without an index base");
        if (c.bound[0] == kUnbounded) throw ConfigFault("match stream requires a bound");
        break;
    case StreamMode::Egress:
        if (lane != 2) throw ConfigFault("egress is the ESSR lane's mode");
        if (c.dir != StreamDir::Write) throw ConfigFault("egress streams write");
        if (!c.idx_base_set) throw ConfigFault("egress launched without an index base");
        break;
    }
    if (!l.active) {
        l.job = c;
        activate(lane, l);
    } else {
        l.next = c;
        l.pending = true;
    }
}

void Streamer::activate(unsigned lane, Lane& l) {
    (void)lane;
    l.active = true;
    ++l.gen;
    for (auto& c : l.counters) c = 0;
    l.emitted = 0;
    l.parked = false;
    l.idx_cursor = l.job.idx_base;
    l.idx_remaining = 0;
    l.idx_buffered = 0;
    l.idx_fifo.clear();
    // slot seqs are lane state, not job state: leftovers of the previous job
    // may still sit in the data FIFO with fills inflight behind them
    l.fetched = 0;
    l.elem_pos = 0;
    l.match_done = false;
    l.written = 0;
    l.egress_idx_cursor = l.job.idx_base;
    l.egress_idx_written = 0;
    l.coalesce.clear();
    l.egress_count = 0;
    l.egress_done = false;
    if (l.job.mode == StreamMode::Indirect || l.job.mode == StreamMode::MatchIntersect ||
        l.job.mode == StreamMode::MatchUnion)
        l.idx_remaining = l.job.bound[0];
    retire_if_done(unsigned(&l - lanes_)); // zero-element jobs finish at once
}

uint64_t Streamer::cfg_read(unsigned lane, unsigned reg) const {
    if (lane > 2) throw ConfigFault("config read of nonexistent lane");
    const Lane& l = lanes_[lane];
    switch (reg) {
    case kCfgCtrl: return l.shadow.ctrl_word();
    case kCfgBound0:
    case kCfgBound1:
    case kCfgBound2:
    case kCfgBound3: return l.shadow.bound[(reg - kCfgBound0) / 2];
    case kCfgStride0:
    case kCfgStride1:
    case kCfgStride2:
    case kCfgStride3: return l.shadow.stride[(reg - kCfgStride0) / 2];
    case kCfgIdxBase: return l.shadow.idx_base;
    case kCfgDataBase: return l.shadow.data_base;
    case kCfgLength: return l.length_latch;
    case kCfgStatus: return (l.active ? 1u : 0u) | (l.pending ? 2u : 0u);
    default: throw ConfigFault("read of undefined stream register " + std::to_string(reg));
    }
}

void Streamer::cancel_read_jobs() {
    for (auto& l : lanes_) {
        if (l.pending && l.next.dir == StreamDir::Read) l.pending = false;
        if (l.active && l.job.dir == StreamDir::Read) {
            l.active = false;
            l.idx_fifo.clear();
            l.idx_buffered = 0;
            l.idx_remaining = 0;
            l.data_fifo.clear();
            l.slot_head_seq = l.slot_next_seq;
            l.directives.clear();
            // keep read inflight entries so traffic accounting stays exact;
            // their payloads are dropped on arrival
            for (auto& f : l.inflight) f.seq = kUnbounded;
            l.parked = false;
            l.match_done = false;
            if (l.pending) {
                l.job = l.next;
                l.pending = false;
                activate(unsigned(&l - lanes_), l);
            }
        }
    }
    tokens_.clear();
    comparator_done_sent_ = false;
    session_gen_[0] = session_gen_[1] = ~0ull;
}

bool Streamer::lane_has_job(unsigned lane) const {
    return lanes_[lane].active || lanes_[lane].pending;
}

bool Streamer::lane_reads(unsigned lane) const {
    const Lane& l = lanes_[lane];
    if (l.active) return l.job.dir == StreamDir::Read;
    if (l.pending) return l.next.dir == StreamDir::Read;
    return false;
}

bool Streamer::lane_writes(unsigned lane) const {
    const Lane& l = lanes_[lane];
    if (l.active) return l.job.dir == StreamDir::Write;
    if (l.pending) return l.next.dir == StreamDir::Write;
    return false;
}

bool Streamer::can_pop(unsigned lane) const {
    const Lane& l = lanes_[lane];
    return !l.data_fifo.empty() && l.data_fifo.front().ready;
}

bool Streamer::lane_has_data(unsigned lane) const { return !lanes_[lane].data_fifo.empty(); }

double Streamer::pop(unsigned lane, uint64_t cycle) {
    Lane& l = lanes_[lane];
    double v = l.data_fifo.front().value;
    l.data_fifo.pop_front();
    ++l.slot_head_seq;
    ++l.stats.delivered;
    l.stats.last_activity = std::max(l.stats.last_activity, cycle);
    retire_if_done(lane);
    return v;
}

bool Streamer::can_push(unsigned lane) const {
    const Lane& l = lanes_[lane];
    return l.active && l.job.dir == StreamDir::Write && l.write_fifo.size() < cfg_.fifo_depth;
}

void Streamer::push(unsigned lane, double value, uint64_t ready_cycle) {
    lanes_[lane].write_fifo.push_back({value, ready_cycle});
}

bool Streamer::parked_dry(unsigned lane) const {
    const Lane& l = lanes_[lane];
    return l.active && l.parked && l.data_fifo.empty();
}

// --- phases ---------------------------------------------------------------

void Streamer::phase_arrivals(uint64_t cycle) {
    for (unsigned lane = 0; lane < 3; ++lane) {
        Lane& l = lanes_[lane];
        while (!l.inflight.empty() && l.inflight.front().arrive <= cycle) {
            Inflight f = l.inflight.front();
            l.inflight.pop_front();
            --l.outstanding;
            l.stats.last_activity = std::max(l.stats.last_activity, f.arrive);
            // the fetch hit memory either way; cancelled payloads are dropped
            uint64_t word = mem_.load_uint(f.addr, 8);
            if (f.seq == kUnbounded) continue;
            if (f.is_idx) {
                auto idcs = serialize_indices({word}, f.offset, f.count, l.job.width);
                for (uint64_t v : idcs) l.idx_fifo.push_back(v);
            } else {
                uint64_t pos = f.seq - l.slot_head_seq;
                l.data_fifo[size_t(pos)].value = std::bit_cast<double>(word);
                l.data_fifo[size_t(pos)].ready = true;
            }
        }
        retire_if_done(lane);
    }
}

bool Streamer::lane_exhausted(const Lane& l) const {
    return l.idx_remaining == 0 && l.idx_buffered == 0;
}

void Streamer::push_token(bool done) { tokens_.push_back(done); }

void Streamer::phase_comparator(uint64_t cycle) {
    (void)cycle;
    Lane& a = lanes_[0];
    Lane& b = lanes_[1];
    if (!a.active || !b.active) return;
    bool a_match = a.job.mode == StreamMode::MatchIntersect || a.job.mode == StreamMode::MatchUnion;
    bool b_match = b.job.mode == StreamMode::MatchIntersect || b.job.mode == StreamMode::MatchUnion;
    if (!a_match || !b_match) return;
    if (a.job.mode != b.job.mode) throw ConfigFault("mismatched match modes on the ISSR lanes");
    if (a.job.width != b.job.width) throw ConfigFault("mismatched index widths on a match pair");
    const bool is_union = a.job.mode == StreamMode::MatchUnion;

    // One comparator session per pair of jobs.
    if (session_gen_[0] != a.gen || session_gen_[1] != b.gen) {
        session_gen_[0] = a.gen;
        session_gen_[1] = b.gen;
        comparator_done_sent_ = false;
    }
    if (comparator_done_sent_) return;

    Lane& e = lanes_[2];
    bool egress_live = e.active && e.job.mode == StreamMode::Egress;
    if (is_union && !egress_live) {
        if (e.active || e.pending) return; // previous ESSR job still draining
        throw SimFault("union stream with no egress job to receive it");
    }
    if (egress_live && e.egress_count == 0 && e.written == 0) e.egress_width = a.job.width;

    bool a_end = lane_exhausted(a), b_end = lane_exhausted(b);
    bool a_head = !a.idx_fifo.empty(), b_head = !b.idx_fifo.empty();

    // Done conditions: union needs both streams drained, intersection ends
    // as soon as either side can no longer match.
    bool done = is_union ? (a_end && b_end) : (a_end || b_end);
    if (done) {
        if (tokens_.size() >= cfg_.token_queue) return;
        push_token(true);
        comparator_done_sent_ = true;
        a.match_done = b.match_done = true;
        // unmatched leftovers of an intersection are never fetched or kept
        for (Lane* l : {&a, &b}) {
            l->idx_fifo.clear();
            l->idx_buffered = l->idx_remaining = 0;
            for (auto& f : l->inflight)
                if (f.is_idx) f.seq = kUnbounded;
        }
        if (egress_live) e.egress_done = true;
        retire_if_done(0);
        retire_if_done(1);
        retire_if_done(2);
        return;
    }

    // Need a head on every side that is not exhausted.
    if ((!a_head && !a_end) || (!b_head && !b_end)) return;

    auto pop_idx = [](Lane& l) {
        l.idx_fifo.pop_front();
        --l.idx_buffered;
    };
    auto emit_egress = [&](uint64_t idx) {
        if (!egress_live) return;
        e.egress_idx.push_back(idx);
        ++e.egress_count;
    };
    // backpressure checks sized to what each emission actually pushes; the
    // egress queue must hold a full coalesce word at the narrowest width, so
    // it is sized like the ingress index fifo rather than a directive queue
    auto event_room = [&]() {
        if (tokens_.size() >= cfg_.token_queue) return false;
        if (a.directives.size() >= cfg_.directive_queue) return false;
        if (b.directives.size() >= cfg_.directive_queue) return false;
        if (egress_live && e.egress_idx.size() >= cfg_.idx_fifo) return false;
        return true;
    };

    if (is_union) {
        if (!event_room()) return;
        uint64_t ia = a_head ? a.idx_fifo.front() : 0;
        uint64_t ib = b_head ? b.idx_fifo.front() : 0;
        if (a_head && b_head && ia == ib) {
            a.directives.push_back(DirectiveKind::Deliver);
            b.directives.push_back(DirectiveKind::Deliver);
            pop_idx(a);
            pop_idx(b);
            emit_egress(ia);
        } else if (a_head && (!b_head || ia < ib)) {
            a.directives.push_back(DirectiveKind::Deliver);
            b.directives.push_back(DirectiveKind::InjectZero);
            pop_idx(a);
            emit_egress(ia);
        } else {
            a.directives.push_back(DirectiveKind::InjectZero);
            b.directives.push_back(DirectiveKind::Deliver);
            pop_idx(b);
            emit_egress(ib);
        }
        push_token(false);
        ++comparator_events_;
    } else {
        uint64_t ia = a.idx_fifo.front();
        uint64_t ib = b.idx_fifo.front();
        if (ia == ib) {
            if (!event_room()) return;
            a.directives.push_back(DirectiveKind::Deliver);
            b.directives.push_back(DirectiveKind::Deliver);
            pop_idx(a);
            pop_idx(b);
            emit_egress(ia);
            push_token(false);
            ++comparator_events_;
        } else if (ia < ib) {
            if (a.directives.size() >= cfg_.directive_queue) return;
            a.directives.push_back(DirectiveKind::Skip);
            pop_idx(a);
        } else {
            if (b.directives.size() >= cfg_.directive_queue) return;
            b.directives.push_back(DirectiveKind::Skip);
            pop_idx(b);
        }
    }
}

bool Streamer::process_directives(Lane& l) {
    while (!l.directives.empty() && l.directives.front() == DirectiveKind::Skip) {
        l.directives.pop_front();
        ++l.elem_pos;
        ++l.stats.skipped;
    }
    if (!l.directives.empty() && l.directives.front() == DirectiveKind::InjectZero &&
        l.data_fifo.size() < cfg_.fifo_depth) {
        l.directives.pop_front();
        l.data_fifo.push_back({0.0, true});
        ++l.slot_next_seq;
        ++l.fetched;
        ++l.stats.injected_zero;
        return true;
    }
    return false;
}

uint64_t Streamer::next_affine_addr(const Lane& l) const {
    uint64_t addr = l.job.data_base;
    for (int d = 0; d < 4; ++d) addr += l.counters[d] * l.job.stride[d];
    return addr;
}

void Streamer::advance_affine(Lane& l) {
    ++l.emitted;
    for (int d = 0; d < 4; ++d) {
        if (++l.counters[d] < l.job.bound[d] || l.job.bound[d] == kUnbounded) return;
        l.counters[d] = 0;
    }
}

static uint64_t affine_total(const LaneConfig& c) {
    uint64_t t = 1;
    for (int d = 0; d < 4; ++d) {
        if (c.bound[d] == kUnbounded) return kUnbounded;
        t *= c.bound[d];
    }
    return t;
}

bool Streamer::idx_channel_ready(const Lane& l, uint64_t cycle) const {
    if (!l.active) return false;
    switch (l.job.mode) {
    case StreamMode::Indirect:
    case StreamMode::MatchIntersect:
    case StreamMode::MatchUnion: {
        if (l.match_done || l.idx_remaining == 0) return false;
        if (l.outstanding >= cfg_.max_outstanding) return false;
        unsigned off = unsigned(l.idx_cursor % 8);
        unsigned w = index_bytes(l.job.width);
        unsigned count = unsigned(std::min<uint64_t>((8 - off) / w, l.idx_remaining));
        return l.idx_buffered + count <= cfg_.idx_fifo;
    }
    case StreamMode::Egress: {
        if (l.egress_idx.empty() && l.coalesce.empty()) return false;
        unsigned w = index_bytes(l.egress_width);
        unsigned per = 8 / w;
        uint64_t boundary = 8 - (l.egress_idx_cursor % 8);
        bool ragged = boundary < 8; // unaligned head, or mid-word tail flush
        uint64_t avail = l.coalesce.size() + l.egress_idx.size();
        uint64_t n;
        if (ragged)
            n = 1;
        else if (avail >= per)
            n = per;
        else if (l.egress_done && avail > 0)
            n = 1; // tail flush, one element at a time
        else
            return false;
        // index stream may lead the value stream by at most idx_lead elements
        return l.egress_idx_written + n <= l.written + l.job.idx_lead ||
               (l.egress_done && l.written >= l.egress_count);
    }
    default: return false;
    }
    (void)cycle;
}

bool Streamer::data_channel_ready(const Lane& l, uint64_t cycle) const {
    if (!l.active) return false;
    if (l.job.dir == StreamDir::Read) {
        if (l.data_fifo.size() >= cfg_.fifo_depth) return false;
        if (l.outstanding >= cfg_.max_outstanding) return false;
        switch (l.job.mode) {
        case StreamMode::Affine: {
            uint64_t total = affine_total(l.job);
            if (total != kUnbounded && l.emitted >= total) return false;
            if (l.parked) return false;
            return true;
        }
        case StreamMode::Indirect: return !l.idx_fifo.empty();
        case StreamMode::MatchIntersect:
        case StreamMode::MatchUnion:
            return !l.directives.empty() && l.directives.front() == DirectiveKind::Deliver;
        default: return false;
        }
    }
    // write direction: head value must be computed by now
    if (l.write_fifo.empty() || l.write_fifo.front().ready_at > cycle) return false;
    switch (l.job.mode) {
    case StreamMode::Affine: return true;
    case StreamMode::Indirect: return !l.idx_fifo.empty();
    case StreamMode::Egress: return true;
    default: return false;
    }
}

void Streamer::grant_note(Lane& l, uint64_t grant) {
    if (l.stats.first_grant == ~0ull) l.stats.first_grant = grant;
    l.stats.last_activity = std::max(l.stats.last_activity, grant);
    l.port_free = grant + 1;
}

void Streamer::lane_request_idx(unsigned lane, Lane& l, uint64_t cycle) {
    if (l.job.mode == StreamMode::Egress) {
        // move queued joint indices into the coalesce window
        unsigned w = index_bytes(l.egress_width);
        unsigned per = 8 / w;
        while (!l.egress_idx.empty() && l.coalesce.size() < per) {
            l.coalesce.push_back(l.egress_idx.front());
            l.egress_idx.pop_front();
        }
        uint64_t boundary = 8 - (l.egress_idx_cursor % 8);
        if (boundary < 8 || (l.egress_done && l.coalesce.size() < per)) {
            // ragged head or tail: single index element per access
            uint64_t grant = mem_.request(cycle, l.egress_idx_cursor);
            mem_.store_uint(l.egress_idx_cursor, w, l.coalesce.front());
            l.coalesce.erase(l.coalesce.begin());
            l.egress_idx_cursor += w;
            l.egress_idx_written += 1;
            ++l.stats.idx_words;
            grant_note(l, grant);
        } else {
            uint64_t word = coalesce_indices(l.coalesce, l.egress_width)[0];
            uint64_t grant = mem_.request(cycle, l.egress_idx_cursor);
            mem_.store_uint(l.egress_idx_cursor, 8, word);
            l.egress_idx_cursor += 8;
            l.egress_idx_written += per;
            l.coalesce.clear();
            ++l.stats.idx_words;
            grant_note(l, grant);
        }
        retire_if_done(lane);
        return;
    }
    // index ingress fetch: one aligned 64-bit word
    unsigned off = unsigned(l.idx_cursor % 8);
    unsigned w = index_bytes(l.job.width);
    unsigned count = unsigned(std::min<uint64_t>((8 - off) / w, l.idx_remaining));
    uint64_t addr = l.idx_cursor - off;
    uint64_t grant = mem_.request(cycle, addr);
    l.inflight.push_back({grant + 1, addr, 0, true, count, off});
    ++l.outstanding;
    l.idx_cursor += uint64_t(count) * w;
    l.idx_remaining -= count;
    l.idx_buffered += count;
    ++l.stats.idx_words;
    grant_note(l, grant);
}

void Streamer::lane_request_data(unsigned lane, Lane& l, uint64_t cycle) {
    if (l.job.dir == StreamDir::Read) {
        uint64_t addr;
        switch (l.job.mode) {
        case StreamMode::Affine: {
            addr = next_affine_addr(l);
            if (!mem_.in_range(addr, 8)) {
                if (l.job.bound[0] == kUnbounded) {
                    l.parked = true; // ran off the end of memory, wait silently
                    return;
                }
                throw SimFault("affine stream read out of bounds");
            }
            advance_affine(l);
            break;
        }
        case StreamMode::Indirect:
            addr = indirect_address(l.job.data_base, l.job.shift, l.idx_fifo.front());
            l.idx_fifo.pop_front();
            --l.idx_buffered;
            break;
        case StreamMode::MatchIntersect:
        case StreamMode::MatchUnion:
            addr = l.job.data_base + l.elem_pos * 8;
            l.directives.pop_front();
            ++l.elem_pos;
            break;
        default: return;
        }
        uint64_t grant = mem_.request(cycle, addr);
        l.data_fifo.push_back({0.0, false});
        l.inflight.push_back({grant + 1, addr, l.slot_next_seq++, false, 0, 0});
        ++l.outstanding;
        ++l.fetched;
        ++l.stats.data_accesses;
        grant_note(l, grant);
        retire_if_done(lane);
        return;
    }
    // write direction
    double v = l.write_fifo.front().value;
    l.write_fifo.pop_front();
    uint64_t addr;
    switch (l.job.mode) {
    case StreamMode::Affine:
        addr = next_affine_addr(l);
        advance_affine(l);
        break;
    case StreamMode::Indirect:
        addr = indirect_address(l.job.data_base, l.job.shift, l.idx_fifo.front());
        l.idx_fifo.pop_front();
        --l.idx_buffered;
        break;
    case StreamMode::Egress: addr = l.job.data_base + l.written * 8; break;
    default: return;
    }
    uint64_t grant = mem_.request(cycle, addr);
    mem_.store_f64(addr, v);
    ++l.written;
    ++l.stats.written;
    ++l.stats.data_accesses;
    grant_note(l, grant);
    retire_if_done(lane);
}

void Streamer::phase_ports(uint64_t cycle, bool core_used_port0) {
    for (unsigned lane = 0; lane < 3; ++lane) {
        Lane& l = lanes_[lane];
        if (!l.active) continue;
        bool zero_filled = false;
        if (l.job.mode == StreamMode::MatchIntersect || l.job.mode == StreamMode::MatchUnion)
            zero_filled = process_directives(l);
        retire_if_done(lane);
        if (!l.active) continue;
        if (l.port_free > cycle) continue;
        if (lane == 0 && core_used_port0) continue;
        bool idx_ok = idx_channel_ready(l, cycle);
        bool data_ok = !zero_filled && data_channel_ready(l, cycle);
        if (!idx_ok && !data_ok) continue;
        bool take_data = data_ok && (!idx_ok || l.rr_data_first);
        if (idx_ok && data_ok) l.rr_data_first = !l.rr_data_first;
        if (take_data)
            lane_request_data(lane, l, cycle);
        else
            lane_request_idx(lane, l, cycle);
    }
}

bool Streamer::job_complete(const Lane& l) const {
    if (!l.active) return false;
    if (l.job.dir == StreamDir::Read) {
        // A read job is done once every request is issued. Unconsumed values
        // stay in the lane FIFO and the next job's fetches queue behind them.
        switch (l.job.mode) {
        case StreamMode::Affine: {
            uint64_t total = affine_total(l.job);
            return total != kUnbounded && l.fetched >= total;
        }
        case StreamMode::Indirect: return l.fetched >= l.job.bound[0];
        case StreamMode::MatchIntersect:
        case StreamMode::MatchUnion: return l.match_done && l.directives.empty();
        default: return false;
        }
    }
    switch (l.job.mode) {
    case StreamMode::Affine: return l.written >= affine_total(l.job);
    case StreamMode::Indirect: return l.written >= l.job.bound[0];
    case StreamMode::Egress:
        return l.egress_done && l.egress_idx.empty() && l.coalesce.empty() &&
               l.write_fifo.empty() && l.written >= l.egress_count &&
               l.egress_idx_written >= l.egress_count;
    default: return false;
    }
}

void Streamer::retire_if_done(unsigned lane) {
    Lane& l = lanes_[lane];
    if (!job_complete(l)) return;
    if (l.job.mode == StreamMode::Egress) l.length_latch = l.egress_count;
    l.active = false;
    if (l.pending) {
        l.job = l.next;
        l.pending = false;
        activate(lane, l);
    }
}

bool Streamer::writes_drained() const {
    for (const auto& l : lanes_) {
        if (l.active && l.job.dir == StreamDir::Write) return false;
        if (l.pending && l.next.dir == StreamDir::Write) return false;
        if (!l.write_fifo.empty()) return false;
    }
    return true;
}

bool Streamer::fully_idle() const {
    for (const auto& l : lanes_) {
        if (l.active || l.pending) return false;
        if (!l.data_fifo.empty() || !l.write_fifo.empty() || !l.inflight.empty()) return false;
        if (!l.idx_fifo.empty() || !l.directives.empty() || !l.egress_idx.empty()) return false;
        if (!l.coalesce.empty()) return false;
    }
    return tokens_.empty();
}

} // namespace ssrsim
