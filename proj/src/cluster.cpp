#include "ssrsim/cluster.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <string>

#include "kernel_progs.hpp"

namespace ssrsim {

uint64_t dma_cycles(uint64_t bytes, unsigned dma_bits) {
    uint64_t beat = dma_bits / 8;
    return bytes ? (bytes + beat - 1) / beat : 0;
}

uint64_t ClusterReport::busiest() const {
    uint64_t b = 0;
    for (const auto& c : cores) b = std::max(b, c.busy_cycles);
    return b;
}

uint64_t ClusterReport::idlest() const {
    if (cores.empty()) return 0;
    uint64_t b = ~0ull;
    for (const auto& c : cores) b = std::min(b, c.busy_cycles);
    return b;
}

namespace {

// Low guard keeps address 0 unused; the high guard absorbs affine prefetch
// past the last live value of a segment.
constexpr uint64_t kGuard = 64;
constexpr uint64_t kClusterBudget = 500'000'000;

uint64_t align8(uint64_t v) { return (v + 7) & ~7ull; }

struct Segment {
    uint64_t row0 = 0, rows = 0;
    uint64_t nnz0 = 0, cnt = 0;
    unsigned buf = 0;
    uint64_t rp = 0, ci = 0, mv = 0; // scratchpad addresses inside the buffer
    uint64_t bytes = 0;              // transfer payload
    uint64_t land = ~0ull;           // first cycle the content is usable
    uint64_t claims_left = 0;
    bool dma_queued = false;
};

struct Claim {
    uint32_t seg = 0;
    uint64_t row0 = 0, rows = 0;
};

struct DmaJob {
    uint64_t earliest = 0; // absolute cycle the job may begin issue
    uint64_t issue = 0;    // programming cost paid on the port path
    uint64_t bytes = 0;
    int seg = -1; // >=0 segment fill, -1 vector, -2 writeback
};

struct CoreSlot {
    std::optional<CoreEngine> eng;
    uint64_t t_claim = 0;
    size_t claim = 0;
    int64_t last_seg = -1;
};

// Shared driver: operand staging and per-claim programs differ between the
// two kernels, everything else is the same machinery.
struct Cluster {
    const CsrMatrix& m;
    const KernelOptions& opt;
    const ClusterConfig& cc;

    Memory tcdm;
    unsigned wb;

    uint64_t vec_base = kGuard;
    uint64_t vec_payload = 0;
    uint64_t y_base = 0;
    uint64_t seg_base = 0;
    uint64_t seg_cap = 0;

    std::vector<Segment> segs;
    std::vector<Claim> claims;

    Cluster(const CsrMatrix& mm, const KernelOptions& o, const ClusterConfig& c,
            uint64_t vec_region_bytes, uint64_t vec_dma_payload)
        : m(mm), opt(o), cc(c), tcdm(uint64_t(c.tcdm_kib) * 1024, c.banks ? c.banks : 1, true),
          wb(index_bytes(mm.width)) {
        if (cc.cores == 0) throw ConfigFault("cluster needs at least one core");
        if (cc.dma_bits < 8 || cc.dma_bits % 8)
            throw ConfigFault("DMA width must be a whole number of bytes");
        vec_payload = vec_dma_payload;
        y_base = align8(vec_base + std::max<uint64_t>(vec_region_bytes, 8));
        uint64_t y_bytes = std::max<uint64_t>(m.nrows * 8, 8);
        seg_base = align8(y_base + y_bytes);
        uint64_t top = uint64_t(cc.tcdm_kib) * 1024;
        // two buffers of at least one row pointer pair each, plus the guard
        if (seg_base + kGuard + 2 * 16 > top)
            throw ConfigFault("TCDM capacity exceeded: resident operand and result leave no "
                              "segment space");
        seg_cap = ((top - kGuard - seg_base) / 2) & ~7ull;
        build_segments();
        build_claims();
    }

    uint64_t seg_layout(uint64_t rows, uint64_t cnt) const {
        return align8((rows + 1) * 4) + align8(cnt * wb) + cnt * 8;
    }

    void build_segments() {
        uint64_t r = 0;
        while (r < m.nrows) {
            Segment s;
            s.row0 = r;
            s.nnz0 = m.row_ptrs[r];
            uint64_t rows = 0, cnt = 0;
            while (r + rows < m.nrows) {
                uint64_t rn = m.row_ptrs[r + rows + 1] - m.row_ptrs[r + rows];
                if (seg_layout(rows + 1, cnt + rn) > seg_cap) break;
                ++rows;
                cnt += rn;
            }
            if (rows == 0)
                throw ConfigFault(
                    "TCDM capacity exceeded: row " + std::to_string(r) + " needs " +
                    std::to_string(seg_layout(1, m.row_ptrs[r + 1] - m.row_ptrs[r])) +
                    " bytes, a segment buffer holds " + std::to_string(seg_cap));
            s.rows = rows;
            s.cnt = cnt;
            s.buf = unsigned(segs.size() % 2);
            uint64_t base = seg_base + s.buf * seg_cap;
            s.rp = base;
            s.ci = base + align8((rows + 1) * 4);
            s.mv = s.ci + align8(cnt * uint64_t(wb));
            s.bytes = (rows + 1) * 4 + cnt * uint64_t(wb) + cnt * 8;
            segs.push_back(s);
            r += rows;
        }
    }

    void build_claims() {
        uint64_t chunk = cc.chunk_rows
                             ? cc.chunk_rows
                             : std::max<uint64_t>(1, m.nrows / (4 * uint64_t(cc.cores)));
        for (size_t i = 0; i < segs.size(); ++i) {
            Segment& s = segs[i];
            for (uint64_t r = 0; r < s.rows; r += chunk) {
                Claim c;
                c.seg = uint32_t(i);
                c.row0 = s.row0 + r;
                c.rows = std::min(chunk, s.rows - r);
                claims.push_back(c);
                ++s.claims_left;
            }
        }
    }

    // Row pointers land rebased to the segment, so claim programs index the
    // segment-local column and value arrays directly.
    void fill_segment(const Segment& s) {
        for (uint64_t i = 0; i <= s.rows; ++i)
            tcdm.store_uint(s.rp + 4 * i, 4, uint32_t(m.row_ptrs[s.row0 + i] - s.nnz0));
        for (uint64_t k = 0; k < s.cnt; ++k) {
            tcdm.store_uint(s.ci + k * uint64_t(wb), wb, m.col_idcs[s.nnz0 + k]);
            tcdm.store_f64(s.mv + k * 8, m.vals[s.nnz0 + k]);
        }
    }

    ClusterResult run(const std::function<void()>& fill_vec,
                      const std::function<Program(const Claim&)>& build) {
        ClusterResult res;
        ClusterReport& rpt = res.rpt;
        rpt.cores.resize(cc.cores);
        rpt.segments = segs.size();

        std::deque<DmaJob> q;
        {
            DmaJob v;
            v.issue = cc.dma_issue;
            v.bytes = vec_payload;
            v.seg = -1;
            q.push_back(v);
        }
        if (!segs.empty()) {
            DmaJob s0;
            s0.issue = cc.dma_issue;
            s0.bytes = segs[0].bytes;
            s0.seg = 0;
            segs[0].dma_queued = true;
            q.push_back(s0);
        }

        std::vector<CoreSlot> slots(cc.cores);
        // the wide port sits on its own scratchpad slice, so in-flight
        // transfers never contend with core traffic at the banks
        uint64_t dma_land = 0;
        bool dma_on = false;
        size_t next_claim = 0, claims_done = 0;
        uint64_t now = 0, finish = 0, last_done = 0;
        bool writeback_queued = false;

        while (claims_done < claims.size() || dma_on || !q.empty()) {
            if (now > kClusterBudget)
                throw SimFault("cluster cycle budget exhausted, the machine is stuck");

            // wide port: retire, then start the next queued transfer
            if (dma_on && now >= dma_land) dma_on = false;
            if (!dma_on && !q.empty()) {
                DmaJob& h = q.front();
                // a refill may not start until the previous occupant of its
                // buffer has retired every claim
                bool buf_clear = h.seg < 2 || segs[size_t(h.seg) - 2].claims_left == 0;
                if (now >= h.earliest && buf_clear) {
                    if (h.seg >= 2 && segs[size_t(h.seg) - 2].claims_left != 0)
                        throw SimFault("overlapping buffer hazard");
                    uint64_t start = now + h.issue;
                    uint64_t land = start + dma_cycles(h.bytes, cc.dma_bits);
                    if (h.seg >= 0) {
                        fill_segment(segs[size_t(h.seg)]);
                        segs[size_t(h.seg)].land = land;
                        if (h.seg == 0) rpt.prologue_cycles = land;
                    } else if (h.seg == -1) {
                        fill_vec();
                        if (segs.empty()) rpt.prologue_cycles = land;
                    } else {
                        rpt.writeback_cycles = land - h.earliest;
                    }
                    rpt.dma_busy += land - start;
                    finish = std::max(finish, land);
                    dma_land = land;
                    dma_on = true;
                    q.pop_front();
                }
            }
            // claim assignment, strictly in queue order
            for (unsigned c = 0; c < cc.cores; ++c) {
                CoreSlot& sl = slots[c];
                if (sl.eng || next_claim == claims.size()) continue;
                const Claim& cl = claims[next_claim];
                Segment& sg = segs[cl.seg];
                if (now < sg.land) {
                    ++rpt.exposed_dma_stall;
                    continue; // later cores idle on the same transfer
                }
                uint64_t lead = 0;
                // first claimer of a segment programs the next transfer
                if (size_t(cl.seg) + 1 < segs.size() && !segs[cl.seg + 1].dma_queued) {
                    Segment& nx = segs[cl.seg + 1];
                    DmaJob j;
                    j.earliest = now + cc.dma_issue;
                    j.bytes = nx.bytes;
                    j.seg = int(cl.seg + 1);
                    nx.dma_queued = true;
                    q.push_back(j);
                    lead += cc.dma_issue;
                }
                uint64_t refill = (sl.last_seg != int64_t(cl.seg)) ? cc.icache_penalty : 0;
                lead += refill;
                MachineConfig mc = opt.machine;
                mc.start_cycle = now + lead;
                sl.eng.emplace(build(cl), tcdm, mc);
                if (refill) sl.eng->add_icache_stall(refill);
                sl.t_claim = now;
                sl.claim = next_claim;
                sl.last_seg = int64_t(cl.seg);
                ++next_claim;
            }

            // step every core that lives at this cycle
            for (unsigned c = 0; c < cc.cores; ++c) {
                CoreSlot& sl = slots[c];
                if (!sl.eng || sl.eng->halted() || sl.eng->now() != now) continue;
                sl.eng->step();
                if (!sl.eng->halted()) continue;
                uint64_t done = sl.eng->now();
                const Claim& cl = claims[sl.claim];
                CoreReport& cr = rpt.cores[c];
                cr.busy_cycles += done - sl.t_claim;
                cr.claims += 1;
                cr.rows += cl.rows;
                cr.fpu_busy += sl.eng->report().fpu_busy;
                --segs[cl.seg].claims_left;
                last_done = std::max(last_done, done);
                finish = std::max(finish, done);
                ++claims_done;
                sl.eng.reset();
                if (claims_done == claims.size() && m.nrows && !writeback_queued) {
                    DmaJob wbk;
                    wbk.earliest = last_done;
                    wbk.issue = cc.dma_issue;
                    wbk.bytes = m.nrows * 8;
                    wbk.seg = -2;
                    q.push_back(wbk);
                    writeback_queued = true;
                }
            }

            ++now;
        }

        rpt.total_cycles = finish;
        res.y.resize(m.nrows);
        for (uint64_t i = 0; i < m.nrows; ++i) res.y[i] = tcdm.load_f64(y_base + 8 * i);
        return res;
    }
};

void reject_strided_result(const KernelOptions& opt) {
    if (opt.result_stride > 1)
        throw ConfigFault("cluster result layout is contiguous, result stride unsupported");
}

void check_cluster_width(uint64_t dense_len, IndexWidth w) {
    if (w != IndexWidth::W64 && dense_len > index_max(w) + 1)
        throw ConfigFault("index width too small for operand length");
}

} // namespace

ClusterResult run_cluster_sm_dv(const CsrMatrix& m, const DenseVector& x, const KernelOptions& opt,
                                const ClusterConfig& cc) {
    m.validate();
    x.validate();
    if (m.ncols > x.len()) throw ConfigFault("dense operand shorter than matrix columns");
    check_cluster_width(m.ncols, m.width);
    reject_strided_result(opt);

    unsigned K = progs::resolved_accumulators(opt, m.width);
    unsigned t = progs::resolved_threshold(opt);
    uint64_t vec_bytes = m.ncols * 8;

    Cluster cl(m, opt, cc, vec_bytes, vec_bytes);
    auto fill = [&] {
        // the transfer packs the logical vector contiguously whatever the
        // source stride was, so claim programs always use unit stride
        for (uint64_t i = 0; i < m.ncols; ++i)
            cl.tcdm.store_f64(cl.vec_base + 8 * i, x.values[i]);
    };
    auto build = [&](const Claim& c) {
        const Segment& s = cl.segs[c.seg];
        uint64_t rp0 = m.row_ptrs[c.row0];
        ProgramBuilder p;
        progs::SmDvProg a;
        a.rp = s.rp + (c.row0 - s.row0) * 4;
        a.rp_end = a.rp + c.rows * 4;
        a.ci = s.ci;
        a.mv = s.mv;
        a.gather_idx = s.ci + (rp0 - s.nnz0) * uint64_t(cl.wb);
        a.gather_val = s.mv + (rp0 - s.nnz0) * 8;
        a.gather_count = m.row_ptrs[c.row0 + c.rows] - rp0;
        a.xb = cl.vec_base;
        a.yb = cl.y_base + c.row0 * 8;
        a.xshift = 3;
        a.ystep = 8;
        progs::emit_sm_dv(p, a, opt.variant, m.width, K, t);
        return p.build();
    };
    return cl.run(fill, build);
}

ClusterResult run_cluster_sm_sv(const CsrMatrix& m, const Fiber& v, const KernelOptions& opt,
                                const ClusterConfig& cc) {
    m.validate();
    v.validate();
    if (m.width != v.width) throw ConfigFault("operand index widths differ");
    if (v.dense_len != m.ncols) throw ConfigFault("operand domains differ");
    check_cluster_width(m.ncols, m.width);
    if (opt.variant == KernelVariant::Ssr)
        throw ConfigFault("kernel has no affine-stream variant");
    reject_strided_result(opt);

    unsigned K = progs::resolved_accumulators(opt, m.width);
    unsigned wb = index_bytes(m.width);
    uint64_t nv = v.nnz();
    uint64_t vi_off = 0;
    uint64_t vv_off = align8(std::max<uint64_t>(nv * uint64_t(wb), 8));
    uint64_t region = vv_off + std::max<uint64_t>(nv * 8, 8);

    Cluster cl(m, opt, cc, region, nv * uint64_t(wb) + nv * 8);
    uint64_t vi = cl.vec_base + vi_off;
    uint64_t vv = cl.vec_base + vv_off;
    auto fill = [&] {
        for (uint64_t i = 0; i < nv; ++i) {
            cl.tcdm.store_uint(vi + i * uint64_t(wb), wb, v.indices[i]);
            cl.tcdm.store_f64(vv + i * 8, v.values[i]);
        }
    };
    auto build = [&](const Claim& c) {
        const Segment& s = cl.segs[c.seg];
        ProgramBuilder p;
        progs::SmSvProg a;
        a.rp = s.rp + (c.row0 - s.row0) * 4;
        a.rp_end = a.rp + c.rows * 4;
        a.ci = s.ci;
        a.mv = s.mv;
        a.vi = vi;
        a.vv = vv;
        a.nv = nv;
        a.yb = cl.y_base + c.row0 * 8;
        a.ystep = 8;
        progs::emit_sm_sv(p, a, opt.variant, m.width, K);
        return p.build();
    };
    return cl.run(fill, build);
}

} // namespace ssrsim
