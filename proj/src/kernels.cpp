#include "ssrsim/kernels.hpp"

#include "kernel_progs.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace ssrsim {

const char* kernel_name(KernelId id) {
    switch (id) {
    case KernelId::SvXdV: return "svxdv";
    case KernelId::SmXdV: return "smxdv";
    case KernelId::SmXdM: return "smxdm";
    case KernelId::SvPdV: return "svpdv";
    case KernelId::SvHdV: return "svhdv";
    case KernelId::SvXsV: return "svxsv";
    case KernelId::SmXsV: return "smxsv";
    case KernelId::SmXsM_inner: return "smxsm";
    case KernelId::SvPsV: return "svpsv";
    case KernelId::SvHsV: return "svhsv";
    }
    return "?";
}

const char* variant_name(KernelVariant v) {
    switch (v) {
    case KernelVariant::Base: return "base";
    case KernelVariant::Ssr: return "ssr";
    case KernelVariant::Sssr: return "sssr";
    }
    return "?";
}

std::optional<KernelId> kernel_from_name(std::string_view s) {
    for (int i = 0; i <= int(KernelId::SvHsV); ++i)
        if (s == kernel_name(KernelId(i))) return KernelId(i);
    return std::nullopt;
}

std::optional<KernelVariant> variant_from_name(std::string_view s) {
    if (s == "base") return KernelVariant::Base;
    if (s == "ssr") return KernelVariant::Ssr;
    if (s == "sssr") return KernelVariant::Sssr;
    return std::nullopt;
}

bool kernel_has_ssr_variant(KernelId id) {
    switch (id) {
    case KernelId::SvXsV:
    case KernelId::SmXsV:
    case KernelId::SmXsM_inner:
    case KernelId::SvHsV: return false;
    default: return true;
    }
}

unsigned default_accumulators(IndexWidth w) {
    // enough in-flight accumulators to cover FPU latency at the stream rate:
    // 8-bit indices deliver 8/9 elem/cycle, 16-bit 4/5, 32-bit 2/3
    switch (w) {
    case IndexWidth::W8: return 8;
    case IndexWidth::W16: return 4;
    case IndexWidth::W32: return 3;
    case IndexWidth::W64: return 3;
    }
    return 3;
}

namespace {

unsigned lg2(uint64_t v) { return unsigned(std::countr_zero(v)); }

// f31 is never written; it provides the zero for accumulator clears and for
// fmadd-based products.
constexpr uint8_t kZeroF = 31;

unsigned accums(const KernelOptions& o, IndexWidth w) {
    unsigned k = o.accumulators ? o.accumulators : default_accumulators(w);
    return std::clamp(k, 1u, 16u); // block f3..f18
}

void zero_acc(ProgramBuilder& p, unsigned k) {
    for (unsigned i = 0; i < k; ++i) p.fmv(uint8_t(3 + i), kZeroF);
}

void reduce_acc(ProgramBuilder& p, unsigned k) {
    for (unsigned i = 1; i < k; ++i) p.fadd(3, 3, uint8_t(3 + i));
}

// Stage config values in x20.. first, then write back to back so a full
// launch costs one core cycle per register.
struct CfgVal {
    unsigned lane;
    unsigned reg;
    uint64_t val;
};

void cfg_burst(ProgramBuilder& p, const std::vector<CfgVal>& ws) {
    for (size_t i = 0; i < ws.size(); ++i) p.li(uint8_t(20 + i), int64_t(ws[i].val));
    for (size_t i = 0; i < ws.size(); ++i) p.scfgw(uint8_t(20 + i), ws[i].lane, ws[i].reg);
}

// Bump allocator for simulated memory. Address 0 stays unused; the tail pad
// absorbs unbounded affine prefetch past the live data.
struct Workspace {
    uint64_t top = 64;
    uint64_t alloc(uint64_t bytes) {
        uint64_t at = top;
        top += (std::max<uint64_t>(bytes, 8) + 7) & ~7ull;
        return at;
    }
    uint64_t size() const { return (top + 8192 + 4095) & ~4095ull; }
};

struct Staged {
    Memory mem;
    Program prog;
    uint64_t scalar_addr = 0;
    uint64_t dense_addr = 0;
    uint64_t dense_count = 0;
    uint64_t dense_stride = 1; // elements
    uint64_t fib_vals = 0, fib_idx = 0, fib_len = 0;
    IndexWidth fib_width = IndexWidth::W32;
    uint64_t fib_dense_len = 0;
    Staged(uint64_t bytes, const KernelOptions& o) : mem(bytes, o.banks, o.banked) {}
};

void put_f64s(Memory& m, uint64_t addr, const std::vector<double>& v) {
    for (size_t i = 0; i < v.size(); ++i) m.store_f64(addr + 8 * i, v[i]);
}

void put_idxs(Memory& m, uint64_t addr, IndexWidth w, const std::vector<uint64_t>& v) {
    unsigned b = index_bytes(w);
    for (size_t i = 0; i < v.size(); ++i) m.store_uint(addr + uint64_t(b) * i, b, v[i]);
}

void put_u32s(Memory& m, uint64_t addr, const std::vector<uint32_t>& v) {
    for (size_t i = 0; i < v.size(); ++i) m.store_uint(addr + 4 * i, 4, v[i]);
}

// Union loops reserve the all-ones index as an end marker, so operands must
// leave it unused. Other kernels only need indices to fit the width.
void check_width(uint64_t dense_len, IndexWidth w, bool reserve_top) {
    uint64_t cap = index_max(w);
    if (!reserve_top) {
        if (w != IndexWidth::W64 && dense_len > cap + 1)
            throw ConfigFault("index width too small for operand length");
    } else if (dense_len > cap) {
        throw ConfigFault("index width too small for operand length with end marker");
    }
}

uint64_t stride_shift(uint64_t stride_elems) {
    if (std::popcount(stride_elems) != 1)
        throw ConfigFault("dense operand stride must be a power of two");
    return 3 + lg2(stride_elems);
}

KernelResult execute(Staged& s, const KernelOptions& opt) {
    s.mem.reset_counters();
    CoreEngine eng(std::move(s.prog), s.mem, opt.machine);
    KernelResult r;
    r.report = eng.run();
    if (s.scalar_addr) r.scalar = s.mem.load_f64(s.scalar_addr);
    if (s.dense_count) {
        r.dense.resize(s.dense_count);
        for (uint64_t i = 0; i < s.dense_count; ++i)
            r.dense[i] = s.mem.load_f64(s.dense_addr + 8 * i * s.dense_stride);
    }
    if (s.fib_len) {
        uint64_t n = s.mem.load_uint(s.fib_len, 8);
        unsigned b = index_bytes(s.fib_width);
        r.fiber.width = s.fib_width;
        r.fiber.dense_len = s.fib_dense_len;
        r.fiber.values.resize(n);
        r.fiber.indices.resize(n);
        for (uint64_t i = 0; i < n; ++i) {
            r.fiber.values[i] = s.mem.load_f64(s.fib_vals + 8 * i);
            r.fiber.indices[i] = s.mem.load_uint(s.fib_idx + uint64_t(b) * i, b);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// sparse (x) dense vector kernels
// ---------------------------------------------------------------------------

Staged stage_sv_dv(KernelId id, const Fiber& a, const DenseVector& bv, const KernelOptions& opt) {
    a.validate();
    bv.validate();
    if (a.dense_len > bv.len()) throw ConfigFault("dense operand shorter than sparse domain");
    check_width(a.dense_len, a.width, false);
    if (opt.variant == KernelVariant::Ssr && !kernel_has_ssr_variant(id))
        throw ConfigFault("kernel has no affine-stream variant");

    unsigned wb = index_bytes(a.width);
    unsigned shift = unsigned(stride_shift(bv.stride));
    unsigned K = accums(opt, a.width);
    uint64_t n = a.nnz();

    Workspace ws;
    uint64_t av = ws.alloc(n * 8);
    uint64_t ai = ws.alloc(n * uint64_t(wb));
    uint64_t bbytes = bv.len() ? ((bv.len() - 1) * bv.stride + 1) * 8 : 8;
    uint64_t bb = ws.alloc(bbytes);
    uint64_t cv = (id == KernelId::SvHdV) ? ws.alloc(n * 8) : 0;
    uint64_t res = ws.alloc(8);
    uint64_t rlen = (id == KernelId::SvHdV) ? ws.alloc(8) : 0;

    Staged s(ws.size(), opt);
    put_f64s(s.mem, av, a.values);
    put_idxs(s.mem, ai, a.width, a.indices);
    for (uint64_t i = 0; i < bv.len(); ++i) s.mem.store_f64(bb + 8 * i * bv.stride, bv.values[i]);

    switch (id) {
    case KernelId::SvXdV:
        s.scalar_addr = res;
        break;
    case KernelId::SvPdV:
        s.dense_addr = bb;
        s.dense_count = bv.len();
        s.dense_stride = bv.stride;
        break;
    case KernelId::SvHdV:
        s.fib_vals = cv;
        s.fib_idx = ai; // result keeps the operand's coordinates
        s.fib_len = rlen;
        s.fib_width = a.width;
        s.fib_dense_len = a.dense_len;
        s.mem.store_uint(rlen, 8, n);
        break;
    default: throw ConfigFault("not a sparse-dense vector kernel");
    }

    ProgramBuilder p;
    uint64_t ai_end = ai + n * uint64_t(wb);

    if (opt.variant == KernelVariant::Base) {
        p.li(2, int64_t(ai)).li(3, int64_t(av)).li(4, int64_t(bb)).li(6, int64_t(ai_end));
        switch (id) {
        case KernelId::SvXdV:
            p.li(13, int64_t(res));
            p.fmv(3, kZeroF);
            p.beq(2, 6, "done");
            p.label("loop");
            p.load_i(5, 2, 0, wb).slli(5, 5, shift).add(5, 5, 4);
            p.fld(4, 5, 0).fld(5, 3, 0);
            p.fmadd(3, 4, 5, 3);
            p.addi(2, 2, wb).addi(3, 3, 8);
            p.bne(2, 6, "loop");
            p.label("done").fsd(3, 13, 0).halt();
            break;
        case KernelId::SvPdV:
            p.beq(2, 6, "done");
            p.label("loop");
            p.load_i(5, 2, 0, wb).slli(5, 5, shift).add(5, 5, 4);
            p.fld(4, 5, 0).fld(5, 3, 0);
            p.fadd(4, 4, 5);
            p.addi(2, 2, wb).addi(3, 3, 8);
            p.fsd(4, 5, 0);
            p.bne(2, 6, "loop");
            p.label("done").halt();
            break;
        case KernelId::SvHdV:
            p.li(8, int64_t(cv));
            p.beq(2, 6, "done");
            p.label("loop");
            p.load_i(5, 2, 0, wb).slli(5, 5, shift).add(5, 5, 4);
            p.fld(4, 5, 0).fld(5, 3, 0);
            p.fmul(4, 4, 5);
            p.addi(2, 2, wb).addi(3, 3, 8);
            p.fsd(4, 8, 0);
            p.addi(8, 8, 8);
            p.bne(2, 6, "loop");
            p.label("done").halt();
            break;
        default: break;
        }
        s.prog = p.build();
        return s;
    }

    if (opt.variant == KernelVariant::Ssr) {
        // lane 0 streams the sparse values; index handling stays on the core
        p.li(2, int64_t(ai)).li(4, int64_t(bb)).li(6, int64_t(ai_end));
        switch (id) {
        case KernelId::SvXdV:
            p.li(13, int64_t(res));
            cfg_burst(p, {{0, kCfgDataBase, av}});
            p.ssr_enable();
            p.fmv(3, kZeroF);
            p.beq(2, 6, "done");
            p.label("loop");
            p.load_i(5, 2, 0, wb).slli(5, 5, shift).add(5, 5, 4);
            p.fld(4, 5, 0);
            p.fmadd(3, 4, 0, 3);
            p.addi(2, 2, wb);
            p.bne(2, 6, "loop");
            p.label("done").fence().ssr_disable().fsd(3, 13, 0).halt();
            break;
        case KernelId::SvPdV:
            cfg_burst(p, {{0, kCfgDataBase, av}});
            p.ssr_enable();
            p.beq(2, 6, "done");
            p.label("loop");
            p.load_i(5, 2, 0, wb).slli(5, 5, shift).add(5, 5, 4);
            p.fld(4, 5, 0);
            p.fadd(4, 4, 0);
            p.addi(2, 2, wb);
            p.fsd(4, 5, 0);
            p.bne(2, 6, "loop");
            p.label("done").fence().ssr_disable().halt();
            break;
        case KernelId::SvHdV:
            // lane 2 takes the result store as an affine write stream
            cfg_burst(p, {{0, kCfgDataBase, av},
                          {2, kCfgCtrl,
                           make_ctrl(StreamMode::Affine, StreamDir::Write, IndexWidth::W64, 0, 4)},
                          {2, kCfgBound0, n},
                          {2, kCfgDataBase, cv}});
            p.ssr_enable();
            p.beq(2, 6, "done");
            p.label("loop");
            p.load_i(5, 2, 0, wb).slli(5, 5, shift).add(5, 5, 4);
            p.fld(4, 5, 0);
            p.fmul(2, 4, 0);
            p.addi(2, 2, wb);
            p.bne(2, 6, "loop");
            p.label("done").fence().ssr_disable().halt();
            break;
        default: break;
        }
        s.prog = p.build();
        return s;
    }

    // SSSR: indices move through the streamer, the body is a hardware loop
    uint64_t ind = make_ctrl(StreamMode::Indirect, StreamDir::Read, a.width, shift, 4);
    switch (id) {
    case KernelId::SvXdV:
        p.li(13, int64_t(res));
        cfg_burst(p, {{1, kCfgCtrl, ind},
                      {1, kCfgBound0, n},
                      {1, kCfgIdxBase, ai},
                      {1, kCfgDataBase, bb},
                      {0, kCfgDataBase, av}});
        zero_acc(p, K);
        p.ssr_enable();
        p.frep_imm(int64_t(n), 1, K, 3);
        p.fmadd(3, 0, 1, 3);
        reduce_acc(p, K);
        p.fence().ssr_disable();
        p.fsd(3, 13, 0).halt();
        break;
    case KernelId::SvPdV: {
        // gather-modify-scatter on the dense operand through one index stream
        uint64_t indw = make_ctrl(StreamMode::Indirect, StreamDir::Write, a.width, shift, 4);
        cfg_burst(p, {{0, kCfgDataBase, av},
                      {1, kCfgCtrl, ind},
                      {1, kCfgBound0, n},
                      {1, kCfgIdxBase, ai},
                      {1, kCfgDataBase, bb},
                      {2, kCfgCtrl, indw},
                      {2, kCfgBound0, n},
                      {2, kCfgIdxBase, ai},
                      {2, kCfgDataBase, bb}});
        p.ssr_enable();
        p.frep_imm(int64_t(n), 1);
        p.fadd(2, 0, 1);
        p.fence().ssr_disable().halt();
        break;
    }
    case KernelId::SvHdV:
        cfg_burst(p, {{0, kCfgDataBase, av},
                      {1, kCfgCtrl, ind},
                      {1, kCfgBound0, n},
                      {1, kCfgIdxBase, ai},
                      {1, kCfgDataBase, bb},
                      {2, kCfgCtrl,
                       make_ctrl(StreamMode::Affine, StreamDir::Write, IndexWidth::W64, 0, 4)},
                      {2, kCfgBound0, n},
                      {2, kCfgDataBase, cv}});
        p.ssr_enable();
        p.frep_imm(int64_t(n), 1);
        p.fmul(2, 0, 1);
        p.fence().ssr_disable().halt();
        break;
    default: break;
    }
    s.prog = p.build();
    return s;
}

// ---------------------------------------------------------------------------
// sparse (x) sparse vector kernels
// ---------------------------------------------------------------------------

// Two-pointer loop shared by the scalar intersection kernels. Each side has
// an advance block falling into its dispatch; scanning one side costs 5
// cycles per skipped element, a match costs the dispatch branch plus the
// match body. emit_match writes the per-match payload ending in a jump back
// to "dispatch_a".
template <typename EmitMatch>
void emit_two_pointer(ProgramBuilder& p, unsigned wb, const std::string& done,
                      EmitMatch emit_match) {
    p.label("a_adv").addi(2, 2, wb).beq(2, 4, done).load_i(6, 2, 0, wb);
    p.label("dispatch_a").beq(6, 7, "match").blt(6, 7, "a_adv").j("b_adv");
    p.label("b_adv").addi(3, 3, wb).beq(3, 5, done).load_i(7, 3, 0, wb);
    p.label("dispatch_b").beq(6, 7, "match").blt(7, 6, "b_adv").j("a_adv");
    p.label("match");
    emit_match(p);
}

Staged stage_sv_sv(KernelId id, const Fiber& a, const Fiber& b, const KernelOptions& opt) {
    a.validate();
    b.validate();
    if (a.width != b.width) throw ConfigFault("operand index widths differ");
    if (a.dense_len != b.dense_len) throw ConfigFault("operand domains differ");
    bool is_union = id == KernelId::SvPsV;
    check_width(a.dense_len, a.width, is_union);
    if (opt.variant == KernelVariant::Ssr)
        throw ConfigFault("kernel has no affine-stream variant");

    unsigned wb = index_bytes(a.width);
    unsigned sconv = 3 - lg2(wb); // index-array byte offset to value-array byte offset
    unsigned K = accums(opt, a.width);
    uint64_t na = a.nnz(), nb = b.nnz();

    Workspace ws;
    uint64_t av = ws.alloc(na * 8);
    uint64_t ia = ws.alloc(na * uint64_t(wb));
    uint64_t bv = ws.alloc(nb * 8);
    uint64_t ib = ws.alloc((nb + 1) * uint64_t(wb)); // room for the union end marker
    uint64_t cap = is_union ? na + nb : std::min(na, nb);
    uint64_t cv = (id == KernelId::SvXsV) ? 0 : ws.alloc(cap * 8);
    uint64_t ci = (id == KernelId::SvXsV) ? 0 : ws.alloc(cap * uint64_t(wb));
    uint64_t res = ws.alloc(8);
    uint64_t rlen = ws.alloc(8);

    Staged s(ws.size(), opt);
    put_f64s(s.mem, av, a.values);
    put_idxs(s.mem, ia, a.width, a.indices);
    put_f64s(s.mem, bv, b.values);
    put_idxs(s.mem, ib, b.width, b.indices);
    if (is_union) s.mem.store_uint(ib + nb * uint64_t(wb), wb, index_max(a.width));

    if (id == KernelId::SvXsV) {
        s.scalar_addr = res;
    } else {
        s.fib_vals = cv;
        s.fib_idx = ci;
        s.fib_len = rlen;
        s.fib_width = a.width;
        s.fib_dense_len = a.dense_len;
    }

    ProgramBuilder p;
    uint64_t ia_end = ia + na * uint64_t(wb);
    uint64_t ib_end = ib + nb * uint64_t(wb);

    if (opt.variant == KernelVariant::Base) {
        switch (id) {
        case KernelId::SvXsV:
            p.li(2, int64_t(ia)).li(3, int64_t(ib)).li(4, int64_t(ia_end)).li(5, int64_t(ib_end));
            p.li(13, int64_t(res)).li(14, int64_t(ia)).li(15, int64_t(av));
            p.li(16, int64_t(ib)).li(17, int64_t(bv));
            p.fmv(3, kZeroF);
            p.beq(2, 4, "done").beq(3, 5, "done");
            p.load_i(6, 2, 0, wb).load_i(7, 3, 0, wb);
            p.j("dispatch_a");
            emit_two_pointer(p, wb, "done", [&](ProgramBuilder& q) {
                q.sub(8, 2, 14).slli(8, 8, sconv).add(8, 8, 15);
                q.sub(9, 3, 16).slli(9, 9, sconv).add(9, 9, 17);
                q.fld(4, 8, 0).fld(5, 9, 0);
                q.fmadd(3, 4, 5, 3);
                q.addi(2, 2, wb).addi(3, 3, wb);
                q.beq(2, 4, "done").beq(3, 5, "done");
                q.load_i(6, 2, 0, wb).load_i(7, 3, 0, wb);
                q.j("dispatch_a");
            });
            p.label("done").fsd(3, 13, 0).halt();
            break;

        case KernelId::SvHsV:
            p.li(2, int64_t(ia)).li(3, int64_t(ib)).li(4, int64_t(ia_end)).li(5, int64_t(ib_end));
            p.li(13, int64_t(ci)).li(14, int64_t(rlen)).li(15, int64_t(av));
            p.li(16, int64_t(ib)).li(17, int64_t(bv));
            p.li(18, int64_t(cv)).li(19, int64_t(ci)).li(12, int64_t(ia));
            p.beq(2, 4, "done").beq(3, 5, "done");
            p.load_i(6, 2, 0, wb).load_i(7, 3, 0, wb);
            p.j("dispatch_a");
            emit_two_pointer(p, wb, "done", [&](ProgramBuilder& q) {
                q.sub(8, 2, 12).slli(8, 8, sconv).add(8, 8, 15);
                q.sub(9, 3, 16).slli(9, 9, sconv).add(9, 9, 17);
                q.fld(4, 8, 0).fld(5, 9, 0);
                q.fmul(4, 4, 5);
                q.store_i(6, 19, 0, wb);
                q.addi(2, 2, wb).addi(3, 3, wb).addi(19, 19, wb);
                q.fsd(4, 18, 0);
                q.addi(18, 18, 8);
                q.beq(2, 4, "done").beq(3, 5, "done");
                q.load_i(6, 2, 0, wb).load_i(7, 3, 0, wb);
                q.j("dispatch_a");
            });
            p.label("done");
            p.sub(8, 19, 13).srli(8, 8, lg2(wb)).store_i(8, 14, 0, 8);
            p.halt();
            break;

        case KernelId::SvPsV:
            // b carries an end marker, so only the a side needs bound checks
            // in the main loop; the tail loop drains b after a runs out.
            p.li(2, int64_t(ia)).li(3, int64_t(ib)).li(4, int64_t(ia_end));
            p.li(10, int64_t(av)).li(11, int64_t(bv));
            p.li(12, int64_t(index_max(a.width)));
            p.li(13, int64_t(ci)).li(14, int64_t(rlen));
            p.li(18, int64_t(cv)).li(19, int64_t(ci));
            p.beq(2, 4, "a_done");
            p.load_i(6, 2, 0, wb).load_i(7, 3, 0, wb);
            p.j("dispatch_a");
            p.label("b_emit");
            p.fld(4, 11, 0).fsd(4, 18, 0);
            p.store_i(7, 19, 0, wb);
            p.addi(3, 3, wb).addi(11, 11, 8).addi(18, 18, 8).addi(19, 19, wb);
            p.load_i(7, 3, 0, wb);
            p.label("dispatch_b").beq(6, 7, "match").blt(7, 6, "b_emit").j("a_emit");
            p.label("a_emit");
            p.fld(4, 10, 0).fsd(4, 18, 0);
            p.store_i(6, 19, 0, wb);
            p.addi(2, 2, wb).addi(10, 10, 8).addi(18, 18, 8).addi(19, 19, wb);
            p.beq(2, 4, "a_done");
            p.load_i(6, 2, 0, wb);
            p.label("dispatch_a").beq(6, 7, "match").blt(6, 7, "a_emit").j("b_emit");
            p.label("match");
            p.fld(4, 10, 0).fld(5, 11, 0);
            p.fadd(4, 4, 5);
            p.store_i(6, 19, 0, wb);
            p.addi(2, 2, wb).addi(3, 3, wb).addi(10, 10, 8).addi(11, 11, 8).addi(19, 19, wb);
            p.fsd(4, 18, 0);
            p.addi(18, 18, 8);
            p.beq(2, 4, "a_done");
            p.load_i(6, 2, 0, wb).load_i(7, 3, 0, wb);
            p.j("dispatch_a");
            p.label("a_done");
            p.load_i(7, 3, 0, wb);
            p.label("tail");
            p.beq(7, 12, "done");
            p.fld(4, 11, 0).fsd(4, 18, 0);
            p.store_i(7, 19, 0, wb);
            p.addi(3, 3, wb).addi(11, 11, 8).addi(18, 18, 8).addi(19, 19, wb);
            p.load_i(7, 3, 0, wb);
            p.j("tail");
            p.label("done");
            p.sub(8, 19, 13).srli(8, 8, lg2(wb)).store_i(8, 14, 0, 8);
            p.halt();
            break;
        default: throw ConfigFault("not a sparse-sparse vector kernel");
        }
        s.prog = p.build();
        return s;
    }

    // SSSR: both fibers feed the joint comparator; unions/hadamards add the
    // egress lane, which must be launched before the read pair.
    StreamMode mm = is_union ? StreamMode::MatchUnion : StreamMode::MatchIntersect;
    uint64_t mc = make_ctrl(mm, StreamDir::Read, a.width, 3, 4);
    std::vector<CfgVal> burst;
    if (id != KernelId::SvXsV) {
        burst.push_back({2, kCfgIdxBase, ci});
        burst.push_back({2, kCfgDataBase, cv});
    }
    burst.insert(burst.end(), {{0, kCfgCtrl, mc},
                               {0, kCfgBound0, na},
                               {0, kCfgIdxBase, ia},
                               {0, kCfgDataBase, av},
                               {1, kCfgCtrl, mc},
                               {1, kCfgBound0, nb},
                               {1, kCfgIdxBase, ib},
                               {1, kCfgDataBase, bv}});

    switch (id) {
    case KernelId::SvXsV:
        p.li(13, int64_t(res));
        cfg_burst(p, burst);
        zero_acc(p, K);
        p.ssr_enable();
        p.frep_s(0, 1, K, 3);
        p.fmadd(3, 0, 1, 3);
        reduce_acc(p, K);
        p.fence().ssr_disable();
        p.fsd(3, 13, 0).halt();
        break;
    case KernelId::SvPsV:
        p.li(14, int64_t(rlen));
        cfg_burst(p, burst);
        p.ssr_enable();
        p.frep_s(0, 1);
        p.fadd(2, 0, 1);
        p.fence();
        p.scfgr(8, 2, kCfgLength);
        p.store_i(8, 14, 0, 8);
        p.ssr_disable().halt();
        break;
    case KernelId::SvHsV:
        p.li(14, int64_t(rlen));
        cfg_burst(p, burst);
        p.ssr_enable();
        p.frep_s(0, 1);
        p.fmul(2, 0, 1);
        p.fence();
        p.scfgr(8, 2, kCfgLength);
        p.store_i(8, 14, 0, 8);
        p.ssr_disable().halt();
        break;
    default: throw ConfigFault("not a sparse-sparse vector kernel");
    }
    s.prog = p.build();
    return s;
}

// ---------------------------------------------------------------------------
// CSR matrix kernels
// ---------------------------------------------------------------------------

struct MatrixImage {
    uint64_t rp = 0, ci = 0, mv = 0;
    uint64_t rp_end = 0;
};

MatrixImage stage_matrix(Workspace& ws, const CsrMatrix& m) {
    MatrixImage im;
    im.rp = ws.alloc((m.nrows + 1) * 4);
    im.ci = ws.alloc(m.nnz() * uint64_t(index_bytes(m.width)));
    im.mv = ws.alloc(m.nnz() * 8);
    im.rp_end = im.rp + 4 * m.nrows;
    return im;
}

void fill_matrix(Memory& mem, const MatrixImage& im, const CsrMatrix& m) {
    put_u32s(mem, im.rp, m.row_ptrs);
    put_idxs(mem, im.ci, m.width, m.col_idcs);
    put_f64s(mem, im.mv, m.vals);
}

// Short rows skip the hardware loop: straight-line products into separate
// accumulators, then a short reduction. Dispatch compares against constants
// preloaded in x25.. and falls through to the longest case.
void emit_short_rows(ProgramBuilder& p, unsigned t) {
    for (unsigned L = 1; L + 1 < t; ++L)
        p.beq(9, uint8_t(24 + L), "len" + std::to_string(L));
    for (unsigned L = t - 1;; --L) {
        p.label("len" + std::to_string(L));
        for (unsigned i = 0; i < L; ++i) p.fmadd(uint8_t(3 + i), 0, 1, kZeroF);
        for (unsigned i = 1; i < L; ++i) p.fadd(3, 3, uint8_t(3 + i));
        p.fsd(3, 3, 0);
        p.j("next");
        if (L == 1) break;
    }
}

unsigned short_row_threshold(const KernelOptions& opt) {
    return std::clamp(opt.unroll_threshold, 2u, 8u);
}

Staged stage_sm_dv(const CsrMatrix& m, const DenseVector& x, const KernelOptions& opt) {
    m.validate();
    x.validate();
    if (m.ncols > x.len()) throw ConfigFault("dense operand shorter than matrix columns");
    check_width(m.ncols, m.width, false);

    unsigned shift = unsigned(stride_shift(x.stride));
    unsigned K = accums(opt, m.width);
    unsigned t = short_row_threshold(opt);
    uint64_t ystride = opt.result_stride ? opt.result_stride : 1;

    Workspace ws;
    MatrixImage im = stage_matrix(ws, m);
    uint64_t xbytes = x.len() ? ((x.len() - 1) * x.stride + 1) * 8 : 8;
    uint64_t xb = ws.alloc(xbytes);
    uint64_t yb = ws.alloc(m.nrows * ystride * 8);

    Staged s(ws.size(), opt);
    fill_matrix(s.mem, im, m);
    for (uint64_t i = 0; i < x.len(); ++i) s.mem.store_f64(xb + 8 * i * x.stride, x.values[i]);
    s.dense_addr = yb;
    s.dense_count = m.nrows;
    s.dense_stride = ystride;

    ProgramBuilder p;
    progs::SmDvProg pr;
    pr.rp = im.rp;
    pr.rp_end = im.rp_end;
    pr.ci = im.ci;
    pr.mv = im.mv;
    pr.gather_idx = im.ci;
    pr.gather_val = im.mv;
    pr.gather_count = m.nnz();
    pr.xb = xb;
    pr.yb = yb;
    pr.xshift = shift;
    pr.ystep = int64_t(ystride) * 8;
    progs::emit_sm_dv(p, pr, opt.variant, m.width, K, t);
    s.prog = p.build();
    return s;
}

Staged stage_sm_dm(const CsrMatrix& m, const std::vector<double>& x, uint64_t ncx,
                   const KernelOptions& opt) {
    m.validate();
    if (x.size() != m.ncols * ncx) throw ConfigFault("dense operand shape mismatch");
    check_width(m.ncols, m.width, false);

    unsigned wb = index_bytes(m.width);
    unsigned lgw = lg2(wb);
    unsigned K = accums(opt, m.width);
    unsigned t = short_row_threshold(opt);

    Workspace ws;
    MatrixImage im = stage_matrix(ws, m);
    uint64_t xb = ws.alloc(x.size() * 8);
    uint64_t yb = ws.alloc(m.nrows * ncx * 8);

    Staged s(ws.size(), opt);
    fill_matrix(s.mem, im, m);
    put_f64s(s.mem, xb, x); // column-major ncols x ncx
    s.dense_addr = yb;      // row-major nrows x ncx
    s.dense_count = m.nrows * ncx;

    ProgramBuilder p;
    int64_t colstep = int64_t(m.ncols) * 8;
    int64_t rowstep = int64_t(ncx) * 8;

    auto col_header = [&] {
        p.li(22, int64_t(im.rp)).li(21, int64_t(im.rp_end)).li(15, int64_t(im.ci));
        p.li(28, int64_t(ncx)).li(29, int64_t(xb)).li(27, int64_t(yb));
    };
    auto col_footer = [&] {
        p.label("colnext");
        p.addi(29, 29, colstep).addi(27, 27, 8).addi(28, 28, -1);
        p.bne(28, 0, "col");
        p.label("fin");
    };
    auto row_epilogue = [&] {
        p.label("next").addi(3, 3, rowstep).addi(2, 2, 4).bne(2, 21, "row");
        p.j("colnext");
    };

    switch (opt.variant) {
    case KernelVariant::Base:
        col_header();
        p.li(16, int64_t(im.mv));
        p.beq(28, 0, "fin");
        p.label("col");
        p.addi(2, 22, 0).addi(3, 27, 0);
        p.beq(2, 21, "colnext");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.beq(8, 9, "empty");
        p.slli(10, 8, lgw).add(10, 10, 15);
        p.slli(11, 8, 3).add(11, 11, 16);
        p.slli(12, 9, lgw).add(12, 12, 15);
        p.fmv(3, kZeroF);
        p.label("inner");
        p.load_i(5, 10, 0, wb).slli(5, 5, 3).add(5, 5, 29);
        p.fld(4, 5, 0).fld(5, 11, 0);
        p.fmadd(3, 4, 5, 3);
        p.addi(10, 10, wb).addi(11, 11, 8);
        p.bne(10, 12, "inner");
        p.fsd(3, 3, 0);
        p.j("next");
        p.label("empty").store_i(0, 3, 0, 8);
        row_epilogue();
        col_footer();
        p.halt();
        break;

    case KernelVariant::Ssr:
        cfg_burst(p, {{0, kCfgBound0, m.nnz()}});
        col_header();
        p.li(30, int64_t(im.mv));
        p.ssr_enable();
        p.beq(28, 0, "fin");
        p.label("col");
        p.scfgw(30, 0, kCfgDataBase); // relaunch the value stream per column
        p.addi(2, 22, 0).addi(3, 27, 0);
        p.beq(2, 21, "colnext");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.beq(8, 9, "empty");
        p.slli(10, 8, lgw).add(10, 10, 15);
        p.slli(12, 9, lgw).add(12, 12, 15);
        p.fmv(3, kZeroF);
        p.label("inner");
        p.load_i(5, 10, 0, wb).slli(5, 5, 3).add(5, 5, 29);
        p.fld(4, 5, 0);
        p.fmadd(3, 4, 0, 3);
        p.addi(10, 10, wb);
        p.bne(10, 12, "inner");
        p.fsd(3, 3, 0);
        p.j("next");
        p.label("empty").store_i(0, 3, 0, 8);
        row_epilogue();
        col_footer();
        p.fence().ssr_disable().halt();
        break;

    case KernelVariant::Sssr: {
        uint64_t ind = make_ctrl(StreamMode::Indirect, StreamDir::Read, m.width, 3, 4);
        cfg_burst(p, {{1, kCfgCtrl, ind},
                      {1, kCfgBound0, m.nnz()},
                      {1, kCfgIdxBase, im.ci},
                      {0, kCfgBound0, m.nnz()}});
        col_header();
        p.li(30, int64_t(im.mv));
        p.li(24, int64_t(t));
        for (unsigned L = 1; L + 1 < t; ++L) p.li(uint8_t(24 + L), int64_t(L));
        p.ssr_enable();
        p.beq(28, 0, "fin");
        p.label("col");
        p.scfgw(29, 1, kCfgDataBase); // gather against the current column
        p.scfgw(30, 0, kCfgDataBase);
        p.addi(2, 22, 0).addi(3, 27, 0);
        p.beq(2, 21, "colnext");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.sub(9, 9, 8);
        p.beq(9, 0, "empty");
        p.blt(9, 24, "short");
        zero_acc(p, K);
        p.frep_reg(9, 1, K, 3);
        p.fmadd(3, 0, 1, 3);
        reduce_acc(p, K);
        p.fsd(3, 3, 0);
        p.j("next");
        p.label("short");
        emit_short_rows(p, t);
        p.label("empty").store_i(0, 3, 0, 8);
        row_epilogue();
        col_footer();
        p.fence().ssr_disable().halt();
        break;
    }
    }
    s.prog = p.build();
    return s;
}

Staged stage_sm_sv(const CsrMatrix& m, const Fiber& v, const KernelOptions& opt) {
    m.validate();
    v.validate();
    if (m.width != v.width) throw ConfigFault("operand index widths differ");
    if (v.dense_len != m.ncols) throw ConfigFault("operand domains differ");
    check_width(m.ncols, m.width, false);
    if (opt.variant == KernelVariant::Ssr)
        throw ConfigFault("kernel has no affine-stream variant");

    unsigned wb = index_bytes(m.width);
    unsigned K = accums(opt, m.width);
    uint64_t nv = v.nnz();
    uint64_t ystride = opt.result_stride ? opt.result_stride : 1;

    Workspace ws;
    MatrixImage im = stage_matrix(ws, m);
    uint64_t vi = ws.alloc(nv * uint64_t(wb));
    uint64_t vv = ws.alloc(nv * 8);
    uint64_t yb = ws.alloc(m.nrows * ystride * 8);

    Staged s(ws.size(), opt);
    fill_matrix(s.mem, im, m);
    put_idxs(s.mem, vi, v.width, v.indices);
    put_f64s(s.mem, vv, v.values);
    s.dense_addr = yb;
    s.dense_count = m.nrows;
    s.dense_stride = ystride;

    ProgramBuilder p;
    progs::SmSvProg pr;
    pr.rp = im.rp;
    pr.rp_end = im.rp_end;
    pr.ci = im.ci;
    pr.mv = im.mv;
    pr.vi = vi;
    pr.vv = vv;
    pr.nv = nv;
    pr.yb = yb;
    pr.ystep = int64_t(ystride) * 8;
    progs::emit_sm_sv(p, pr, opt.variant, m.width, K);
    s.prog = p.build();
    return s;
}

Staged stage_sm_sm(const CsrMatrix& a, const CsrMatrix& b_csc, const KernelOptions& opt) {
    a.validate();
    b_csc.validate();
    if (a.width != b_csc.width) throw ConfigFault("operand index widths differ");
    if (a.ncols != b_csc.ncols) throw ConfigFault("operand shapes incompatible");
    check_width(a.ncols, a.width, false);
    if (opt.variant == KernelVariant::Ssr)
        throw ConfigFault("kernel has no affine-stream variant");

    unsigned wb = index_bytes(a.width);
    unsigned lgw = lg2(wb);
    unsigned sconv = 3 - lgw;
    unsigned K = accums(opt, a.width);
    uint64_t ncb = b_csc.nrows; // stored fibers of the transpose, columns of the product

    Workspace ws;
    MatrixImage ia = stage_matrix(ws, a);
    // the CSC image reuses the same layout: col ptrs, row indices, values
    uint64_t cp = ws.alloc((ncb + 1) * 4);
    uint64_t bri = ws.alloc(b_csc.nnz() * uint64_t(wb));
    uint64_t bvv = ws.alloc(b_csc.nnz() * 8);
    uint64_t yb = ws.alloc(a.nrows * ncb * 8);

    Staged s(ws.size(), opt);
    fill_matrix(s.mem, ia, a);
    put_u32s(s.mem, cp, b_csc.row_ptrs);
    put_idxs(s.mem, bri, b_csc.width, b_csc.col_idcs);
    put_f64s(s.mem, bvv, b_csc.vals);
    s.dense_addr = yb; // row-major nrows x ncb
    s.dense_count = a.nrows * ncb;

    ProgramBuilder p;
    int64_t rowstep = int64_t(ncb) * 8;

    if (opt.variant == KernelVariant::Base) {
        p.li(15, int64_t(ia.ci)).li(16, int64_t(ia.mv));
        p.li(17, int64_t(bri)).li(18, int64_t(bvv));
        p.li(22, int64_t(ia.rp)).li(21, int64_t(ia.rp_end));
        p.li(24, int64_t(cp)).li(27, int64_t(yb)).li(28, int64_t(ncb));
        p.beq(28, 0, "fin");
        p.label("col");
        p.load_i(8, 24, 0, 4).load_i(9, 24, 4, 4);
        p.slli(19, 8, lgw).add(19, 19, 17);
        p.slli(20, 8, 3).add(20, 20, 18);
        p.slli(23, 9, lgw).add(23, 23, 17);
        p.addi(2, 22, 0).addi(3, 27, 0);
        p.beq(2, 21, "colnext");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.beq(8, 9, "empty");
        p.slli(10, 8, lgw).add(10, 10, 15);
        p.slli(4, 9, lgw).add(4, 4, 15);
        p.addi(12, 19, 0);
        p.fmv(3, kZeroF);
        p.beq(12, 23, "store");
        p.load_i(6, 10, 0, wb).load_i(7, 12, 0, wb);
        p.j("dispatch_a");
        p.label("a_adv").addi(10, 10, wb).beq(10, 4, "store").load_i(6, 10, 0, wb);
        p.label("dispatch_a").beq(6, 7, "match").blt(6, 7, "a_adv").j("b_adv");
        p.label("b_adv").addi(12, 12, wb).beq(12, 23, "store").load_i(7, 12, 0, wb);
        p.label("dispatch_b").beq(6, 7, "match").blt(7, 6, "b_adv").j("a_adv");
        p.label("match");
        p.sub(8, 10, 15).slli(8, 8, sconv).add(8, 8, 16);
        p.sub(9, 12, 19).slli(9, 9, sconv).add(9, 9, 20);
        p.fld(4, 8, 0).fld(5, 9, 0);
        p.fmadd(3, 4, 5, 3);
        p.addi(10, 10, wb).addi(12, 12, wb);
        p.beq(10, 4, "store").beq(12, 23, "store");
        p.load_i(6, 10, 0, wb).load_i(7, 12, 0, wb);
        p.j("dispatch_a");
        p.label("store").fsd(3, 3, 0);
        p.j("next");
        p.label("empty").store_i(0, 3, 0, 8);
        p.label("next").addi(3, 3, rowstep).addi(2, 2, 4).bne(2, 21, "row");
        p.label("colnext").addi(24, 24, 4).addi(27, 27, 8).addi(28, 28, -1);
        p.bne(28, 0, "col");
        p.label("fin").halt();
        s.prog = p.build();
        return s;
    }

    uint64_t mc = make_ctrl(StreamMode::MatchIntersect, StreamDir::Read, a.width, 3, 4);
    cfg_burst(p, {{0, kCfgCtrl, mc}, {1, kCfgCtrl, mc}});
    p.li(15, int64_t(ia.ci)).li(16, int64_t(ia.mv));
    p.li(17, int64_t(bri)).li(18, int64_t(bvv));
    p.li(22, int64_t(ia.rp)).li(21, int64_t(ia.rp_end));
    p.li(24, int64_t(cp)).li(27, int64_t(yb)).li(28, int64_t(ncb));
    p.ssr_enable();
    p.beq(28, 0, "fin");
    p.label("col");
    p.load_i(8, 24, 0, 4).load_i(9, 24, 4, 4);
    p.sub(25, 9, 8);
    p.slli(19, 8, lgw).add(19, 19, 17);
    p.slli(26, 8, 3).add(26, 26, 18);
    p.scfgw(25, 1, kCfgBound0); // column fiber shape for this pass
    p.scfgw(19, 1, kCfgIdxBase);
    p.addi(2, 22, 0).addi(3, 27, 0);
    p.beq(2, 21, "colnext");
    p.label("row");
    p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
    p.sub(12, 9, 8);
    p.beq(12, 0, "empty");
    p.slli(10, 8, lgw).add(10, 10, 15);
    p.slli(11, 8, 3).add(11, 11, 16);
    p.scfgw(12, 0, kCfgBound0);
    p.scfgw(10, 0, kCfgIdxBase);
    p.scfgw(11, 0, kCfgDataBase);
    p.scfgw(26, 1, kCfgDataBase);
    zero_acc(p, K);
    p.frep_s(0, 1, K, 3);
    p.fmadd(3, 0, 1, 3);
    reduce_acc(p, K);
    p.fsd(3, 3, 0);
    p.j("next");
    p.label("empty").store_i(0, 3, 0, 8);
    p.label("next").addi(3, 3, rowstep).addi(2, 2, 4).bne(2, 21, "row");
    p.label("colnext").addi(24, 24, 4).addi(27, 27, 8).addi(28, 28, -1);
    p.bne(28, 0, "col");
    p.label("fin").fence().ssr_disable().halt();
    s.prog = p.build();
    return s;
}

} // namespace

namespace progs {

unsigned resolved_accumulators(const KernelOptions& opt, IndexWidth w) { return accums(opt, w); }

unsigned resolved_threshold(const KernelOptions& opt) { return short_row_threshold(opt); }

void emit_sm_dv(ProgramBuilder& p, const SmDvProg& a, KernelVariant v, IndexWidth w, unsigned K,
                unsigned t) {
    unsigned wb = index_bytes(w);
    unsigned lgw = lg2(wb);
    unsigned shift = a.xshift;

    auto row_epilogue = [&] {
        p.label("next").addi(3, 3, a.ystep).addi(2, 2, 4).bne(2, 21, "row");
        p.label("fin");
    };

    switch (v) {
    case KernelVariant::Base:
        p.li(2, int64_t(a.rp)).li(21, int64_t(a.rp_end)).li(3, int64_t(a.yb));
        p.li(4, int64_t(a.xb)).li(15, int64_t(a.ci)).li(16, int64_t(a.mv));
        p.beq(2, 21, "fin");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.beq(8, 9, "empty");
        p.slli(10, 8, lgw).add(10, 10, 15);
        p.slli(11, 8, 3).add(11, 11, 16);
        p.slli(12, 9, lgw).add(12, 12, 15);
        p.fmv(3, kZeroF);
        p.label("inner");
        p.load_i(5, 10, 0, wb).slli(5, 5, shift).add(5, 5, 4);
        p.fld(4, 5, 0).fld(5, 11, 0);
        p.fmadd(3, 4, 5, 3);
        p.addi(10, 10, wb).addi(11, 11, 8);
        p.bne(10, 12, "inner");
        p.fsd(3, 3, 0);
        p.j("next");
        p.label("empty").store_i(0, 3, 0, 8);
        row_epilogue();
        p.halt();
        break;

    case KernelVariant::Ssr:
        p.li(2, int64_t(a.rp)).li(21, int64_t(a.rp_end)).li(3, int64_t(a.yb));
        p.li(4, int64_t(a.xb)).li(15, int64_t(a.ci));
        cfg_burst(p, {{0, kCfgDataBase, a.gather_val}});
        p.ssr_enable();
        p.beq(2, 21, "fin");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.beq(8, 9, "empty");
        p.slli(10, 8, lgw).add(10, 10, 15);
        p.slli(12, 9, lgw).add(12, 12, 15);
        p.fmv(3, kZeroF);
        p.label("inner");
        p.load_i(5, 10, 0, wb).slli(5, 5, shift).add(5, 5, 4);
        p.fld(4, 5, 0);
        p.fmadd(3, 4, 0, 3);
        p.addi(10, 10, wb);
        p.bne(10, 12, "inner");
        p.fsd(3, 3, 0);
        p.j("next");
        p.label("empty").store_i(0, 3, 0, 8);
        row_epilogue();
        p.fence().ssr_disable().halt();
        break;

    case KernelVariant::Sssr: {
        // one gather job covers the whole row range; the per-row loop only
        // picks how many elements the hardware loop consumes
        uint64_t ind = make_ctrl(StreamMode::Indirect, StreamDir::Read, w, shift, 4);
        // the burst stages through x20.., so it runs before the loop registers
        cfg_burst(p, {{1, kCfgCtrl, ind},
                      {1, kCfgBound0, a.gather_count},
                      {1, kCfgIdxBase, a.gather_idx},
                      {1, kCfgDataBase, a.xb},
                      {0, kCfgDataBase, a.gather_val}});
        p.li(2, int64_t(a.rp)).li(21, int64_t(a.rp_end)).li(3, int64_t(a.yb));
        p.li(24, int64_t(t));
        for (unsigned L = 1; L + 1 < t; ++L) p.li(uint8_t(24 + L), int64_t(L));
        p.ssr_enable();
        p.beq(2, 21, "fin");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.sub(9, 9, 8);
        p.beq(9, 0, "empty");
        p.blt(9, 24, "short");
        zero_acc(p, K);
        p.frep_reg(9, 1, K, 3);
        p.fmadd(3, 0, 1, 3);
        reduce_acc(p, K);
        p.fsd(3, 3, 0);
        p.j("next");
        p.label("short");
        emit_short_rows(p, t);
        p.label("empty").store_i(0, 3, 0, 8);
        row_epilogue();
        p.fence().ssr_disable().halt();
        break;
    }
    }
}

void emit_sm_sv(ProgramBuilder& p, const SmSvProg& a, KernelVariant v, IndexWidth w, unsigned K) {
    if (v == KernelVariant::Ssr) throw ConfigFault("kernel has no affine-stream variant");

    unsigned wb = index_bytes(w);
    unsigned lgw = lg2(wb);
    unsigned sconv = 3 - lgw;

    if (v == KernelVariant::Base) {
        uint64_t vi_end = a.vi + a.nv * uint64_t(wb);
        // per row: two-pointer intersection against the vector fiber
        p.li(2, int64_t(a.rp)).li(21, int64_t(a.rp_end)).li(3, int64_t(a.yb));
        p.li(15, int64_t(a.ci)).li(16, int64_t(a.mv));
        p.li(17, int64_t(a.vi)).li(18, int64_t(a.vv)).li(23, int64_t(vi_end));
        p.beq(2, 21, "fin");
        p.label("row");
        p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
        p.beq(8, 9, "empty");
        p.slli(10, 8, lgw).add(10, 10, 15);
        p.slli(4, 9, lgw).add(4, 4, 15);
        p.addi(12, 17, 0);
        p.fmv(3, kZeroF);
        p.beq(12, 23, "store");
        p.load_i(6, 10, 0, wb).load_i(7, 12, 0, wb);
        p.j("dispatch_a");
        p.label("a_adv").addi(10, 10, wb).beq(10, 4, "store").load_i(6, 10, 0, wb);
        p.label("dispatch_a").beq(6, 7, "match").blt(6, 7, "a_adv").j("b_adv");
        p.label("b_adv").addi(12, 12, wb).beq(12, 23, "store").load_i(7, 12, 0, wb);
        p.label("dispatch_b").beq(6, 7, "match").blt(7, 6, "b_adv").j("a_adv");
        p.label("match");
        p.sub(8, 10, 15).slli(8, 8, sconv).add(8, 8, 16);
        p.sub(9, 12, 17).slli(9, 9, sconv).add(9, 9, 18);
        p.fld(4, 8, 0).fld(5, 9, 0);
        p.fmadd(3, 4, 5, 3);
        p.addi(10, 10, wb).addi(12, 12, wb);
        p.beq(10, 4, "store").beq(12, 23, "store");
        p.load_i(6, 10, 0, wb).load_i(7, 12, 0, wb);
        p.j("dispatch_a");
        p.label("store").fsd(3, 3, 0);
        p.j("next");
        p.label("empty").store_i(0, 3, 0, 8);
        p.label("next").addi(3, 3, a.ystep).addi(2, 2, 4).bne(2, 21, "row");
        p.label("fin").halt();
        return;
    }

    // SSSR: the vector side keeps its shadow config; each row launches a
    // fresh fiber pair into the comparator.
    uint64_t mc = make_ctrl(StreamMode::MatchIntersect, StreamDir::Read, w, 3, 4);
    cfg_burst(p,
              {{0, kCfgCtrl, mc}, {1, kCfgCtrl, mc}, {1, kCfgBound0, a.nv}, {1, kCfgIdxBase, a.vi}});
    p.li(2, int64_t(a.rp)).li(21, int64_t(a.rp_end)).li(3, int64_t(a.yb));
    p.li(15, int64_t(a.ci)).li(16, int64_t(a.mv)).li(26, int64_t(a.vv));
    p.ssr_enable();
    p.beq(2, 21, "fin");
    p.label("row");
    p.load_i(8, 2, 0, 4).load_i(9, 2, 4, 4);
    p.sub(12, 9, 8);
    p.beq(12, 0, "empty");
    p.slli(10, 8, lgw).add(10, 10, 15);
    p.slli(11, 8, 3).add(11, 11, 16);
    p.scfgw(12, 0, kCfgBound0);
    p.scfgw(10, 0, kCfgIdxBase);
    p.scfgw(11, 0, kCfgDataBase);
    p.scfgw(26, 1, kCfgDataBase);
    zero_acc(p, K);
    p.frep_s(0, 1, K, 3);
    p.fmadd(3, 0, 1, 3);
    reduce_acc(p, K);
    p.fsd(3, 3, 0);
    p.j("next");
    p.label("empty").store_i(0, 3, 0, 8);
    p.label("next").addi(3, 3, a.ystep).addi(2, 2, 4).bne(2, 21, "row");
    p.label("fin").fence().ssr_disable().halt();
}

} // namespace progs

KernelResult run_sv_dv(KernelId id, const Fiber& a, const DenseVector& b,
                       const KernelOptions& opt) {
    Staged s = stage_sv_dv(id, a, b, opt);
    return execute(s, opt);
}

KernelResult run_sv_sv(KernelId id, const Fiber& a, const Fiber& b, const KernelOptions& opt) {
    Staged s = stage_sv_sv(id, a, b, opt);
    return execute(s, opt);
}

KernelResult run_sm_dv(const CsrMatrix& m, const DenseVector& x, const KernelOptions& opt) {
    Staged s = stage_sm_dv(m, x, opt);
    return execute(s, opt);
}

KernelResult run_sm_dm(const CsrMatrix& m, const std::vector<double>& x, uint64_t ncols,
                       const KernelOptions& opt) {
    Staged s = stage_sm_dm(m, x, ncols, opt);
    return execute(s, opt);
}

KernelResult run_sm_sv(const CsrMatrix& m, const Fiber& v, const KernelOptions& opt) {
    Staged s = stage_sm_sv(m, v, opt);
    return execute(s, opt);
}

KernelResult run_sm_sm(const CsrMatrix& a, const CsrMatrix& b_csc, const KernelOptions& opt) {
    Staged s = stage_sm_sm(a, b_csc, opt);
    return execute(s, opt);
}

Program build_sv_dv_program(KernelId id, const Fiber& a, const DenseVector& b,
                            const KernelOptions& opt) {
    return stage_sv_dv(id, a, b, opt).prog;
}

Program build_sv_sv_program(KernelId id, const Fiber& a, const Fiber& b,
                            const KernelOptions& opt) {
    return stage_sv_sv(id, a, b, opt).prog;
}

} // namespace ssrsim
