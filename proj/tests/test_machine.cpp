#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ssrsim/core.hpp"
#include "ssrsim/memory.hpp"
#include "ssrsim/oracle.hpp"
#include "ssrsim/prng.hpp"
#include "ssrsim/streamer.hpp"

#include <algorithm>
#include <iterator>
#include <vector>

using namespace ssrsim;

namespace {

void put_f64(Memory& m, uint64_t addr, const std::vector<double>& vs) {
    for (size_t i = 0; i < vs.size(); ++i) m.store_f64(addr + 8 * i, vs[i]);
}

void put_idx(Memory& m, uint64_t addr, IndexWidth w, const std::vector<uint64_t>& idx) {
    unsigned b = index_bytes(w);
    for (size_t i = 0; i < idx.size(); ++i) m.store_uint(addr + b * i, b, idx[i]);
}

uint64_t ctrl(StreamMode mode, StreamDir dir, IndexWidth w, unsigned shift = 3,
              unsigned lead = 4) {
    return make_ctrl(mode, dir, w, shift, lead);
}

} // namespace

// ==== instruction issue timing =============================================

TEST_CASE("a lone halt takes one cycle") {
    Memory m(4096);
    ProgramBuilder b;
    b.halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(r.total_cycles == 1);
    CHECK(r.instructions == 1);
    CHECK(r.fpu_busy == 0);
    CHECK(r.stalls_total() == 0);
}

TEST_CASE("integer ops issue one per cycle and results are usable next cycle") {
    Memory m(4096);
    ProgramBuilder b;
    b.li(1, 5).addi(2, 1, 3).add(3, 1, 2).sub(4, 3, 1).slli(5, 4, 4).srli(6, 5, 2).halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(r.total_cycles == 7); // six instructions + halt, zero stalls
    CHECK(e.xreg(2) == 8);
    CHECK(e.xreg(3) == 13);
    CHECK(e.xreg(4) == 8);
    CHECK(e.xreg(5) == 128);
    CHECK(e.xreg(6) == 32);
}

TEST_CASE("integer loads have no load-use penalty") {
    Memory m(4096);
    m.store_uint(64, 8, 41);
    ProgramBuilder b;
    b.li(1, 64).load_i(2, 1, 0, 8).addi(3, 2, 1).halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(r.total_cycles == 4);
    CHECK(e.xreg(3) == 42);
}

TEST_CASE("sub-word integer loads zero-extend") {
    Memory m(4096);
    m.store_uint(64, 8, 0xfedcba9876543210ull);
    ProgramBuilder b;
    b.li(1, 64)
        .load_i(2, 1, 0, 1)
        .load_i(3, 1, 0, 2)
        .load_i(4, 1, 0, 4)
        .store_i(2, 1, 8, 2)
        .halt();
    CoreEngine e(b.build(), m);
    e.run();
    CHECK(e.xreg(2) == 0x10);
    CHECK(e.xreg(3) == 0x3210);
    CHECK(e.xreg(4) == 0x76543210);
    CHECK(m.load_uint(72, 2) == 0x10);
}

// ==== branch costs ==========================================================

TEST_CASE("backward taken branches cost one cycle, the exit costs two") {
    Memory m(4096);
    ProgramBuilder b;
    b.li(1, 10).label("loop").addi(1, 1, -1).bne(1, 0, "loop").halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    // li + 10*(addi+bne) + exit bubble + halt
    CHECK(r.instructions == 22);
    CHECK(r.stall_dependency == 1);
    CHECK(r.total_cycles == 23);
}

TEST_CASE("forward taken branch pays the misprediction bubble") {
    Memory m(4096);
    ProgramBuilder b;
    b.beq(0, 0, "skip").addi(1, 0, 7).label("skip").halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.xreg(1) == 0);
    CHECK(r.instructions == 2);
    CHECK(r.stall_dependency == 1);
    CHECK(r.total_cycles == 3);
}

TEST_CASE("forward not-taken branch costs a single cycle") {
    Memory m(4096);
    ProgramBuilder b;
    b.bne(0, 0, "skip").addi(1, 0, 7).label("skip").halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.xreg(1) == 7);
    CHECK(r.total_cycles == 3); // bne + addi + halt, no bubble
    CHECK(r.stalls_total() == 0);
}

TEST_CASE("direct jumps cost one cycle") {
    Memory m(4096);
    ProgramBuilder b;
    b.j("over").addi(1, 0, 1).label("over").halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.xreg(1) == 0);
    CHECK(r.total_cycles == 2);
}

// ==== FP pipeline ===========================================================

TEST_CASE("FP results land a fixed latency after issue") {
    Memory m(4096);
    put_f64(m, 64, {1.5});
    ProgramBuilder b;
    b.li(1, 64).fld(4, 1, 0).fadd(5, 4, 4).fsd(5, 1, 8).halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(m.load_f64(72) == 3.0);
    // li@0 fld@1 fadd@2 (FPU issues @2, ready @5) fsd stalls @3,4 issues @5 halt@6
    CHECK(r.total_cycles == 7);
    CHECK(r.stall_dependency == 2);
}

TEST_CASE("counted hardware loops stagger their accumulator block") {
    Memory m(4096);
    put_f64(m, 256, {1.0});
    ProgramBuilder b;
    b.li(1, 256).fld(5, 1, 0);
    b.frep_imm(4, 1, 2, 3).fadd(3, 3, 5); // rotate {f3, f4}
    b.fence().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.freg(3) == 2.0);
    CHECK(e.freg(4) == 2.0);
    CHECK(r.fpu_busy == 4);
    CHECK(r.instructions == 6); // the body is fetched once
}

TEST_CASE("a zero-trip counted loop skips its body") {
    Memory m(4096);
    ProgramBuilder b;
    b.frep_imm(0, 1).fadd(3, 3, 3).fence().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(r.fpu_busy == 0);
    CHECK(e.freg(3) == 0.0);
}

TEST_CASE("register-count loops read the trip count at issue") {
    Memory m(4096);
    put_f64(m, 256, {2.0});
    ProgramBuilder b;
    b.li(1, 256).fld(5, 1, 0).li(2, 3);
    b.frep_reg(2, 1).fadd(3, 3, 5);
    b.li(2, 100) // changing the register afterwards must not matter
        .fence()
        .halt();
    CoreEngine e(b.build(), m);
    e.run();
    CHECK(e.freg(3) == 6.0);
}

TEST_CASE("the core runs ahead of a long FP loop") {
    Memory m(1 << 16);
    put_f64(m, 256, {1.0});
    ProgramBuilder b;
    b.li(1, 256).fld(5, 1, 0);
    b.frep_imm(64, 1, 4, 8).fadd(8, 8, 5);
    // integer work and stream configuration proceed under the loop
    for (int k = 0; k < 6; ++k) b.addi(2, 2, 1);
    b.li(3, 99).scfgw(3, 1, kCfgBound0);
    b.fence().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.xreg(2) == 6);
    // nothing but the fence blocks: the queue was drained by then
    CHECK(r.stall_dependency == 0);
    CHECK(r.stall_stream_data == 0);
    CHECK(r.stall_fence_drain > 30);
    CHECK(r.fpu_busy == 64);
}

// ==== streams: affine and indirect ==========================================

TEST_CASE("a single config write launches a default affine read") {
    Memory m(1 << 16);
    put_f64(m, 1024, {1.0, 2.0, 3.0, 4.0, 5.0});
    ProgramBuilder b;
    b.li(1, 1024).scfgw(1, 0, kCfgDataBase).ssr_enable();
    b.frep_imm(5, 1).fadd(3, 3, 0);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.freg(3) == 15.0);
    CHECK(r.setup_span() == 1);
    CHECK(r.lanes[0].delivered == 5);
}

TEST_CASE("bounded affine jobs complete and chain through the shadow slot") {
    Memory m(1 << 16);
    put_f64(m, 1024, {1.0, 2.0});
    put_f64(m, 2048, {10.0, 20.0});
    put_f64(m, 4096, {100.0, 200.0});
    ProgramBuilder b;
    b.li(1, 2).scfgw(1, 0, kCfgBound0);
    b.li(2, 1024).scfgw(2, 0, kCfgDataBase); // job A: active
    b.li(3, 2048).scfgw(3, 0, kCfgDataBase); // job B: pending
    b.li(4, 4096).scfgw(4, 0, kCfgDataBase); // job C: stalls until A retires
    b.ssr_enable();
    b.frep_imm(6, 1).fadd(3, 3, 0);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.freg(3) == 333.0);
    CHECK(r.lanes[0].delivered == 6);
}

TEST_CASE("a launch against two occupied job slots stalls until one retires") {
    Memory m(1 << 16);
    const uint64_t n = 12;
    put_f64(m, 1024, std::vector<double>(n, 1.0));
    put_f64(m, 2048, std::vector<double>(n, 2.0));
    put_f64(m, 4096, std::vector<double>(n, 4.0));
    ProgramBuilder b;
    b.li(1, int64_t(n)).scfgw(1, 0, kCfgBound0);
    b.li(2, 1024).scfgw(2, 0, kCfgDataBase); // active, throttled by the FIFO
    b.li(3, 2048).scfgw(3, 0, kCfgDataBase); // pending
    b.ssr_enable();
    b.li(5, 4096);
    b.frep_imm(3 * int64_t(n), 1).fadd(3, 3, 0); // consumption frees slots
    b.scfgw(5, 0, kCfgDataBase); // retried until the active job retires
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.freg(3) == double(n) * 7.0);
    CHECK(r.stall_dependency > 0); // the third launch had to wait
}

TEST_CASE("multi-level affine streams walk nested loops") {
    Memory m(1 << 16);
    // 2 rows of 3 doubles, row stride 64
    put_f64(m, 1024, {1.0, 2.0, 3.0});
    put_f64(m, 1024 + 64, {4.0, 5.0, 6.0});
    ProgramBuilder b;
    b.li(1, 3).scfgw(1, 0, kCfgBound0);
    b.li(1, 2).scfgw(1, 0, kCfgBound1);
    b.li(2, 8).scfgw(2, 0, kCfgStride0);
    b.li(2, 64).scfgw(2, 0, kCfgStride1);
    b.li(3, 1024).scfgw(3, 0, kCfgDataBase);
    b.ssr_enable();
    b.frep_imm(6, 1).fadd(3, 3, 0);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    e.run();
    CHECK(e.freg(3) == 21.0);
}

TEST_CASE("indirect streams gather through an index array") {
    for (IndexWidth w : {IndexWidth::W8, IndexWidth::W16, IndexWidth::W32, IndexWidth::W64}) {
        CAPTURE(index_bits(w));
        Memory m(1 << 16);
        put_f64(m, 0x2000, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0});
        put_idx(m, 0x1000, w, {7, 0, 3, 3, 5});
        ProgramBuilder b;
        b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Read, w)));
        b.li(2, 5).li(3, 0x1000).li(4, 0x2000);
        b.scfgw(1, 1, kCfgCtrl)
            .scfgw(2, 1, kCfgBound0)
            .scfgw(3, 1, kCfgIdxBase)
            .scfgw(4, 1, kCfgDataBase);
        b.ssr_enable();
        b.frep_imm(5, 1).fadd(3, 3, 1);
        b.fence().ssr_disable().halt();
        CoreEngine e(b.build(), m);
        auto r = e.run();
        CHECK(e.freg(3) == 18.0);
        CHECK(r.lanes[1].delivered == 5);
        // the four config writes issue back to back once operands are staged
        CHECK(r.setup_span() == 4);
    }
}

TEST_CASE("indirect streams tolerate an unaligned index base") {
    Memory m(1 << 16);
    put_f64(m, 0x2000, {0.0, 10.0, 20.0, 30.0});
    put_idx(m, 0x1002, IndexWidth::W16, {3, 1, 2}); // not word-aligned
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Read, IndexWidth::W16)))
        .scfgw(1, 1, kCfgCtrl);
    b.li(1, 3).scfgw(1, 1, kCfgBound0);
    b.li(1, 0x1002).scfgw(1, 1, kCfgIdxBase);
    b.li(1, 0x2000).scfgw(1, 1, kCfgDataBase);
    b.ssr_enable();
    b.frep_imm(3, 1).fadd(3, 3, 1);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    e.run();
    CHECK(e.freg(3) == 60.0);
}

// ==== streams: writes =======================================================

TEST_CASE("affine write streams store computed results") {
    Memory m(1 << 16);
    put_f64(m, 512, {2.5});
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::Affine, StreamDir::Write, IndexWidth::W64)))
        .scfgw(1, 2, kCfgCtrl);
    b.li(1, 3).scfgw(1, 2, kCfgBound0);
    b.li(1, 0x3000).scfgw(1, 2, kCfgDataBase);
    b.li(2, 512).fld(5, 2, 0);
    b.ssr_enable();
    b.frep_imm(3, 1).fmv(2, 5);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(m.load_f64(0x3000) == 2.5);
    CHECK(m.load_f64(0x3008) == 2.5);
    CHECK(m.load_f64(0x3010) == 2.5);
    CHECK(r.lanes[2].written == 3);
}

TEST_CASE("indirect write streams scatter by index") {
    Memory m(1 << 16);
    put_f64(m, 512, {3.25});
    put_idx(m, 0x1000, IndexWidth::W32, {2, 5, 7});
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Write, IndexWidth::W32)))
        .scfgw(1, 1, kCfgCtrl);
    b.li(1, 3).scfgw(1, 1, kCfgBound0);
    b.li(1, 0x1000).scfgw(1, 1, kCfgIdxBase);
    b.li(1, 0x4000).scfgw(1, 1, kCfgDataBase);
    b.li(2, 512).fld(5, 2, 0);
    b.ssr_enable();
    b.frep_imm(3, 1).fmv(1, 5);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    e.run();
    CHECK(m.load_f64(0x4000 + 2 * 8) == 3.25);
    CHECK(m.load_f64(0x4000 + 5 * 8) == 3.25);
    CHECK(m.load_f64(0x4000 + 7 * 8) == 3.25);
    CHECK(m.load_f64(0x4000) == 0.0);
}

// ==== streams: joint index traversal ========================================

TEST_CASE("intersection pairs matching indices and feeds a token loop") {
    Memory m(1 << 16);
    put_idx(m, 0x1000, IndexWidth::W16, {1, 3});
    put_idx(m, 0x1100, IndexWidth::W16, {3, 9});
    put_f64(m, 0x2000, {10.0, 20.0});
    put_f64(m, 0x2100, {30.0, 40.0});
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::MatchIntersect, StreamDir::Read, IndexWidth::W16)));
    b.scfgw(1, 0, kCfgCtrl).scfgw(1, 1, kCfgCtrl);
    b.li(2, 2).scfgw(2, 0, kCfgBound0).scfgw(2, 1, kCfgBound0);
    b.li(3, 0x1000).scfgw(3, 0, kCfgIdxBase);
    b.li(3, 0x1100).scfgw(3, 1, kCfgIdxBase);
    b.li(4, 0x2000).scfgw(4, 0, kCfgDataBase);
    b.li(4, 0x2100).scfgw(4, 1, kCfgDataBase);
    b.ssr_enable();
    b.frep_s(0, 1).fmadd(3, 0, 1, 3);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.freg(3) == 600.0); // 20 * 30, the single match at index 3
    CHECK(r.fpu_busy == 1);
    CHECK(r.lanes[0].skipped == 1); // index 1 skipped on the left
    CHECK(r.comparator_events == 1);
}

TEST_CASE("union merges both streams with zero fills and an egress job") {
    Memory m(1 << 16);
    put_idx(m, 0x1000, IndexWidth::W16, {1, 3});
    put_idx(m, 0x1100, IndexWidth::W16, {3, 9});
    put_f64(m, 0x2000, {10.0, 20.0});
    put_f64(m, 0x2100, {30.0, 40.0});
    ProgramBuilder b;
    // egress first so the joint stream always has a consumer
    b.li(1, 0x5000).scfgw(1, 2, kCfgIdxBase);
    b.li(1, 0x6000).scfgw(1, 2, kCfgDataBase);
    b.li(1, int64_t(ctrl(StreamMode::MatchUnion, StreamDir::Read, IndexWidth::W16)));
    b.scfgw(1, 0, kCfgCtrl).scfgw(1, 1, kCfgCtrl);
    b.li(2, 2).scfgw(2, 0, kCfgBound0).scfgw(2, 1, kCfgBound0);
    b.li(3, 0x1000).scfgw(3, 0, kCfgIdxBase);
    b.li(3, 0x1100).scfgw(3, 1, kCfgIdxBase);
    b.li(4, 0x2000).scfgw(4, 0, kCfgDataBase);
    b.li(4, 0x2100).scfgw(4, 1, kCfgDataBase);
    b.ssr_enable();
    b.frep_s(0, 1).fadd(2, 0, 1);
    b.fence();
    b.scfgr(10, 2, kCfgLength);
    b.ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(m.load_f64(0x6000) == 10.0); // 10 + 0
    CHECK(m.load_f64(0x6008) == 50.0); // 20 + 30
    CHECK(m.load_f64(0x6010) == 40.0); // 0 + 40
    CHECK(m.load_uint(0x5000, 2) == 1);
    CHECK(m.load_uint(0x5002, 2) == 3);
    CHECK(m.load_uint(0x5004, 2) == 9);
    CHECK(e.xreg(10) == 3); // joint length latched for the core
    CHECK(r.lanes[0].injected_zero == 1);
    CHECK(r.lanes[1].injected_zero == 1);
    CHECK(r.fpu_busy == 3);
}

TEST_CASE("egress coalesces full index words and flushes the ragged tail") {
    Memory m(1 << 16);
    const uint64_t n = 7; // one full 4-index word plus a 3-index tail at W16
    std::vector<uint64_t> ia, ib;
    std::vector<double> va, vb;
    for (uint64_t k = 0; k < n; ++k) {
        ia.push_back(2 * k);
        ib.push_back(2 * k); // identical streams: the union is the diagonal
        va.push_back(double(k));
        vb.push_back(double(10 * k));
    }
    put_idx(m, 0x1000, IndexWidth::W16, ia);
    put_idx(m, 0x1100, IndexWidth::W16, ib);
    put_f64(m, 0x2000, va);
    put_f64(m, 0x2100, vb);
    ProgramBuilder b;
    b.li(1, 0x5000).scfgw(1, 2, kCfgIdxBase);
    b.li(1, 0x6000).scfgw(1, 2, kCfgDataBase);
    b.li(1, int64_t(ctrl(StreamMode::MatchUnion, StreamDir::Read, IndexWidth::W16)));
    b.scfgw(1, 0, kCfgCtrl).scfgw(1, 1, kCfgCtrl);
    b.li(2, int64_t(n)).scfgw(2, 0, kCfgBound0).scfgw(2, 1, kCfgBound0);
    b.li(3, 0x1000).scfgw(3, 0, kCfgIdxBase);
    b.li(3, 0x1100).scfgw(3, 1, kCfgIdxBase);
    b.li(4, 0x2000).scfgw(4, 0, kCfgDataBase);
    b.li(4, 0x2100).scfgw(4, 1, kCfgDataBase);
    b.ssr_enable();
    b.frep_s(0, 1).fadd(2, 0, 1);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    e.run();
    for (uint64_t k = 0; k < n; ++k) {
        CHECK(m.load_uint(0x5000 + 2 * k, 2) == 2 * k);
        CHECK(m.load_f64(0x6000 + 8 * k) == double(k) + double(10 * k));
    }
}

// ==== stream register switch semantics ======================================

TEST_CASE("stream registers behave as plain registers while disabled") {
    Memory m(4096);
    put_f64(m, 64, {4.0});
    ProgramBuilder b;
    b.li(1, 64).fld(0, 1, 0).fadd(1, 0, 0).fmv(2, 1).fsd(2, 1, 8).halt();
    CoreEngine e(b.build(), m);
    e.run();
    CHECK(m.load_f64(72) == 8.0);
}

TEST_CASE("reading an enabled stream register with no job faults") {
    Memory m(4096);
    ProgramBuilder b;
    b.ssr_enable().fadd(3, 0, 0).fence().halt();
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), SimFault);
}

TEST_CASE("core loads and stores must not touch live stream registers") {
    Memory m(1 << 16);
    put_f64(m, 1024, {1.0, 2.0});
    ProgramBuilder b;
    b.li(1, 1024).scfgw(1, 0, kCfgDataBase).ssr_enable();
    b.fsd(0, 1, 0).halt();
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), SimFault);
}

TEST_CASE("writing a read-direction stream register faults") {
    Memory m(1 << 16);
    put_f64(m, 1024, {1.0});
    ProgramBuilder b;
    b.li(1, 1024).scfgw(1, 0, kCfgDataBase).ssr_enable();
    b.fmv(0, 5).fence().halt();
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), SimFault);
}

TEST_CASE("a union stream with no egress job faults") {
    Memory m(1 << 16);
    put_idx(m, 0x1000, IndexWidth::W16, {1});
    put_idx(m, 0x1100, IndexWidth::W16, {1});
    put_f64(m, 0x2000, {1.0});
    put_f64(m, 0x2100, {1.0});
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::MatchUnion, StreamDir::Read, IndexWidth::W16)));
    b.scfgw(1, 0, kCfgCtrl).scfgw(1, 1, kCfgCtrl);
    b.li(2, 1).scfgw(2, 0, kCfgBound0).scfgw(2, 1, kCfgBound0);
    b.li(3, 0x1000).scfgw(3, 0, kCfgIdxBase);
    b.li(3, 0x1100).scfgw(3, 1, kCfgIdxBase);
    b.li(4, 0x2000).scfgw(4, 0, kCfgDataBase);
    b.li(4, 0x2100).scfgw(4, 1, kCfgDataBase);
    b.ssr_enable();
    b.frep_s(0, 1).fadd(2, 0, 1);
    b.fence().halt();
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), SimFault);
}

TEST_CASE("indirect launches demand their mandatory fields") {
    Memory m(1 << 16);
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Read, IndexWidth::W16)))
        .scfgw(1, 1, kCfgCtrl);
    b.li(1, 4).scfgw(1, 1, kCfgBound0);
    b.li(1, 0x2000).scfgw(1, 1, kCfgDataBase); // no index base was ever written
    b.halt();
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), ConfigFault);
}

TEST_CASE("an unbounded stream consumed past its data faults") {
    Memory m(4096); // tiny: the affine job parks at the end quickly
    ProgramBuilder b;
    b.li(1, 4096 - 16).scfgw(1, 0, kCfgDataBase).ssr_enable();
    b.frep_imm(10, 1).fadd(3, 3, 0);
    b.fence().halt();
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), SimFault);
}

TEST_CASE("running past the end of the program faults") {
    Memory m(4096);
    ProgramBuilder b;
    b.addi(1, 0, 1);
    CoreEngine e(b.build(), m);
    CHECK_THROWS_AS(e.run(), SimFault);
}

TEST_CASE("disabling cancels unbounded reads so teardown terminates") {
    Memory m(1 << 16);
    put_f64(m, 1024, {1.0, 2.0, 3.0, 4.0});
    ProgramBuilder b;
    b.li(1, 1024).scfgw(1, 0, kCfgDataBase).ssr_enable();
    b.frep_imm(3, 1).fadd(3, 3, 0);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(e.freg(3) == 6.0);
    CHECK(r.total_cycles < 60);
}

// ==== lane throughput =======================================================

namespace {

// Indirect gather of n identity indices; the FP loop consumes at full rate so
// the lane's shared index/data port is the bottleneck.
double gather_throughput(IndexWidth w, uint64_t n) {
    Memory m(1 << 22);
    std::vector<uint64_t> idx(n);
    for (uint64_t k = 0; k < n; ++k) idx[k] = k;
    put_idx(m, 0x10000, w, idx);
    std::vector<double> vals(n, 1.0);
    put_f64(m, 0x100000, vals);
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Read, w))).scfgw(1, 1, kCfgCtrl);
    b.li(1, int64_t(n)).scfgw(1, 1, kCfgBound0);
    b.li(1, 0x10000).scfgw(1, 1, kCfgIdxBase);
    b.li(1, 0x100000).scfgw(1, 1, kCfgDataBase);
    b.ssr_enable();
    for (unsigned k = 0; k < 4; ++k) b.fmv(8 + k, 31);
    b.frep_imm(int64_t(n), 1, 4, 8).fadd(8, 8, 1);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    REQUIRE(r.lanes[1].delivered == n);
    uint64_t window = r.lanes[1].last_activity - r.lanes[1].first_grant + 1;
    return double(n) / double(window);
}

} // namespace

TEST_CASE("indirect data throughput approaches w/(w+1) per index word") {
    CHECK(gather_throughput(IndexWidth::W8, 4096) ==
          doctest::Approx(8.0 / 9.0).epsilon(0.01));
    CHECK(gather_throughput(IndexWidth::W16, 4096) == doctest::Approx(0.8).epsilon(0.01));
    CHECK(gather_throughput(IndexWidth::W32, 4096) ==
          doctest::Approx(2.0 / 3.0).epsilon(0.01));
    CHECK(gather_throughput(IndexWidth::W64, 4096) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("affine streams sustain one element per cycle") {
    Memory m(1 << 22);
    const uint64_t n = 4096;
    std::vector<double> vals(n, 1.0);
    put_f64(m, 0x10000, vals);
    ProgramBuilder b;
    b.li(1, 0x10000).scfgw(1, 0, kCfgDataBase).ssr_enable();
    for (unsigned k = 0; k < 4; ++k) b.fmv(8 + k, 31);
    b.frep_imm(int64_t(n), 1, 4, 8).fadd(8, 8, 0);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    REQUIRE(r.lanes[0].delivered == n);
    uint64_t window = r.lanes[0].last_activity - r.lanes[0].first_grant + 1;
    CHECK(double(n) / double(window) == doctest::Approx(1.0).epsilon(0.01));
}

// ==== memory traffic accounting =============================================

TEST_CASE("stream traffic matches the functional access count exactly") {
    Memory m(1 << 20);
    const uint64_t n = 256;
    std::vector<uint64_t> idx(n);
    for (uint64_t k = 0; k < n; ++k) idx[k] = k;
    put_idx(m, 0x10000, IndexWidth::W16, idx);
    put_f64(m, 0x20000, std::vector<double>(n, 1.0));
    m.reset_counters();
    ProgramBuilder b;
    b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Read, IndexWidth::W16)))
        .scfgw(1, 1, kCfgCtrl);
    b.li(1, int64_t(n)).scfgw(1, 1, kCfgBound0);
    b.li(1, 0x10000).scfgw(1, 1, kCfgIdxBase);
    b.li(1, 0x20000).scfgw(1, 1, kCfgDataBase);
    b.ssr_enable();
    for (unsigned k = 0; k < 4; ++k) b.fmv(8 + k, 31);
    b.frep_imm(int64_t(n), 1, 4, 8).fadd(8, 8, 1);
    b.fence().ssr_disable().halt();
    CoreEngine e(b.build(), m);
    auto r = e.run();
    CHECK(r.mem_reads == n + n / 4); // n values + n/4 index words, nothing else
    CHECK(r.mem_writes == 0);
    CHECK(r.lanes[1].idx_words == n / 4);
    CHECK(r.lanes[1].data_accesses == n);
}

// ==== banked timing =========================================================

TEST_CASE("bank queues serialize same-cycle requests") {
    Memory m(1 << 16, 32, true);
    uint64_t g0 = m.request(10, 0);      // bank 0
    uint64_t g1 = m.request(10, 8 * 32); // bank 0 again
    uint64_t g2 = m.request(10, 8);      // bank 1, free
    uint64_t g3 = m.request(11, 8 * 64); // bank 0, queued behind g1
    CHECK(g0 == 10);
    CHECK(g1 == 11);
    CHECK(g2 == 10);
    CHECK(g3 == 12);
    CHECK(m.conflict_count() == 2);
}

TEST_CASE("banked execution is never faster and stays functionally identical") {
    auto run_once = [](bool banked) {
        Memory m(1 << 20, 32, banked);
        const uint64_t n = 512;
        std::vector<uint64_t> idx(n);
        Xoshiro256pp rng(7);
        uint64_t cur = 0;
        for (uint64_t k = 0; k < n; ++k) {
            cur += 1 + rng.next_below(3);
            idx[k] = cur;
        }
        put_idx(m, 0x10000, IndexWidth::W16, idx);
        put_f64(m, 0x20000, std::vector<double>(cur + 1, 0.5));
        ProgramBuilder b;
        b.li(1, int64_t(ctrl(StreamMode::Indirect, StreamDir::Read, IndexWidth::W16)))
            .scfgw(1, 1, kCfgCtrl);
        b.li(1, int64_t(n)).scfgw(1, 1, kCfgBound0);
        b.li(1, 0x10000).scfgw(1, 1, kCfgIdxBase);
        b.li(1, 0x20000).scfgw(1, 1, kCfgDataBase);
        b.ssr_enable();
        for (unsigned k = 0; k < 4; ++k) b.fmv(8 + k, 31);
        b.frep_imm(int64_t(n), 1, 4, 8).fadd(8, 8, 1);
        b.fence().ssr_disable().halt();
        CoreEngine e(b.build(), m);
        auto r = e.run();
        return std::pair<uint64_t, double>(r.total_cycles, e.freg(8) + e.freg(9) + e.freg(10) +
                                                               e.freg(11));
    };
    auto [ideal_cycles, ideal_sum] = run_once(false);
    auto [banked_cycles, banked_sum] = run_once(true);
    CHECK(banked_cycles >= ideal_cycles);
    CHECK(ideal_sum == banked_sum);
}

// ==== pure stream semantics =================================================

TEST_CASE("affine address enumeration walks innermost first") {
    auto a = affine_addresses(100, {{8, 3}, {64, 2}});
    std::vector<uint64_t> want = {100, 108, 116, 164, 172, 180};
    CHECK(a == want);
    CHECK(affine_addresses(0, {{8, 0}, {64, 4}}).empty());
}

TEST_CASE("index serialization and coalescing are inverse maps") {
    Xoshiro256pp rng(99);
    for (IndexWidth w : {IndexWidth::W8, IndexWidth::W16, IndexWidth::W32, IndexWidth::W64}) {
        for (int trial = 0; trial < 50; ++trial) {
            uint64_t n = 1 + rng.next_below(40);
            std::vector<uint64_t> idx(n);
            for (auto& v : idx) v = rng.next() & (index_max(w));
            auto words = coalesce_indices(idx, w);
            auto back = serialize_indices(words, 0, n, w);
            CHECK(back == idx);
        }
    }
}

TEST_CASE("serialization honors a byte offset into the first word") {
    // words hold 16-bit indices {7, 9, 11, 13},{15, ...}; start 2 bytes in
    auto words = coalesce_indices({7, 9, 11, 13, 15, 17, 19, 21}, IndexWidth::W16);
    auto got = serialize_indices(words, 2, 4, IndexWidth::W16);
    CHECK(got == std::vector<uint64_t>{9, 11, 13, 15});
}

TEST_CASE("joint traversal agrees with a reference merge") {
    Xoshiro256pp rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        uint64_t space = 50;
        auto a = sample_sorted_subset(space, rng.next_below(20), rng);
        auto b = sample_sorted_subset(space, rng.next_below(20), rng);
        for (bool u : {false, true}) {
            auto ev = compare_streams(a, b, u);
            REQUIRE(!ev.empty());
            CHECK(ev.back().kind == JointKind::Done);
            std::vector<uint64_t> emitted, pairs;
            size_t left_seen = 0, right_seen = 0;
            for (size_t k = 0; k + 1 < ev.size(); ++k) {
                emitted.push_back(ev[k].index);
                switch (ev[k].kind) {
                case JointKind::Pair:
                    pairs.push_back(ev[k].index);
                    ++left_seen;
                    ++right_seen;
                    break;
                case JointKind::LeftOnly:
                    CHECK(u);
                    ++left_seen;
                    break;
                case JointKind::RightOnly:
                    CHECK(u);
                    ++right_seen;
                    break;
                default: FAIL("unexpected Done mid-stream");
                }
            }
            std::vector<uint64_t> want_pairs;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                  std::back_inserter(want_pairs));
            CHECK(pairs == want_pairs);
            if (u) {
                std::vector<uint64_t> want_union;
                std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                               std::back_inserter(want_union));
                CHECK(emitted == want_union);
                CHECK(left_seen == a.size());
                CHECK(right_seen == b.size());
            }
        }
    }
}

// ==== assembler =============================================================

TEST_CASE("the assembler and builder produce identical programs") {
    const char* text = R"(
        ; tiny reduction loop
        li x1, 64
        li x2, 4
        fmv.d f3, f31
    loop:
        fld f4, 0(x1)
        fadd.d f3, f3, f4
        addi x1, x1, 8
        addi x2, x2, -1
        bne x2, x0, loop
        fpu.fence
        halt
    )";
    Program pa = assemble(text);
    ProgramBuilder b;
    b.li(1, 64).li(2, 4).fmv(3, 31);
    b.label("loop").fld(4, 1, 0).fadd(3, 3, 4).addi(1, 1, 8).addi(2, 2, -1).bne(2, 0, "loop");
    b.fence().halt();
    Program pb = b.build();
    REQUIRE(pa.size() == pb.size());
    for (size_t k = 0; k < pa.size(); ++k) {
        CAPTURE(k);
        CHECK(pa[k].op == pb[k].op);
        CHECK(pa[k].rd == pb[k].rd);
        CHECK(pa[k].rs1 == pb[k].rs1);
        CHECK(pa[k].rs2 == pb[k].rs2);
        CHECK(pa[k].imm == pb[k].imm);
    }
    Memory m(4096);
    put_f64(m, 64, {1.0, 2.0, 3.0, 4.0});
    CoreEngine e(std::move(pa), m);
    e.run();
    CHECK(e.freg(3) == 10.0);
    CHECK(!disassemble(pb).empty());
}

TEST_CASE("the assembler rejects malformed input with line numbers") {
    CHECK_THROWS_AS(assemble("li x1"), SimFault);
    CHECK_THROWS_AS(assemble("bogus x1, x2"), SimFault);
    CHECK_THROWS_AS(assemble("j nowhere\nhalt"), SimFault);
}
