#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ssrsim/cluster.hpp"
#include "ssrsim/kernels.hpp"

using namespace ssrsim;

namespace {

KernelOptions opts(KernelVariant v, bool banked = false) {
    KernelOptions o;
    o.variant = v;
    o.banked = banked;
    return o;
}

uint64_t total_rows(const ClusterReport& r) {
    uint64_t n = 0;
    for (const auto& c : r.cores) n += c.rows;
    return n;
}

CsrMatrix uniform_csr(uint64_t nrows, uint64_t ncols, uint64_t row_nnz, IndexWidth w) {
    CsrMatrix m;
    m.nrows = nrows;
    m.ncols = ncols;
    m.width = w;
    m.row_ptrs.push_back(0);
    for (uint64_t r = 0; r < nrows; ++r) {
        for (uint64_t k = 0; k < row_nnz; ++k) {
            m.col_idcs.push_back(k * (ncols / row_nnz));
            m.vals.push_back(double((r * row_nnz + k) % 13) + 0.5);
        }
        m.row_ptrs.push_back(uint32_t(m.col_idcs.size()));
    }
    return m;
}

} // namespace

TEST_CASE("transfer duration follows the port width") {
    CHECK(dma_cycles(4096, 512) == 64);
    CHECK(dma_cycles(0, 512) == 0);
    CHECK(dma_cycles(1, 512) == 1);
    CHECK(dma_cycles(64, 512) == 1);
    CHECK(dma_cycles(65, 512) == 2);
    CHECK(dma_cycles(4096, 64) == 512);
}

TEST_CASE("cluster matrix x dense vector matches the single core bit for bit") {
    for (auto w : {IndexWidth::W16, IndexWidth::W32}) {
        CsrMatrix m = gen_sparse_csr(97, 120, 9.0, w, 301 + unsigned(w));
        DenseVector x = gen_dense_vector(120, 302);
        for (auto v : {KernelVariant::Base, KernelVariant::Ssr, KernelVariant::Sssr}) {
            KernelResult single = run_sm_dv(m, x, opts(v));
            ClusterResult cl = run_cluster_sm_dv(m, x, opts(v));
            REQUIRE(cl.y.size() == single.dense.size());
            for (size_t i = 0; i < cl.y.size(); ++i) CHECK(cl.y[i] == single.dense[i]);
            CHECK(total_rows(cl.rpt) == m.nrows);
        }
    }
}

TEST_CASE("cluster matrix x sparse vector matches the single core bit for bit") {
    CsrMatrix m = gen_sparse_csr(80, 300, 14.0, IndexWidth::W32, 303);
    Fiber v = gen_sparse_vector(300, 60, IndexWidth::W32, 304);
    for (auto var : {KernelVariant::Base, KernelVariant::Sssr}) {
        KernelResult single = run_sm_sv(m, v, opts(var));
        ClusterResult cl = run_cluster_sm_sv(m, v, opts(var));
        REQUIRE(cl.y.size() == single.dense.size());
        for (size_t i = 0; i < cl.y.size(); ++i) CHECK(cl.y[i] == single.dense[i]);
        CHECK(total_rows(cl.rpt) == m.nrows);
    }
}

TEST_CASE("single core cluster tracks the plain run plus transfer time") {
    CsrMatrix m = gen_sparse_csr(256, 256, 40.0, IndexWidth::W32, 305);
    DenseVector x = gen_dense_vector(256, 306);
    KernelResult single = run_sm_dv(m, x, opts(KernelVariant::Base, true));
    ClusterConfig cc;
    cc.cores = 1;
    ClusterResult cl = run_cluster_sm_dv(m, x, opts(KernelVariant::Base), cc);
    double ref = double(single.report.total_cycles + cl.rpt.prologue_cycles +
                        cl.rpt.writeback_cycles);
    double got = double(cl.rpt.total_cycles);
    CHECK(got > ref * 0.95);
    CHECK(got < ref * 1.05);
}

TEST_CASE("speedup on equal rows never exceeds the core count") {
    CsrMatrix m = uniform_csr(128, 256, 32, IndexWidth::W32);
    DenseVector x = gen_dense_vector(256, 307);
    ClusterConfig one;
    one.cores = 1;
    ClusterConfig eight;
    eight.cores = 8;
    for (auto v : {KernelVariant::Base, KernelVariant::Sssr}) {
        uint64_t c1 = run_cluster_sm_dv(m, x, opts(v), one).rpt.total_cycles;
        uint64_t c8 = run_cluster_sm_dv(m, x, opts(v), eight).rpt.total_cycles;
        double speedup = double(c1) / double(c8);
        CHECK(speedup > 1.0);
        CHECK(speedup <= 8.0);
    }
}

TEST_CASE("cluster runs are deterministic") {
    CsrMatrix m = gen_sparse_csr(200, 400, 25.0, IndexWidth::W16, 308);
    DenseVector x = gen_dense_vector(400, 309);
    ClusterResult a = run_cluster_sm_dv(m, x, opts(KernelVariant::Sssr));
    ClusterResult b = run_cluster_sm_dv(m, x, opts(KernelVariant::Sssr));
    CHECK(a.rpt.total_cycles == b.rpt.total_cycles);
    CHECK(a.rpt.prologue_cycles == b.rpt.prologue_cycles);
    CHECK(a.rpt.dma_busy == b.rpt.dma_busy);
    REQUIRE(a.rpt.cores.size() == b.rpt.cores.size());
    for (size_t i = 0; i < a.rpt.cores.size(); ++i) {
        CHECK(a.rpt.cores[i].busy_cycles == b.rpt.cores[i].busy_cycles);
        CHECK(a.rpt.cores[i].claims == b.rpt.cores[i].claims);
        CHECK(a.rpt.cores[i].rows == b.rpt.cores[i].rows);
    }
    for (size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
}

TEST_CASE("matrix slices stream through both segment buffers") {
    // force tiny segments so the run exercises the double buffer rotation
    CsrMatrix m = gen_sparse_csr(160, 64, 12.0, IndexWidth::W32, 310);
    DenseVector x = gen_dense_vector(64, 311);
    ClusterConfig cc;
    cc.tcdm_kib = 8;
    ClusterResult cl = run_cluster_sm_dv(m, x, opts(KernelVariant::Sssr), cc);
    CHECK(cl.rpt.segments >= 4);
    KernelResult single = run_sm_dv(m, x, opts(KernelVariant::Sssr));
    for (size_t i = 0; i < cl.y.size(); ++i) CHECK(cl.y[i] == single.dense[i]);
}

TEST_CASE("oversize rows and oversize residents raise configuration faults") {
    CsrMatrix m;
    m.nrows = 2;
    m.ncols = 128;
    m.width = IndexWidth::W32;
    m.row_ptrs = {0, 40, 41};
    for (uint64_t k = 0; k < 40; ++k) {
        m.col_idcs.push_back(k);
        m.vals.push_back(1.0);
    }
    m.col_idcs.push_back(5);
    m.vals.push_back(2.0);
    DenseVector x = gen_dense_vector(128, 312);

    ClusterConfig tiny;
    tiny.tcdm_kib = 2;
    CHECK_THROWS_AS(run_cluster_sm_dv(m, x, opts(KernelVariant::Base), tiny), ConfigFault);

    ClusterConfig none;
    none.tcdm_kib = 1;
    CHECK_THROWS_AS(run_cluster_sm_dv(m, x, opts(KernelVariant::Base), none), ConfigFault);
}

TEST_CASE("banked cluster utilization stays below the ideal single core") {
    CsrMatrix m = gen_sparse_csr(256, 512, 50.0, IndexWidth::W16, 313);
    DenseVector x = gen_dense_vector(512, 314);
    KernelResult single = run_sm_dv(m, x, opts(KernelVariant::Sssr));
    double ideal = double(single.report.fpu_busy) / double(single.report.total_cycles);
    ClusterResult cl = run_cluster_sm_dv(m, x, opts(KernelVariant::Sssr));
    CHECK(cl.rpt.utilization() <= ideal);
    CHECK(cl.rpt.utilization() > 0.0);
    CHECK(cl.rpt.busiest() >= cl.rpt.idlest());
}

TEST_CASE("prologue and writeback account the issue cost and the payload") {
    // small enough to fit one segment: transfers are exactly predictable
    CsrMatrix m = gen_sparse_csr(32, 64, 6.0, IndexWidth::W32, 315);
    DenseVector x = gen_dense_vector(64, 316);
    ClusterResult cl = run_cluster_sm_dv(m, x, opts(KernelVariant::Base));
    REQUIRE(cl.rpt.segments == 1);
    uint64_t seg_bytes = (m.nrows + 1) * 4 + m.nnz() * (4 + 8);
    uint64_t want = 10 + dma_cycles(64 * 8, 512) + 10 + dma_cycles(seg_bytes, 512);
    CHECK(cl.rpt.prologue_cycles == want);
    CHECK(cl.rpt.writeback_cycles == 10 + dma_cycles(m.nrows * 8, 512));
    CHECK(cl.rpt.total_cycles > cl.rpt.prologue_cycles);
}

TEST_CASE("code refill penalty lengthens the run without changing results") {
    CsrMatrix m = gen_sparse_csr(96, 128, 10.0, IndexWidth::W32, 317);
    DenseVector x = gen_dense_vector(128, 318);
    ClusterConfig plain;
    ClusterConfig cold;
    cold.icache_penalty = 100;
    ClusterResult a = run_cluster_sm_dv(m, x, opts(KernelVariant::Base), plain);
    ClusterResult b = run_cluster_sm_dv(m, x, opts(KernelVariant::Base), cold);
    CHECK(b.rpt.total_cycles > a.rpt.total_cycles);
    for (size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
}

TEST_CASE("empty inputs settle immediately") {
    CsrMatrix m;
    m.nrows = 0;
    m.ncols = 8;
    m.width = IndexWidth::W32;
    m.row_ptrs = {0};
    DenseVector x = gen_dense_vector(8, 319);
    ClusterResult cl = run_cluster_sm_dv(m, x, opts(KernelVariant::Base));
    CHECK(cl.y.empty());
    CHECK(cl.rpt.total_cycles == cl.rpt.prologue_cycles);
    CHECK(cl.rpt.writeback_cycles == 0);

    CsrMatrix z;
    z.nrows = 5;
    z.ncols = 8;
    z.width = IndexWidth::W32;
    z.row_ptrs = {0, 0, 0, 0, 0, 0};
    ClusterResult zr = run_cluster_sm_dv(z, x, opts(KernelVariant::Sssr));
    REQUIRE(zr.y.size() == 5);
    for (double d : zr.y) CHECK(d == 0.0);
}

TEST_CASE("joint streams beat the scalar cluster on matrix x dense vector") {
    CsrMatrix m = gen_sparse_csr(512, 2048, 60.0, IndexWidth::W16, 320);
    DenseVector x = gen_dense_vector(2048, 321);
    uint64_t base = run_cluster_sm_dv(m, x, opts(KernelVariant::Base)).rpt.total_cycles;
    uint64_t sssr = run_cluster_sm_dv(m, x, opts(KernelVariant::Sssr)).rpt.total_cycles;
    double speedup = double(base) / double(sssr);
    CHECK(speedup > 3.5);
    CHECK(speedup < 8.0);
}

TEST_CASE("cluster rejects layouts it cannot honor") {
    CsrMatrix m = gen_sparse_csr(16, 32, 4.0, IndexWidth::W32, 322);
    DenseVector x = gen_dense_vector(32, 323);
    KernelOptions strided = opts(KernelVariant::Base);
    strided.result_stride = 3;
    CHECK_THROWS_AS(run_cluster_sm_dv(m, x, strided), ConfigFault);

    Fiber v = gen_sparse_vector(32, 8, IndexWidth::W32, 324);
    CHECK_THROWS_AS(run_cluster_sm_sv(m, v, opts(KernelVariant::Ssr)), ConfigFault);

    Fiber wrong = gen_sparse_vector(33, 8, IndexWidth::W32, 325);
    CHECK_THROWS_AS(run_cluster_sm_sv(m, wrong, opts(KernelVariant::Base)), ConfigFault);
}
