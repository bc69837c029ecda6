#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "ssrsim/formats.hpp"
#include "ssrsim/mtx.hpp"
#include "ssrsim/oracle.hpp"
#include "ssrsim/prng.hpp"

using namespace ssrsim;

// ============================================================================
// generators
// ============================================================================

TEST_CASE("prng streams are reproducible") {
    Xoshiro256pp a(42), b(42), c(43);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        uint64_t x = a.next(), y = b.next(), z = c.next();
        all_equal = all_equal && (x == y);
        any_diff = any_diff || (x != z);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("prng uniform doubles stay in [0,1)") {
    Xoshiro256pp rng(7);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("next_below is in range and hits every residue") {
    Xoshiro256pp rng(9);
    std::set<uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("sample_sorted_subset: sorted, unique, exact size, in range") {
    Xoshiro256pp rng(123);
    for (uint64_t n : {uint64_t(10), uint64_t(100), uint64_t(4096)}) {
        for (uint64_t k : {uint64_t(0), uint64_t(1), uint64_t(5), n / 2, n}) {
            auto s = sample_sorted_subset(n, k, rng);
            REQUIRE(s.size() == k);
            for (size_t i = 0; i < s.size(); ++i) {
                REQUIRE(s[i] < n);
                if (i) REQUIRE(s[i] > s[i - 1]);
            }
        }
    }
}

TEST_CASE("sample_sorted_subset covers the whole range over many draws") {
    // A sampler that never emits some positions would bias every benchmark.
    Xoshiro256pp rng(5);
    std::set<uint64_t> seen;
    for (int rep = 0; rep < 200; ++rep) {
        auto s = sample_sorted_subset(32, 8, rng);
        seen.insert(s.begin(), s.end());
    }
    CHECK(seen.size() == 32);
}

TEST_CASE("gen_sparse_vector honors nnz, sortedness and width") {
    auto f = gen_sparse_vector(4096, 512, IndexWidth::W16, 77);
    CHECK(f.nnz() == 512);
    CHECK(f.dense_len == 4096);
    f.validate();
    auto g = gen_sparse_vector(4096, 512, IndexWidth::W16, 77);
    CHECK(f.indices == g.indices);
    CHECK(f.values == g.values);
    auto h = gen_sparse_vector(4096, 512, IndexWidth::W16, 78);
    CHECK(f.indices != h.indices);
}

TEST_CASE("gen_sparse_vector rejects impossible requests") {
    CHECK_THROWS_AS(gen_sparse_vector(10, 11, IndexWidth::W32, 1), FormatError);
    // dense_len 4096 needs indices up to 4095: too wide for 8-bit storage.
    CHECK_THROWS_AS(gen_sparse_vector(4096, 300, IndexWidth::W8, 1), WidthOverflow);
}

TEST_CASE("gen_sparse_csr produces a valid matrix near the target density") {
    auto m = gen_sparse_csr(256, 2048, 40.0, IndexWidth::W16, 11);
    m.validate();
    CHECK(m.nrows == 256);
    CHECK(m.ncols == 2048);
    CHECK(m.avg_row_nnz() == doctest::Approx(40.0).epsilon(0.15));
    // spread_frac = 0.5 keeps each row within [20, 60]
    for (uint64_t r = 0; r < m.nrows; ++r) {
        uint32_t len = m.row_ptrs[r + 1] - m.row_ptrs[r];
        REQUIRE(len >= 20);
        REQUIRE(len <= 60);
    }
}

// ============================================================================
// validation rules
// ============================================================================

TEST_CASE("fiber validation rejects unsorted or out-of-range indices") {
    Fiber f;
    f.dense_len = 16;
    f.width = IndexWidth::W32;
    f.values = {1.0, 2.0};
    f.indices = {3, 3};
    CHECK_THROWS_AS(f.validate(), FormatError); // duplicate
    f.indices = {5, 2};
    CHECK_THROWS_AS(f.validate(), FormatError); // descending
    f.indices = {5, 16};
    CHECK_THROWS_AS(f.validate(), FormatError); // past dense_len
    f.indices = {5, 12};
    CHECK_NOTHROW(f.validate());
}

TEST_CASE("fiber validation enforces the declared index width") {
    Fiber f;
    f.dense_len = 1 << 20;
    f.width = IndexWidth::W8;
    f.values = {1.0};
    f.indices = {256};
    CHECK_THROWS_AS(f.validate(), WidthOverflow);
    f.indices = {255};
    CHECK_NOTHROW(f.validate());
}

TEST_CASE("dense vector stride must be a power of two") {
    DenseVector v;
    v.values = {1, 2, 3};
    v.stride = 3;
    CHECK_THROWS_AS(v.validate(), FormatError);
    v.stride = 4;
    CHECK_NOTHROW(v.validate());
}

// ============================================================================
// conversions
// ============================================================================

TEST_CASE("densify / fiber_from_dense round trip") {
    auto f = gen_sparse_vector(512, 64, IndexWidth::W16, 3);
    auto d = densify(f);
    REQUIRE(d.size() == 512);
    auto f2 = fiber_from_dense(d, IndexWidth::W16);
    CHECK(f2.indices == f.indices);
    CHECK(f2.values == f.values);
    CHECK(f2.dense_len == f.dense_len);
}

TEST_CASE("csr_to_csc agrees with the dense transpose") {
    auto a = gen_sparse_csr(48, 64, 6.0, IndexWidth::W16, 21);
    auto t = csr_to_csc(a);
    t.validate();
    REQUIRE(t.nrows == a.ncols);
    REQUIRE(t.ncols == a.nrows);
    REQUIRE(t.nnz() == a.nnz());

    // dense images must be transposes of each other
    std::vector<double> da(a.nrows * a.ncols, 0.0), dt(a.nrows * a.ncols, 0.0);
    for (uint64_t r = 0; r < a.nrows; ++r)
        for (uint32_t k = a.row_ptrs[r]; k < a.row_ptrs[r + 1]; ++k)
            da[r * a.ncols + a.col_idcs[k]] = a.vals[k];
    for (uint64_t c = 0; c < t.nrows; ++c)
        for (uint32_t k = t.row_ptrs[c]; k < t.row_ptrs[c + 1]; ++k)
            dt[t.col_idcs[k] * a.ncols + c] = t.vals[k];
    CHECK(da == dt);
}

// ============================================================================
// reference results (frozen oracle spot checks)
// ============================================================================

TEST_CASE("oracle dot products on tiny hand-built fibers") {
    Fiber a;
    a.dense_len = 8;
    a.indices = {1, 3, 6};
    a.values = {2.0, -1.0, 4.0};

    DenseVector x;
    x.values = {1, 10, 100, 1000, 1, 1, 0.5, 1};
    CHECK(oracle::dot_sd(a, x) == doctest::Approx(2.0 * 10 - 1.0 * 1000 + 4.0 * 0.5));

    Fiber b;
    b.dense_len = 8;
    b.indices = {0, 3, 6, 7};
    b.values = {5.0, 3.0, 2.0, 9.0};
    CHECK(oracle::dot_ss(a, b) == doctest::Approx(-3.0 + 8.0));
    CHECK(oracle::intersection_size(a, b) == 2);
    CHECK(oracle::union_size(a, b) == 5);
}

TEST_CASE("oracle sparse-sparse combine agrees with densified arithmetic") {
    auto a = gen_sparse_vector(256, 50, IndexWidth::W16, 100);
    auto b = gen_sparse_vector(256, 70, IndexWidth::W16, 101);
    auto sum = oracle::add_ss(a, b);
    sum.validate();
    auto prod = oracle::had_ss(a, b);
    prod.validate();
    auto da = densify(a), db = densify(b);
    auto dsum = densify(sum), dprod = densify(prod);
    for (size_t i = 0; i < 256; ++i) {
        CHECK(dsum[i] == doctest::Approx(da[i] + db[i]));
        CHECK(dprod[i] == doctest::Approx(da[i] * db[i]));
    }
    CHECK(sum.nnz() == oracle::union_size(a, b));
    CHECK(prod.nnz() == oracle::intersection_size(a, b));
}

TEST_CASE("oracle matrix products agree across formulations") {
    auto a = gen_sparse_csr(24, 32, 5.0, IndexWidth::W16, 200);
    auto v = gen_sparse_vector(32, 12, IndexWidth::W16, 201);
    DenseVector dv;
    dv.values = densify(v);

    auto via_dense = oracle::smxdv(a, dv);
    auto via_sparse = oracle::smxsv(a, v);
    REQUIRE(via_dense.size() == via_sparse.size());
    for (size_t i = 0; i < via_dense.size(); ++i)
        CHECK(via_dense[i] == doctest::Approx(via_sparse[i]));

    // inner-product matrix multiply vs column-at-a-time smxdv
    auto b = gen_sparse_csr(32, 16, 4.0, IndexWidth::W16, 202);
    auto b_csc = csr_to_csc(b);
    auto c = oracle::smxsm_inner(a, b_csc);
    REQUIRE(c.size() == a.nrows * b.ncols);
    std::vector<double> bx(b.nrows * b.ncols, 0.0); // column major
    for (uint64_t r = 0; r < b.nrows; ++r)
        for (uint32_t k = b.row_ptrs[r]; k < b.row_ptrs[r + 1]; ++k)
            bx[b.col_idcs[k] * b.nrows + r] = b.vals[k];
    auto c2 = oracle::smxdm(a, bx, b.ncols);
    REQUIRE(c2.size() == c.size());
    for (size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(c2[i]));
}

TEST_CASE("oracle scatter-add and gather-multiply keep dense semantics") {
    auto a = gen_sparse_vector(64, 20, IndexWidth::W8, 300);
    auto x = gen_dense_vector(64, 301);
    auto sum = oracle::add_sd(a, x);
    auto prod = oracle::had_sd(a, x);
    auto da = densify(a);
    for (size_t i = 0; i < 64; ++i) CHECK(sum[i] == doctest::Approx(da[i] + x.values[i]));
    REQUIRE(prod.nnz() == a.nnz());
    for (size_t k = 0; k < a.nnz(); ++k) {
        CHECK(prod.indices[k] == a.indices[k]);
        CHECK(prod.values[k] == doctest::Approx(a.values[k] * x.values[a.indices[k]]));
    }
}

// ============================================================================
// matrix market io
// ============================================================================

static std::string write_temp(const char* name, const char* text) {
    std::string path = std::string("./") + name;
    std::ofstream out(path);
    out << text;
    return path;
}

TEST_CASE("matrix market: general real file with duplicates summed") {
    auto path = write_temp("t_general.mtx",
                           "%%MatrixMarket matrix coordinate real general\n"
                           "% comment line\n"
                           "3 4 5\n"
                           "1 1 1.5\n"
                           "1 1 0.25\n"
                           "2 4 -2.0\n"
                           "3 2 3.0\n"
                           "3 1 1.0\n");
    auto m = load_matrix_market(path, IndexWidth::W16);
    m.validate();
    CHECK(m.nrows == 3);
    CHECK(m.ncols == 4);
    CHECK(m.nnz() == 4); // duplicate collapsed
    CHECK(m.row_ptrs == std::vector<uint32_t>{0, 1, 2, 4});
    CHECK(m.col_idcs == std::vector<uint64_t>{0, 3, 0, 1});
    CHECK(m.vals[0] == doctest::Approx(1.75));
    CHECK(m.vals[1] == doctest::Approx(-2.0));
    std::remove(path.c_str());
}

TEST_CASE("matrix market: symmetric pattern file mirrors off-diagonals") {
    auto path = write_temp("t_sym.mtx",
                           "%%MatrixMarket matrix coordinate pattern symmetric\n"
                           "3 3 3\n"
                           "2 1\n"
                           "3 3\n"
                           "3 2\n");
    auto m = load_matrix_market(path, IndexWidth::W32);
    m.validate();
    CHECK(m.nnz() == 5); // two mirrored, diagonal kept single
    CHECK(m.row_ptrs == std::vector<uint32_t>{0, 1, 3, 5});
    CHECK(m.col_idcs == std::vector<uint64_t>{1, 0, 2, 1, 2});
    for (double v : m.vals) CHECK(v == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("matrix market: malformed input raises ParseError") {
    auto p1 = write_temp("t_bad1.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    CHECK_THROWS_AS(load_matrix_market(p1, IndexWidth::W32), ParseError);
    std::remove(p1.c_str());
    auto p2 = write_temp("t_bad2.mtx",
                         "%%MatrixMarket matrix coordinate real general\n"
                         "2 2 1\n"
                         "3 1 1.0\n"); // row out of range
    CHECK_THROWS_AS(load_matrix_market(p2, IndexWidth::W32), ParseError);
    std::remove(p2.c_str());
    CHECK_THROWS_AS(load_matrix_market("./definitely_missing.mtx", IndexWidth::W32), ParseError);
}

TEST_CASE("csr cache round trips and rejects foreign files") {
    auto m = gen_sparse_csr(20, 30, 4.0, IndexWidth::W16, 400);
    save_csr_cache("./t_cache.bin", m);
    CsrMatrix r;
    REQUIRE(load_csr_cache("./t_cache.bin", r));
    CHECK(r.nrows == m.nrows);
    CHECK(r.ncols == m.ncols);
    CHECK(r.row_ptrs == m.row_ptrs);
    CHECK(r.col_idcs == m.col_idcs);
    CHECK(r.vals == m.vals);
    CHECK(r.width == m.width);

    CsrMatrix z;
    CHECK_FALSE(load_csr_cache("./no_such_cache.bin", z));
    auto junk = write_temp("t_junk.bin", "not a cache");
    CHECK_FALSE(load_csr_cache(junk, z));
    std::remove(junk.c_str());
    std::remove("./t_cache.bin");
}
