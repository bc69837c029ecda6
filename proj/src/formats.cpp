#include "ssrsim/formats.hpp"

#include <algorithm>
#include <cmath>

#include "ssrsim/prng.hpp"

namespace ssrsim {

IndexWidth index_width_from_bits(unsigned bits) {
    switch (bits) {
        case 8: return IndexWidth::W8;
        case 16: return IndexWidth::W16;
        case 32: return IndexWidth::W32;
        case 64: return IndexWidth::W64;
    }
    throw FormatError("unsupported index width: " + std::to_string(bits));
}

void Fiber::validate() const {
    if (values.size() != indices.size())
        throw FormatError("fiber: value/index count mismatch");
    const uint64_t wmax = index_max(width);
    uint64_t prev = 0;
    bool first = true;
    for (uint64_t idx : indices) {
        if (!first && idx <= prev)
            throw FormatError("fiber: indices not strictly increasing");
        if (idx >= dense_len)
            throw FormatError("fiber: index " + std::to_string(idx) + " >= dense_len " +
                              std::to_string(dense_len));
        if (idx > wmax)
            throw WidthOverflow("fiber: index " + std::to_string(idx) + " overflows " +
                                std::to_string(index_bits(width)) + "-bit storage");
        prev = idx;
        first = false;
    }
}

void CsrMatrix::validate() const {
    if (row_ptrs.size() != nrows + 1)
        throw FormatError("csr: row_ptrs size mismatch");
    if (col_idcs.size() != vals.size())
        throw FormatError("csr: col/val count mismatch");
    if (row_ptrs.front() != 0 || row_ptrs.back() != vals.size())
        throw FormatError("csr: row_ptrs endpoints invalid");
    const uint64_t wmax = index_max(width);
    for (uint64_t r = 0; r < nrows; ++r) {
        if (row_ptrs[r] > row_ptrs[r + 1])
            throw FormatError("csr: row_ptrs not monotone at row " + std::to_string(r));
        for (uint32_t k = row_ptrs[r]; k < row_ptrs[r + 1]; ++k) {
            if (k > row_ptrs[r] && col_idcs[k] <= col_idcs[k - 1])
                throw FormatError("csr: columns not strictly increasing in row " +
                                  std::to_string(r));
            if (col_idcs[k] >= ncols)
                throw FormatError("csr: column out of range in row " + std::to_string(r));
            if (col_idcs[k] > wmax)
                throw WidthOverflow("csr: column overflows index width in row " +
                                    std::to_string(r));
        }
    }
}

void DenseVector::validate() const {
    if (stride == 0 || (stride & (stride - 1)) != 0)
        throw FormatError("dense vector: stride must be a power of two");
}

std::vector<uint64_t> sample_sorted_subset(uint64_t n, uint64_t k, Xoshiro256pp& rng) {
    if (k > n) throw FormatError("subset: k > n");
    // Floyd's algorithm; membership kept in a sorted vector since k is small
    // at desk scale.
    std::vector<uint64_t> out;
    out.reserve(k);
    for (uint64_t j = n - k; j < n; ++j) {
        uint64_t t = rng.next_below(j + 1);
        auto it = std::lower_bound(out.begin(), out.end(), t);
        if (it != out.end() && *it == t) {
            it = std::lower_bound(out.begin(), out.end(), j);
            out.insert(it, j);
        } else {
            out.insert(it, t);
        }
    }
    return out;
}

Fiber gen_sparse_vector(uint64_t dense_len, uint64_t nnz, IndexWidth width, uint64_t seed) {
    if (dense_len != 0 && dense_len - 1 > index_max(width))
        throw WidthOverflow("gen_sparse_vector: dense_len exceeds index width");
    if (nnz > dense_len)
        throw FormatError("gen_sparse_vector: nnz > dense_len");
    Xoshiro256pp rng(seed);
    Fiber f;
    f.dense_len = dense_len;
    f.width = width;
    f.indices = sample_sorted_subset(dense_len, nnz, rng);
    f.values.resize(nnz);
    for (auto& v : f.values) v = rng.next_normal();
    f.validate();
    return f;
}

DenseVector gen_dense_vector(uint64_t len, uint64_t seed, uint64_t stride) {
    Xoshiro256pp rng(seed);
    DenseVector d;
    d.stride = stride;
    d.values.resize(len);
    for (auto& v : d.values) v = rng.next_normal();
    d.validate();
    return d;
}

CsrMatrix gen_sparse_csr(uint64_t nrows, uint64_t ncols, double avg_nnz, IndexWidth width,
                         uint64_t seed, double spread_frac) {
    if (ncols != 0 && ncols - 1 > index_max(width))
        throw WidthOverflow("gen_sparse_csr: ncols exceeds index width");
    Xoshiro256pp rng(seed);
    CsrMatrix m;
    m.nrows = nrows;
    m.ncols = ncols;
    m.width = width;
    m.row_ptrs.resize(nrows + 1, 0);

    const int64_t base = static_cast<int64_t>(std::llround(avg_nnz));
    const int64_t spread = static_cast<int64_t>(std::llround(avg_nnz * spread_frac));
    for (uint64_t r = 0; r < nrows; ++r) {
        int64_t lo = std::max<int64_t>(0, base - spread);
        int64_t hi = std::min<int64_t>(static_cast<int64_t>(ncols), base + spread);
        uint64_t len = static_cast<uint64_t>(lo + int64_t(rng.next_below(uint64_t(hi - lo + 1))));
        auto cols = sample_sorted_subset(ncols, len, rng);
        for (uint64_t c : cols) {
            m.col_idcs.push_back(c);
            m.vals.push_back(rng.next_normal());
        }
        if (m.vals.size() > 0xffffffffull)
            throw WidthOverflow("gen_sparse_csr: nnz overflows 32-bit row pointers");
        m.row_ptrs[r + 1] = static_cast<uint32_t>(m.vals.size());
    }
    m.validate();
    return m;
}

CsrMatrix csr_to_csc(const CsrMatrix& a) {
    a.validate();
    CsrMatrix b;
    b.nrows = a.ncols; // b is indexed by columns of a
    b.ncols = a.nrows;
    b.width = a.width;
    if (a.nrows != 0 && a.nrows - 1 > index_max(a.width))
        throw WidthOverflow("csr_to_csc: nrows exceeds index width of transpose");
    b.row_ptrs.assign(a.ncols + 1, 0);
    for (uint64_t c : a.col_idcs) b.row_ptrs[c + 1]++;
    for (uint64_t c = 0; c < a.ncols; ++c) b.row_ptrs[c + 1] += b.row_ptrs[c];
    b.col_idcs.resize(a.nnz());
    b.vals.resize(a.nnz());
    std::vector<uint32_t> cursor(b.row_ptrs.begin(), b.row_ptrs.end() - 1);
    for (uint64_t r = 0; r < a.nrows; ++r) {
        for (uint32_t k = a.row_ptrs[r]; k < a.row_ptrs[r + 1]; ++k) {
            uint32_t dst = cursor[a.col_idcs[k]]++;
            b.col_idcs[dst] = r; // rows come out sorted: r sweeps upward
            b.vals[dst] = a.vals[k];
        }
    }
    b.validate();
    return b;
}

std::vector<double> densify(const Fiber& f) {
    std::vector<double> out(f.dense_len, 0.0);
    for (uint64_t k = 0; k < f.nnz(); ++k) out[f.indices[k]] = f.values[k];
    return out;
}

Fiber fiber_from_dense(const std::vector<double>& dense, IndexWidth width) {
    Fiber f;
    f.dense_len = dense.size();
    f.width = width;
    for (uint64_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) {
            f.indices.push_back(i);
            f.values.push_back(dense[i]);
        }
    }
    f.validate();
    return f;
}

} // namespace ssrsim
