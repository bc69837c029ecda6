#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssrsim {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Overflow of a compressed index (or row pointer) field.
struct WidthOverflow : FormatError {
    using FormatError::FormatError;
};

// Storage width of one compressed index, in bytes.
enum class IndexWidth : uint8_t { W8 = 1, W16 = 2, W32 = 4, W64 = 8 };

inline unsigned index_bytes(IndexWidth w) { return static_cast<unsigned>(w); }
inline unsigned index_bits(IndexWidth w) { return index_bytes(w) * 8u; }

inline unsigned index_log2_bytes(IndexWidth w) {
    switch (w) {
        case IndexWidth::W8: return 0;
        case IndexWidth::W16: return 1;
        case IndexWidth::W32: return 2;
        case IndexWidth::W64: return 3;
    }
    throw FormatError("bad index width");
}

inline uint64_t index_max(IndexWidth w) {
    return index_bits(w) >= 64 ? ~0ull : ((1ull << index_bits(w)) - 1);
}

inline const char* index_width_name(IndexWidth w) {
    switch (w) {
        case IndexWidth::W8: return "8";
        case IndexWidth::W16: return "16";
        case IndexWidth::W32: return "32";
        case IndexWidth::W64: return "64";
    }
    return "?";
}

IndexWidth index_width_from_bits(unsigned bits);

// Sparse vector: f64 values plus strictly increasing indices below dense_len.
// Indices are held widest here; the declared width constrains them and decides
// the packed layout once the fiber is placed in simulated memory.
struct Fiber {
    std::vector<double> values;
    std::vector<uint64_t> indices;
    uint64_t dense_len = 0;
    IndexWidth width = IndexWidth::W32;

    uint64_t nnz() const { return values.size(); }
    void validate() const;
};

// CSR (or, reinterpreted, CSC) matrix. Row pointers are always 32-bit;
// column indices obey the declared width.
struct CsrMatrix {
    uint64_t nrows = 0;
    uint64_t ncols = 0;
    std::vector<uint32_t> row_ptrs; // nrows + 1 entries
    std::vector<uint64_t> col_idcs;
    std::vector<double> vals;
    IndexWidth width = IndexWidth::W32;

    uint64_t nnz() const { return vals.size(); }
    double avg_row_nnz() const { return nrows ? double(nnz()) / double(nrows) : 0.0; }
    void validate() const;
};

// Dense vector with a power-of-two element stride (in elements, 1 = packed).
struct DenseVector {
    std::vector<double> values;
    uint64_t stride = 1;

    uint64_t len() const { return values.size(); }
    void validate() const;
};

// --- generators (deterministic in the seed) ------------------------------

Fiber gen_sparse_vector(uint64_t dense_len, uint64_t nnz, IndexWidth width, uint64_t seed);
DenseVector gen_dense_vector(uint64_t len, uint64_t seed, uint64_t stride = 1);

// Synthetic CSR with row lengths drawn uniformly from
// [avg_nnz - spread, avg_nnz + spread], column subsets uniform per row.
CsrMatrix gen_sparse_csr(uint64_t nrows, uint64_t ncols, double avg_nnz, IndexWidth width,
                         uint64_t seed, double spread_frac = 0.5);

// --- conversions ----------------------------------------------------------

// Compressed transpose: returns B with B.row_ptrs indexing columns of A, so
// the result is A in CSC form (column fibers with sorted row indices).
CsrMatrix csr_to_csc(const CsrMatrix& a);

std::vector<double> densify(const Fiber& f);
Fiber fiber_from_dense(const std::vector<double>& dense, IndexWidth width);

} // namespace ssrsim
