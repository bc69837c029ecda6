#include "ssrsim/oracle.hpp"

namespace ssrsim {
namespace oracle {

double dot_sd(const Fiber& a, const DenseVector& b) {
    double acc = 0.0;
    for (uint64_t k = 0; k < a.nnz(); ++k)
        acc += a.values[k] * b.values[a.indices[k] * b.stride];
    return acc;
}

double dot_ss(const Fiber& a, const Fiber& b) {
    const auto da = densify(a);
    const auto db = densify(b);
    double acc = 0.0;
    const uint64_t n = std::min<uint64_t>(da.size(), db.size());
    for (uint64_t i = 0; i < n; ++i) acc += da[i] * db[i];
    return acc;
}

std::vector<double> smxdv(const CsrMatrix& a, const DenseVector& x) {
    std::vector<double> c(a.nrows, 0.0);
    for (uint64_t r = 0; r < a.nrows; ++r)
        for (uint32_t k = a.row_ptrs[r]; k < a.row_ptrs[r + 1]; ++k)
            c[r] += a.vals[k] * x.values[a.col_idcs[k] * x.stride];
    return c;
}

std::vector<double> smxdm(const CsrMatrix& a, const std::vector<double>& x, uint64_t ncols_x) {
    std::vector<double> c(a.nrows * ncols_x, 0.0);
    for (uint64_t j = 0; j < ncols_x; ++j) {
        const double* col = x.data() + j * a.ncols;
        for (uint64_t r = 0; r < a.nrows; ++r)
            for (uint32_t k = a.row_ptrs[r]; k < a.row_ptrs[r + 1]; ++k)
                c[r * ncols_x + j] += a.vals[k] * col[a.col_idcs[k]];
    }
    return c;
}

std::vector<double> add_sd(const Fiber& a, const DenseVector& b) {
    std::vector<double> out;
    out.reserve(b.values.size());
    for (double v : b.values) out.push_back(v);
    for (uint64_t k = 0; k < a.nnz(); ++k)
        out[a.indices[k] * b.stride] = out[a.indices[k] * b.stride] + a.values[k];
    return out;
}

Fiber had_sd(const Fiber& a, const DenseVector& b) {
    Fiber c = a;
    for (uint64_t k = 0; k < a.nnz(); ++k)
        c.values[k] = a.values[k] * b.values[a.indices[k] * b.stride];
    return c;
}

Fiber add_ss(const Fiber& a, const Fiber& b) {
    Fiber c;
    c.dense_len = std::max(a.dense_len, b.dense_len);
    c.width = a.width;
    uint64_t i = 0, j = 0;
    while (i < a.nnz() || j < b.nnz()) {
        if (j >= b.nnz() || (i < a.nnz() && a.indices[i] < b.indices[j])) {
            c.indices.push_back(a.indices[i]);
            c.values.push_back(a.values[i] + 0.0);
            ++i;
        } else if (i >= a.nnz() || b.indices[j] < a.indices[i]) {
            c.indices.push_back(b.indices[j]);
            c.values.push_back(0.0 + b.values[j]);
            ++j;
        } else {
            c.indices.push_back(a.indices[i]);
            c.values.push_back(a.values[i] + b.values[j]);
            ++i;
            ++j;
        }
    }
    return c;
}

Fiber had_ss(const Fiber& a, const Fiber& b) {
    Fiber c;
    c.dense_len = std::max(a.dense_len, b.dense_len);
    c.width = a.width;
    uint64_t i = 0, j = 0;
    while (i < a.nnz() && j < b.nnz()) {
        if (a.indices[i] < b.indices[j]) {
            ++i;
        } else if (b.indices[j] < a.indices[i]) {
            ++j;
        } else {
            c.indices.push_back(a.indices[i]);
            c.values.push_back(a.values[i] * b.values[j]);
            ++i;
            ++j;
        }
    }
    return c;
}

std::vector<double> smxsv(const CsrMatrix& a, const Fiber& v) {
    const auto dv = densify(v);
    std::vector<double> c(a.nrows, 0.0);
    for (uint64_t r = 0; r < a.nrows; ++r)
        for (uint32_t k = a.row_ptrs[r]; k < a.row_ptrs[r + 1]; ++k) {
            const uint64_t col = a.col_idcs[k];
            if (col < dv.size()) c[r] += a.vals[k] * dv[col];
        }
    return c;
}

std::vector<double> smxsm_inner(const CsrMatrix& a, const CsrMatrix& b_csc) {
    std::vector<double> c(a.nrows * b_csc.nrows, 0.0);
    for (uint64_t j = 0; j < b_csc.nrows; ++j) {
        Fiber col;
        col.dense_len = b_csc.ncols;
        col.width = b_csc.width;
        for (uint32_t k = b_csc.row_ptrs[j]; k < b_csc.row_ptrs[j + 1]; ++k) {
            col.indices.push_back(b_csc.col_idcs[k]);
            col.values.push_back(b_csc.vals[k]);
        }
        const auto cj = smxsv(a, col);
        for (uint64_t r = 0; r < a.nrows; ++r) c[r * b_csc.nrows + j] = cj[r];
    }
    return c;
}

uint64_t intersection_size(const Fiber& a, const Fiber& b) {
    uint64_t n = 0, i = 0, j = 0;
    while (i < a.nnz() && j < b.nnz()) {
        if (a.indices[i] < b.indices[j]) ++i;
        else if (b.indices[j] < a.indices[i]) ++j;
        else { ++n; ++i; ++j; }
    }
    return n;
}

uint64_t union_size(const Fiber& a, const Fiber& b) {
    return a.nnz() + b.nnz() - intersection_size(a, b);
}

} // namespace oracle
} // namespace ssrsim
