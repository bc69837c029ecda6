#pragma once

#include <vector>

#include "ssrsim/formats.hpp"

namespace ssrsim {
// Dense brute-force reference results. Everything here densifies its operands
// and loops in plain index order; none of it touches the stream or timing
// machinery, so kernel outputs can be checked against an independent path.
namespace oracle {

double dot_sd(const Fiber& a, const DenseVector& b);
double dot_ss(const Fiber& a, const Fiber& b);

// c = A * x, dense result of length nrows.
std::vector<double> smxdv(const CsrMatrix& a, const DenseVector& x);

// C = A * X for a dense column-major X (ncols_x columns), dense row-major C.
std::vector<double> smxdm(const CsrMatrix& a, const std::vector<double>& x, uint64_t ncols_x);

// b'[i] += a_j at the sparse positions; returns the updated dense vector.
std::vector<double> add_sd(const Fiber& a, const DenseVector& b);

// Hadamard against a dense vector: same sparsity as a.
Fiber had_sd(const Fiber& a, const DenseVector& b);

Fiber add_ss(const Fiber& a, const Fiber& b);
Fiber had_ss(const Fiber& a, const Fiber& b);

// c = A * v for sparse v, dense result of length nrows.
std::vector<double> smxsv(const CsrMatrix& a, const Fiber& v);

// C = A * B via row-by-column inner products; b_csc is B in CSC form.
// Dense row-major result, nrows(A) x ncols(B).
std::vector<double> smxsm_inner(const CsrMatrix& a, const CsrMatrix& b_csc);

// Cardinalities used for utilization metrics.
uint64_t intersection_size(const Fiber& a, const Fiber& b);
uint64_t union_size(const Fiber& a, const Fiber& b);

} // namespace oracle
} // namespace ssrsim
