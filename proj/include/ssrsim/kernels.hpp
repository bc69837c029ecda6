#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ssrsim/core.hpp"
#include "ssrsim/formats.hpp"

namespace ssrsim {

// The kernel library: ten sparse linear-algebra kernels expressed as programs
// for the simulated core, each in up to three variants.
//   BASE  plain scalar loops, all address work on the integer core
//   SSR   affine value streams, index handling still on the core
//   SSSR  indirection / joint-traversal streams plus hardware loops
// Kernels built on index intersection or union have no SSR variant; affine
// streams alone cannot help them.
enum class KernelId {
    SvXdV, // sparse . dense dot product
    SmXdV, // CSR matrix x dense vector
    SmXdM, // CSR matrix x dense matrix (column-major dense operand)
    SvPdV, // dense += sparse, accumulated in place
    SvHdV, // sparse (.) dense elementwise, sparse result
    SvXsV, // sparse . sparse dot product (intersection)
    SmXsV, // CSR matrix x sparse vector (intersection per row)
    SmXsM_inner, // CSR x CSC inner-product matrix multiply
    SvPsV, // sparse + sparse (union, egress result)
    SvHsV, // sparse (.) sparse elementwise (intersection, egress result)
};

enum class KernelVariant { Base, Ssr, Sssr };

const char* kernel_name(KernelId id);
const char* variant_name(KernelVariant v);
std::optional<KernelId> kernel_from_name(std::string_view s);
std::optional<KernelVariant> variant_from_name(std::string_view s);

// Intersection/union kernels cannot be expressed with affine streams only.
bool kernel_has_ssr_variant(KernelId id);

// Accumulator block width for staggered reductions. Wider indices lower the
// stream rate, so fewer in-flight accumulators cover the FPU latency.
unsigned default_accumulators(IndexWidth w);

struct KernelOptions {
    KernelVariant variant = KernelVariant::Sssr;
    unsigned accumulators = 0;     // 0 = default_accumulators(width)
    unsigned unroll_threshold = 4; // rows shorter than this skip the hardware loop
    uint64_t result_stride = 1;    // elements between dense result slots
    bool banked = false;           // bank-conflict timing instead of ideal ports
    unsigned banks = 32;
    MachineConfig machine;
};

struct KernelResult {
    double scalar = 0.0;       // dot kernels
    std::vector<double> dense; // dense vector/matrix results (packed)
    Fiber fiber;               // sparse results
    SimReport report;
};

// Sparse-dense vector kernels: SvXdV, SvPdV, SvHdV.
KernelResult run_sv_dv(KernelId id, const Fiber& a, const DenseVector& b,
                       const KernelOptions& opt = {});
// Sparse-sparse vector kernels: SvXsV, SvPsV, SvHsV.
KernelResult run_sv_sv(KernelId id, const Fiber& a, const Fiber& b,
                       const KernelOptions& opt = {});
KernelResult run_sm_dv(const CsrMatrix& m, const DenseVector& x, const KernelOptions& opt = {});
// Dense operand is column-major len x ncols; result is row-major nrows x ncols.
KernelResult run_sm_dm(const CsrMatrix& m, const std::vector<double>& x, uint64_t ncols,
                       const KernelOptions& opt = {});
KernelResult run_sm_sv(const CsrMatrix& m, const Fiber& v, const KernelOptions& opt = {});
// b must already be in CSC form (see csr_to_csc); result row-major.
KernelResult run_sm_sm(const CsrMatrix& a, const CsrMatrix& b_csc,
                       const KernelOptions& opt = {});

// Program-only builders for structural inspection (same programs run_* executes).
Program build_sv_dv_program(KernelId id, const Fiber& a, const DenseVector& b,
                            const KernelOptions& opt = {});
Program build_sv_sv_program(KernelId id, const Fiber& a, const Fiber& b,
                            const KernelOptions& opt = {});

} // namespace ssrsim
