#pragma once

// Shared program emitters for the CSR matrix kernels. The single-core entry
// points and the cluster build the same instruction sequences from different
// memory layouts, so the loop bodies live here and take plain addresses.

#include "ssrsim/isa.hpp"
#include "ssrsim/kernels.hpp"

namespace ssrsim::progs {

// matrix (x) dense vector over one row range
struct SmDvProg {
    uint64_t rp = 0, rp_end = 0; // row-pointer window, 4-byte entries
    uint64_t ci = 0, mv = 0;     // arrays the row-pointer values index into
    // stream gather job covering exactly this row range
    uint64_t gather_idx = 0, gather_val = 0, gather_count = 0;
    uint64_t xb = 0, yb = 0;
    unsigned xshift = 3; // 3 + log2(operand stride)
    int64_t ystep = 8;
};

// matrix (x) sparse vector over one row range
struct SmSvProg {
    uint64_t rp = 0, rp_end = 0;
    uint64_t ci = 0, mv = 0;
    uint64_t vi = 0, vv = 0, nv = 0; // vector fiber
    uint64_t yb = 0;
    int64_t ystep = 8;
};

void emit_sm_dv(ProgramBuilder& p, const SmDvProg& a, KernelVariant v, IndexWidth w, unsigned K,
                unsigned unroll_threshold);
void emit_sm_sv(ProgramBuilder& p, const SmSvProg& a, KernelVariant v, IndexWidth w, unsigned K);

unsigned resolved_accumulators(const KernelOptions& opt, IndexWidth w);
unsigned resolved_threshold(const KernelOptions& opt);

} // namespace ssrsim::progs
