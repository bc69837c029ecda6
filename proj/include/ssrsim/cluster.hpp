#pragma once

#include <cstdint>
#include <vector>

#include "ssrsim/formats.hpp"
#include "ssrsim/kernels.hpp"

namespace ssrsim {

// Multi-core cluster model: p cores share a banked scratchpad (TCDM) and a
// wide DMA port to an idealized flat background memory. Matrix data moves in
// double-buffered segments so transfers overlap compute; the operand vector
// is brought in once up front, the result strip stays resident and is written
// back once at the end.
//
// Cores pull fixed-size row chunks off a strictly ordered work queue. The
// first claimer of a segment also programs the DMA for the next one, paying
// the issue cost on its own path. Everything advances in one lockstep cycle
// loop, so bank arbitration and claim order are deterministic.
struct ClusterConfig {
    unsigned cores = 8;
    unsigned banks = 32;
    unsigned tcdm_kib = 128;
    unsigned dma_bits = 512;     // wide port payload per cycle
    uint64_t dma_issue = 10;     // core cycles to program one transfer
    uint64_t icache_penalty = 0; // refill charge per core per segment switch
    uint64_t chunk_rows = 0;     // rows per claim, 0 picks nrows / (4 * cores)
};

struct CoreReport {
    uint64_t busy_cycles = 0; // claim pickup to halt, summed over claims
    uint64_t claims = 0;
    uint64_t rows = 0;
    uint64_t fpu_busy = 0;
};

struct ClusterReport {
    uint64_t total_cycles = 0; // prologue through result writeback
    uint64_t prologue_cycles = 0;
    uint64_t writeback_cycles = 0;
    uint64_t dma_busy = 0;          // cycles the wide port moved data
    uint64_t exposed_dma_stall = 0; // idle core cycles spent behind a transfer
    uint64_t segments = 0;
    std::vector<CoreReport> cores;

    double utilization() const {
        if (total_cycles == 0 || cores.empty()) return 0.0;
        uint64_t f = 0;
        for (const auto& c : cores) f += c.fpu_busy;
        return double(f) / (double(total_cycles) * double(cores.size()));
    }
    uint64_t busiest() const;
    uint64_t idlest() const;
};

struct ClusterResult {
    std::vector<double> y; // contiguous, one entry per matrix row
    ClusterReport rpt;
};

// Transfer duration of the wide port: full width every cycle, last beat
// ragged. Zero bytes take zero cycles.
uint64_t dma_cycles(uint64_t bytes, unsigned dma_bits);

// CSR matrix times dense vector across the cluster. The vector (first ncols
// entries) is staged into TCDM up front; results land in ClusterResult::y.
// Throws ConfigFault when a single row cannot fit a segment buffer or the
// resident regions exceed the scratchpad.
ClusterResult run_cluster_sm_dv(const CsrMatrix& m, const DenseVector& x, const KernelOptions& opt,
                                const ClusterConfig& cc = {});

// CSR matrix times sparse vector (row-wise intersection). Base and Sssr only.
ClusterResult run_cluster_sm_sv(const CsrMatrix& m, const Fiber& v, const KernelOptions& opt,
                                const ClusterConfig& cc = {});

} // namespace ssrsim
