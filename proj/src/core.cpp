#include "ssrsim/core.hpp"

#include <cmath>

namespace ssrsim {

CoreEngine::CoreEngine(Program prog, Memory& mem, MachineConfig cfg)
    : prog_(std::move(prog)), mem_(mem), cfg_(cfg), ssr_(mem, cfg.streamer) {
    if (prog_.empty()) throw SimFault("empty program");
    cycle_ = cfg_.start_cycle;
}

void CoreEngine::load_program(Program prog) {
    if (!halted_) throw SimFault("program swap on a running core");
    if (!fpu_q_.empty()) throw SimFault("program swap with queued FP work");
    prog_ = std::move(prog);
    if (prog_.empty()) throw SimFault("empty program");
    pc_ = 0;
    halted_ = false;
    bubble_ = false;
    mem_wait_ = false;
    body_remaining_ = 0;
}

bool CoreEngine::step() {
    if (halted_) return false;
    if (cfg_.watchdog && cycle_ - cfg_.start_cycle > cfg_.watchdog)
        throw SimFault("cycle budget exhausted, the machine is stuck");
    core_port_busy_ = false;
    ssr_.phase_arrivals(cycle_);
    ssr_.phase_comparator(cycle_);
    core_issue();
    fpu_issue();
    ssr_.phase_ports(cycle_, core_port_busy_);
    ++cycle_;
    return !halted_;
}

SimReport CoreEngine::run() {
    while (step()) {
    }
    rpt_.total_cycles = cycle_ - cfg_.start_cycle;
    for (unsigned l = 0; l < 3; ++l) rpt_.lanes[l] = ssr_.stats(l);
    rpt_.comparator_events = ssr_.comparator_events();
    rpt_.mem_reads = mem_.read_count();
    rpt_.mem_writes = mem_.write_count();
    rpt_.bank_conflicts = mem_.conflict_count();
    if (rpt_.instructions + rpt_.stalls_total() != rpt_.total_cycles)
        throw SimFault("cycle accounting out of balance");
    return rpt_;
}

bool CoreEngine::is_stream_reg(unsigned r) const {
    return ssr_enabled_ && r < 3 && (ssr_.lane_has_job(r) || ssr_.lane_has_data(r));
}

uint64_t CoreEngine::fpu_stall_counter() {
    // The core is blocked behind the FP dispatch queue; charge the cycle to
    // whatever the FPU itself is waiting on.
    switch (fpu_block_) {
    case Blocker::StreamData: ++rpt_.stall_stream_data; break;
    case Blocker::StreamControl: ++rpt_.stall_stream_control; break;
    default: ++rpt_.stall_dependency; break;
    }
    return 0;
}

void CoreEngine::core_issue() {
    if (bubble_) { // mispredicted branch: one dead slot
        bubble_ = false;
        ++rpt_.stall_dependency;
        return;
    }
    if (mem_wait_) {
        core_port_busy_ = true;
        if (cycle_ < mem_grant_) {
            ++rpt_.stall_bank_conflict;
            return;
        }
        const Instruction& i = mem_ins_;
        switch (i.op) {
        case Op::LOAD_I: set_xreg(i.rd, mem_.load_uint(mem_addr_, i.size)); break;
        case Op::STORE_I: mem_.store_uint(mem_addr_, i.size, x_[i.rs2]); break;
        case Op::LOAD_F:
            f_[i.rd] = mem_.load_f64(mem_addr_);
            fp_ready_[i.rd] = cycle_ + 1;
            break;
        case Op::STORE_F: mem_.store_f64(mem_addr_, f_[i.rs2]); break;
        default: break;
        }
        mem_wait_ = false;
        ++rpt_.instructions;
        ++pc_;
        return;
    }
    if (pc_ >= prog_.size()) throw SimFault("execution ran past the end of the program");
    const Instruction& ins = prog_[pc_];

    if (body_remaining_ && !is_fp_compute(ins.op))
        throw SimFault("loop body holds a non-FP instruction");

    switch (ins.op) {
    case Op::ADD_I: {
        uint64_t a = x_[ins.rs1];
        uint64_t b = ins.use_imm ? uint64_t(ins.imm) : x_[ins.rs2];
        set_xreg(ins.rd, ins.sub ? a - b : a + b);
        break;
    }
    case Op::SHIFT_I: {
        uint64_t a = x_[ins.rs1];
        unsigned sh = unsigned(ins.imm) & 63;
        set_xreg(ins.rd, ins.sub ? a >> sh : a << sh);
        break;
    }

    case Op::LOAD_I:
    case Op::STORE_I:
    case Op::LOAD_F:
    case Op::STORE_F: {
        if (ins.op == Op::STORE_F) {
            if (is_stream_reg(ins.rs2)) throw SimFault("core store of a stream register");
            if (((pend_writes_ >> ins.rs2) & 1) || fp_ready_[ins.rs2] > cycle_) {
                ++rpt_.stall_dependency;
                return;
            }
        }
        if (ins.op == Op::LOAD_F) {
            if (is_stream_reg(ins.rd)) throw SimFault("core load into a stream register");
            if ((((pend_reads_ | pend_writes_) >> ins.rd) & 1) || fp_ready_[ins.rd] > cycle_) {
                ++rpt_.stall_dependency;
                return;
            }
        }
        uint64_t addr = x_[ins.rs1] + uint64_t(ins.imm);
        uint64_t grant = mem_.request(cycle_, addr);
        core_port_busy_ = true;
        if (grant > cycle_) {
            mem_wait_ = true;
            mem_grant_ = grant;
            mem_ins_ = ins;
            mem_addr_ = addr;
            ++rpt_.stall_bank_conflict;
            return;
        }
        switch (ins.op) {
        case Op::LOAD_I: set_xreg(ins.rd, mem_.load_uint(addr, ins.size)); break;
        case Op::STORE_I: mem_.store_uint(addr, ins.size, x_[ins.rs2]); break;
        case Op::LOAD_F:
            f_[ins.rd] = mem_.load_f64(addr);
            fp_ready_[ins.rd] = cycle_ + 1;
            break;
        case Op::STORE_F: mem_.store_f64(addr, f_[ins.rs2]); break;
        default: break;
        }
        break;
    }

    case Op::BRANCH_LT:
    case Op::BRANCH_EQ:
    case Op::BRANCH_NE: {
        uint64_t a = x_[ins.rs1], b = x_[ins.rs2];
        bool taken = ins.op == Op::BRANCH_LT ? a < b : ins.op == Op::BRANCH_EQ ? a == b : a != b;
        bool backward = uint64_t(ins.imm) <= pc_;
        // backward-taken and forward-not-taken are the predicted-right cases
        if (taken != backward) bubble_ = true;
        ++rpt_.instructions;
        pc_ = taken ? uint64_t(ins.imm) : pc_ + 1;
        return;
    }
    case Op::JUMP:
        ++rpt_.instructions;
        pc_ = uint64_t(ins.imm);
        return;

    case Op::FMADD:
    case Op::FADD:
    case Op::FMUL:
    case Op::FMV: {
        if (fpu_q_.size() >= cfg_.fpu_queue) {
            fpu_stall_counter();
            return;
        }
        FpuEntry e;
        e.ins = ins;
        unsigned sc = 0, sb = 0;
        if (body_remaining_) {
            e.is_body = true;
            --body_remaining_;
            for (auto it = fpu_q_.rbegin(); it != fpu_q_.rend(); ++it)
                if (it->is_desc) {
                    sc = it->ins.stagger_count;
                    sb = it->ins.stagger_base;
                    break;
                }
        }
        note_enqueue(e);
        e.writes = reg_mask(e, ins.rd, sc, sb);
        e.reads = reg_mask(e, ins.rs1, sc, sb);
        if (ins.op != Op::FMV) e.reads |= reg_mask(e, ins.rs2, sc, sb);
        if (ins.op == Op::FMADD) e.reads |= reg_mask(e, ins.rs3, sc, sb);
        fpu_q_.push_back(e);
        recompute_masks();
        setup_frozen_ = true;
        break;
    }

    case Op::FREP:
    case Op::FREP_S: {
        if (body_remaining_) throw SimFault("loop descriptor inside another loop body");
        if (ins.body_len == 0) throw SimFault("loop with an empty body");
        if (ins.body_len + 1u > cfg_.fpu_queue)
            throw SimFault("loop body exceeds the FP dispatch queue");
        if (fpu_q_.size() >= cfg_.fpu_queue) {
            fpu_stall_counter();
            return;
        }
        FpuEntry e;
        e.ins = ins;
        e.is_desc = true;
        e.token_mode = ins.op == Op::FREP_S;
        e.iterations = e.token_mode ? 0 : (ins.use_imm ? uint64_t(ins.imm) : x_[ins.rs1]);
        fpu_q_.push_back(e);
        body_remaining_ = ins.body_len;
        setup_frozen_ = true;
        break;
    }

    case Op::SSR_CFG_WRITE: {
        if (!ssr_.cfg_write(ins.lane, ins.cfgreg, x_[ins.rs1], cycle_)) {
            ++rpt_.stall_dependency; // both job slots busy, launch must wait
            return;
        }
        if (!setup_frozen_) {
            if (rpt_.setup_first == ~0ull) rpt_.setup_first = cycle_;
            rpt_.setup_last = cycle_;
        }
        break;
    }
    case Op::SSR_CFG_READ: set_xreg(ins.rd, ssr_.cfg_read(ins.lane, ins.cfgreg)); break;
    case Op::SSR_ENABLE: ssr_enabled_ = true; break;
    case Op::SSR_DISABLE:
        ssr_enabled_ = false;
        ssr_.cancel_read_jobs();
        break;

    case Op::FPU_FENCE:
        if (!drained(false)) {
            ++rpt_.stall_fence_drain;
            return;
        }
        break;
    case Op::HALT:
        if (!drained(false)) {
            ++rpt_.stall_fence_drain;
            return;
        }
        ++rpt_.instructions;
        halted_ = true;
        return;
    }
    ++rpt_.instructions;
    ++pc_;
}

bool CoreEngine::drained(bool) const {
    if (!fpu_q_.empty()) return false;
    if (last_fp_ready_ > cycle_) return false; // results still in the pipe
    if (!ssr_.writes_drained()) return false;
    return true;
}

void CoreEngine::note_enqueue(FpuEntry&) {}

uint32_t CoreEngine::reg_mask(const FpuEntry&, uint8_t r, unsigned stagger_count,
                              unsigned stagger_base) {
    if (stagger_count > 1 && r >= stagger_base && r < stagger_base + stagger_count) {
        uint32_t m = 0;
        for (unsigned k = 0; k < stagger_count; ++k) m |= 1u << (stagger_base + k);
        return m;
    }
    return 1u << r;
}

void CoreEngine::recompute_masks() {
    pend_reads_ = pend_writes_ = 0;
    for (const auto& e : fpu_q_) {
        pend_reads_ |= e.reads;
        pend_writes_ |= e.writes;
    }
}

Instruction CoreEngine::staggered(const Instruction& body, const FpuEntry& desc,
                                  uint64_t iter) const {
    unsigned sc = desc.ins.stagger_count, sb = desc.ins.stagger_base;
    if (sc <= 1) return body;
    Instruction r = body;
    auto rot = [&](uint8_t reg) {
        if (reg >= sb && reg < sb + sc) return uint8_t(sb + (reg - sb + iter) % sc);
        return reg;
    };
    r.rd = rot(r.rd);
    r.rs1 = rot(r.rs1);
    r.rs2 = rot(r.rs2);
    r.rs3 = rot(r.rs3);
    return r;
}

bool CoreEngine::fp_operands_ready(const Instruction& ins, Blocker& why) const {
    auto src = [&](uint8_t r) {
        if (ssr_enabled_ && r < 3) {
            if (ssr_.lane_has_data(r)) {
                if (ssr_.can_pop(r)) return true;
                why = Blocker::StreamData; // head slot still inflight
                return false;
            }
            if (!ssr_.lane_has_job(r)) throw SimFault("stream register read with no job");
            if (!ssr_.lane_reads(r)) throw SimFault("read of a write-direction stream register");
            if (ssr_.parked_dry(r)) throw SimFault("stream consumed past its backing data");
            why = Blocker::StreamData;
            return false;
        }
        if (fp_ready_[r] > cycle_) {
            why = Blocker::Dependency;
            return false;
        }
        return true;
    };
    if (!src(ins.rs1)) return false;
    if (ins.op != Op::FMV && !src(ins.rs2)) return false;
    if (ins.op == Op::FMADD && !src(ins.rs3)) return false;
    if (ssr_enabled_ && ins.rd < 3) {
        if (!ssr_.lane_has_job(ins.rd)) throw SimFault("stream register write with no job");
        if (!ssr_.lane_writes(ins.rd)) throw SimFault("write to a read-direction stream register");
        if (!ssr_.can_push(ins.rd)) {
            why = Blocker::StreamData;
            return false;
        }
    }
    return true;
}

void CoreEngine::fp_execute(const Instruction& ins) {
    auto read = [&](uint8_t r) {
        if (ssr_enabled_ && r < 3 && (ssr_.lane_has_data(r) || ssr_.lane_reads(r)))
            return ssr_.pop(r, cycle_);
        return f_[r];
    };
    double v = 0.0;
    switch (ins.op) {
    case Op::FMADD: {
        double a = read(ins.rs1), b = read(ins.rs2), c = read(ins.rs3);
        v = std::fma(a, b, c);
        break;
    }
    case Op::FADD: v = read(ins.rs1) + read(ins.rs2); break;
    case Op::FMUL: v = read(ins.rs1) * read(ins.rs2); break;
    case Op::FMV: v = read(ins.rs1); break;
    default: throw SimFault("non-FP opcode reached the FPU");
    }
    uint64_t ready = cycle_ + cfg_.fpu_latency;
    if (ssr_enabled_ && ins.rd < 3 && ssr_.lane_writes(ins.rd)) {
        ssr_.push(ins.rd, v, ready);
    } else {
        f_[ins.rd] = v;
        fp_ready_[ins.rd] = ready;
    }
    if (ready > last_fp_ready_) last_fp_ready_ = ready;
    ++rpt_.fpu_busy;
}

void CoreEngine::fpu_issue() {
    for (;;) {
        if (fpu_q_.empty()) {
            fpu_block_ = Blocker::Idle;
            return;
        }
        FpuEntry& head = fpu_q_.front();
        if (!head.is_desc) {
            Blocker why = Blocker::Dependency;
            if (!fp_operands_ready(head.ins, why)) {
                fpu_block_ = why;
                return;
            }
            fp_execute(head.ins);
            fpu_q_.pop_front();
            recompute_masks();
            fpu_block_ = Blocker::Idle;
            return; // one FP issue per cycle
        }
        const unsigned blen = head.ins.body_len;
        // the sequencer runs against a fully captured body
        if (fpu_q_.size() < 1u + blen) {
            fpu_block_ = Blocker::BodyWait;
            return;
        }
        if (seq_body_pos_ == 0) {
            bool finished;
            if (head.token_mode) {
                if (!ssr_.token_ready()) {
                    fpu_block_ = Blocker::StreamControl;
                    return;
                }
                finished = ssr_.token_done();
                if (finished) ssr_.token_pop();
            } else {
                finished = seq_iter_ >= head.iterations;
            }
            if (finished) {
                for (unsigned k = 0; k <= blen; ++k) fpu_q_.pop_front();
                seq_active_ = false;
                seq_iter_ = 0;
                seq_body_pos_ = 0;
                recompute_masks();
                continue; // the cycle is free for whatever queued up next
            }
            seq_active_ = true;
        }
        Instruction ins = staggered(fpu_q_[1 + seq_body_pos_].ins, head, seq_iter_);
        Blocker why = Blocker::Dependency;
        if (!fp_operands_ready(ins, why)) {
            fpu_block_ = why;
            return;
        }
        if (head.token_mode && seq_body_pos_ == 0) ssr_.token_pop();
        fp_execute(ins);
        fpu_block_ = Blocker::Idle;
        if (++seq_body_pos_ == blen) {
            seq_body_pos_ = 0;
            ++seq_iter_;
        }
        return;
    }
}

} // namespace ssrsim
