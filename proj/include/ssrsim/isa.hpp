#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ssrsim {

// Fault raised by the simulated machine (decode errors, bad stream reads,
// out-of-range accesses). Distinct from FormatError: these indicate a broken
// program or configuration, not broken input data.
struct SimFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Streamer configuration fault (launch with missing mandatory fields etc).
struct ConfigFault : SimFault {
    using SimFault::SimFault;
};

enum class Op : uint8_t {
    FMADD,
    FADD,
    FMUL,
    FMV,
    LOAD_F,
    STORE_F,
    LOAD_I,
    STORE_I,
    ADD_I,
    SHIFT_I,
    BRANCH_LT, // unsigned compare
    BRANCH_EQ,
    BRANCH_NE,
    JUMP,
    FREP,   // counted hardware loop
    FREP_S, // stream-controlled hardware loop
    SSR_CFG_WRITE,
    SSR_CFG_READ,
    SSR_ENABLE,
    SSR_DISABLE,
    FPU_FENCE,
    HALT,
};

// One decoded instruction. Field use depends on the opcode; unused fields are
// left at their defaults. Branch/jump targets are absolute instruction
// indices (resolved from labels by the builder/assembler).
struct Instruction {
    Op op = Op::HALT;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    uint8_t rs3 = 0;     // FMADD addend
    int64_t imm = 0;     // ADD_I/SHIFT_I immediate, load/store offset, branch target, FREP count
    uint8_t size = 8;    // LOAD_I/STORE_I access width in bytes (1/2/4/8)
    bool sub = false;    // ADD_I: subtract rs2
    bool use_imm = false;
    uint8_t body_len = 0;      // FREP/FREP_S body length
    uint8_t stagger_count = 0; // size of the rotated accumulator block (0/1 = off)
    uint8_t stagger_base = 0;  // first FP register of the block
    uint8_t lane = 0;          // SSR_CFG target lane, FREP_S control lane
    uint8_t cfgreg = 0;        // SSR_CFG register id
};

using Program = std::vector<Instruction>;

// FP compute ops are the ones dispatched to the FPU pipeline.
inline bool is_fp_compute(Op op) {
    return op == Op::FMADD || op == Op::FADD || op == Op::FMUL || op == Op::FMV;
}

inline bool is_branch(Op op) {
    return op == Op::BRANCH_LT || op == Op::BRANCH_EQ || op == Op::BRANCH_NE;
}

// Chained program construction with named labels:
//   ProgramBuilder b;
//   b.li(1, 100).label("loop").addi(1, 1, -1).bne(1, 0, "loop").halt();
//   Program p = b.build();
class ProgramBuilder {
public:
    ProgramBuilder& label(const std::string& name);

    ProgramBuilder& li(uint8_t rd, int64_t imm);
    ProgramBuilder& addi(uint8_t rd, uint8_t rs1, int64_t imm);
    ProgramBuilder& add(uint8_t rd, uint8_t rs1, uint8_t rs2);
    ProgramBuilder& sub(uint8_t rd, uint8_t rs1, uint8_t rs2);
    ProgramBuilder& slli(uint8_t rd, uint8_t rs1, unsigned sh);
    ProgramBuilder& srli(uint8_t rd, uint8_t rs1, unsigned sh);

    ProgramBuilder& load_i(uint8_t rd, uint8_t rs1, int64_t off, unsigned bytes);
    ProgramBuilder& store_i(uint8_t rs2, uint8_t rs1, int64_t off, unsigned bytes);
    ProgramBuilder& fld(uint8_t fd, uint8_t rs1, int64_t off);
    ProgramBuilder& fsd(uint8_t fs2, uint8_t rs1, int64_t off);

    ProgramBuilder& fmadd(uint8_t fd, uint8_t fa, uint8_t fb, uint8_t fc);
    ProgramBuilder& fadd(uint8_t fd, uint8_t fa, uint8_t fb);
    ProgramBuilder& fmul(uint8_t fd, uint8_t fa, uint8_t fb);
    ProgramBuilder& fmv(uint8_t fd, uint8_t fa);

    ProgramBuilder& blt(uint8_t rs1, uint8_t rs2, const std::string& target);
    ProgramBuilder& beq(uint8_t rs1, uint8_t rs2, const std::string& target);
    ProgramBuilder& bne(uint8_t rs1, uint8_t rs2, const std::string& target);
    ProgramBuilder& j(const std::string& target);

    ProgramBuilder& frep_imm(int64_t iters, unsigned body_len, unsigned stagger_count = 0,
                             unsigned stagger_base = 0);
    ProgramBuilder& frep_reg(uint8_t rs1, unsigned body_len, unsigned stagger_count = 0,
                             unsigned stagger_base = 0);
    ProgramBuilder& frep_s(unsigned lane, unsigned body_len, unsigned stagger_count = 0,
                           unsigned stagger_base = 0);

    ProgramBuilder& scfgw(uint8_t rs1, unsigned lane, unsigned reg);
    ProgramBuilder& scfgr(uint8_t rd, unsigned lane, unsigned reg);
    ProgramBuilder& ssr_enable();
    ProgramBuilder& ssr_disable();
    ProgramBuilder& fence();
    ProgramBuilder& halt();

    // Append a raw instruction (escape hatch for tests).
    ProgramBuilder& emit(const Instruction& ins);

    size_t size() const { return prog_.size(); }

    // Resolves label references; throws SimFault on unknown/duplicate labels.
    Program build() const;

private:
    ProgramBuilder& branch(Op op, uint8_t rs1, uint8_t rs2, const std::string& target);

    Program prog_;
    std::unordered_map<std::string, size_t> labels_;
    std::vector<std::pair<size_t, std::string>> fixups_;
};

// Textual assembler for test fixtures. One instruction per line, `;` starts a
// comment, `name:` binds a label. Mnemonics: add addi sub li slli srli
// ld lwu lhu lbu sd sw sh sb fld fsd fmadd.d fadd.d fmul.d fmv.d blt beq bne j
// frep frep.s scfgw scfgr ssr.en ssr.dis fpu.fence halt.
// Registers: x0..x31, f0..f31, ft0..ft11 (ft8..ft11 alias f28..f31).
Program assemble(const std::string& text);

std::string disassemble(const Instruction& ins);
std::string disassemble(const Program& prog);

} // namespace ssrsim
