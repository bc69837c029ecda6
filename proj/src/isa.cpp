#include "ssrsim/isa.hpp"

#include <cctype>
#include <sstream>

namespace ssrsim {

ProgramBuilder& ProgramBuilder::label(const std::string& name) {
    if (labels_.count(name)) throw SimFault("duplicate label: " + name);
    labels_[name] = prog_.size();
    return *this;
}

ProgramBuilder& ProgramBuilder::emit(const Instruction& ins) {
    prog_.push_back(ins);
    return *this;
}

ProgramBuilder& ProgramBuilder::li(uint8_t rd, int64_t imm) { return addi(rd, 0, imm); }

ProgramBuilder& ProgramBuilder::addi(uint8_t rd, uint8_t rs1, int64_t imm) {
    Instruction i;
    i.op = Op::ADD_I;
    i.rd = rd;
    i.rs1 = rs1;
    i.imm = imm;
    i.use_imm = true;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::add(uint8_t rd, uint8_t rs1, uint8_t rs2) {
    Instruction i;
    i.op = Op::ADD_I;
    i.rd = rd;
    i.rs1 = rs1;
    i.rs2 = rs2;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::sub(uint8_t rd, uint8_t rs1, uint8_t rs2) {
    Instruction i;
    i.op = Op::ADD_I;
    i.rd = rd;
    i.rs1 = rs1;
    i.rs2 = rs2;
    i.sub = true;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::slli(uint8_t rd, uint8_t rs1, unsigned sh) {
    Instruction i;
    i.op = Op::SHIFT_I;
    i.rd = rd;
    i.rs1 = rs1;
    i.imm = sh;
    i.use_imm = true;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::srli(uint8_t rd, uint8_t rs1, unsigned sh) {
    slli(rd, rs1, sh);
    prog_.back().sub = true; // sub flag doubles as right-shift marker
    return *this;
}

ProgramBuilder& ProgramBuilder::load_i(uint8_t rd, uint8_t rs1, int64_t off, unsigned bytes) {
    Instruction i;
    i.op = Op::LOAD_I;
    i.rd = rd;
    i.rs1 = rs1;
    i.imm = off;
    i.size = uint8_t(bytes);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::store_i(uint8_t rs2, uint8_t rs1, int64_t off, unsigned bytes) {
    Instruction i;
    i.op = Op::STORE_I;
    i.rs1 = rs1;
    i.rs2 = rs2;
    i.imm = off;
    i.size = uint8_t(bytes);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::fld(uint8_t fd, uint8_t rs1, int64_t off) {
    Instruction i;
    i.op = Op::LOAD_F;
    i.rd = fd;
    i.rs1 = rs1;
    i.imm = off;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::fsd(uint8_t fs2, uint8_t rs1, int64_t off) {
    Instruction i;
    i.op = Op::STORE_F;
    i.rs1 = rs1;
    i.rs2 = fs2;
    i.imm = off;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::fmadd(uint8_t fd, uint8_t fa, uint8_t fb, uint8_t fc) {
    Instruction i;
    i.op = Op::FMADD;
    i.rd = fd;
    i.rs1 = fa;
    i.rs2 = fb;
    i.rs3 = fc;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::fadd(uint8_t fd, uint8_t fa, uint8_t fb) {
    Instruction i;
    i.op = Op::FADD;
    i.rd = fd;
    i.rs1 = fa;
    i.rs2 = fb;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::fmul(uint8_t fd, uint8_t fa, uint8_t fb) {
    Instruction i;
    i.op = Op::FMUL;
    i.rd = fd;
    i.rs1 = fa;
    i.rs2 = fb;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::fmv(uint8_t fd, uint8_t fa) {
    Instruction i;
    i.op = Op::FMV;
    i.rd = fd;
    i.rs1 = fa;
    return emit(i);
}

ProgramBuilder& ProgramBuilder::branch(Op op, uint8_t rs1, uint8_t rs2,
                                       const std::string& target) {
    Instruction i;
    i.op = op;
    i.rs1 = rs1;
    i.rs2 = rs2;
    fixups_.emplace_back(prog_.size(), target);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::blt(uint8_t rs1, uint8_t rs2, const std::string& target) {
    return branch(Op::BRANCH_LT, rs1, rs2, target);
}
ProgramBuilder& ProgramBuilder::beq(uint8_t rs1, uint8_t rs2, const std::string& target) {
    return branch(Op::BRANCH_EQ, rs1, rs2, target);
}
ProgramBuilder& ProgramBuilder::bne(uint8_t rs1, uint8_t rs2, const std::string& target) {
    return branch(Op::BRANCH_NE, rs1, rs2, target);
}
ProgramBuilder& ProgramBuilder::j(const std::string& target) {
    Instruction i;
    i.op = Op::JUMP;
    fixups_.emplace_back(prog_.size(), target);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::frep_imm(int64_t iters, unsigned body_len,
                                         unsigned stagger_count, unsigned stagger_base) {
    Instruction i;
    i.op = Op::FREP;
    i.imm = iters;
    i.use_imm = true;
    i.body_len = uint8_t(body_len);
    i.stagger_count = uint8_t(stagger_count);
    i.stagger_base = uint8_t(stagger_base);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::frep_reg(uint8_t rs1, unsigned body_len, unsigned stagger_count,
                                         unsigned stagger_base) {
    Instruction i;
    i.op = Op::FREP;
    i.rs1 = rs1;
    i.body_len = uint8_t(body_len);
    i.stagger_count = uint8_t(stagger_count);
    i.stagger_base = uint8_t(stagger_base);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::frep_s(unsigned lane, unsigned body_len, unsigned stagger_count,
                                       unsigned stagger_base) {
    Instruction i;
    i.op = Op::FREP_S;
    i.lane = uint8_t(lane);
    i.body_len = uint8_t(body_len);
    i.stagger_count = uint8_t(stagger_count);
    i.stagger_base = uint8_t(stagger_base);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::scfgw(uint8_t rs1, unsigned lane, unsigned reg) {
    Instruction i;
    i.op = Op::SSR_CFG_WRITE;
    i.rs1 = rs1;
    i.lane = uint8_t(lane);
    i.cfgreg = uint8_t(reg);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::scfgr(uint8_t rd, unsigned lane, unsigned reg) {
    Instruction i;
    i.op = Op::SSR_CFG_READ;
    i.rd = rd;
    i.lane = uint8_t(lane);
    i.cfgreg = uint8_t(reg);
    return emit(i);
}

ProgramBuilder& ProgramBuilder::ssr_enable() {
    Instruction i;
    i.op = Op::SSR_ENABLE;
    return emit(i);
}
ProgramBuilder& ProgramBuilder::ssr_disable() {
    Instruction i;
    i.op = Op::SSR_DISABLE;
    return emit(i);
}
ProgramBuilder& ProgramBuilder::fence() {
    Instruction i;
    i.op = Op::FPU_FENCE;
    return emit(i);
}
ProgramBuilder& ProgramBuilder::halt() {
    Instruction i;
    i.op = Op::HALT;
    return emit(i);
}

Program ProgramBuilder::build() const {
    Program out = prog_;
    for (const auto& [pos, name] : fixups_) {
        auto it = labels_.find(name);
        if (it == labels_.end()) throw SimFault("unresolved label: " + name);
        out[pos].imm = int64_t(it->second);
    }
    return out;
}

// --- assembler -------------------------------------------------------------

namespace {

struct AsmError : SimFault {
    using SimFault::SimFault;
};

[[noreturn]] void asm_fail(size_t line, const std::string& what) {
    throw AsmError("assembly line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : line) {
        if (c == ';') break;
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')') {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

bool parse_int(const std::string& s, int64_t& out) {
    if (s.empty()) return false;
    size_t pos = 0;
    try {
        out = std::stoll(s, &pos, 0);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

bool parse_reg(const std::string& s, bool& is_fp, uint8_t& idx) {
    if (s.size() < 2) return false;
    if (s[0] == 'x' || s[0] == 'f') {
        std::string num = s.substr(1);
        bool fp = s[0] == 'f';
        if (fp && s.size() >= 3 && s[1] == 't') {
            // ftN temporaries: ft0..ft7 are f0..f7, ft8..ft11 are f28..f31
            int64_t n;
            if (!parse_int(s.substr(2), n) || n < 0 || n > 11) return false;
            is_fp = true;
            idx = uint8_t(n <= 7 ? n : 28 + (n - 8));
            return true;
        }
        int64_t n;
        if (!parse_int(num, n) || n < 0 || n > 31) return false;
        is_fp = fp;
        idx = uint8_t(n);
        return true;
    }
    return false;
}

uint8_t need_reg(const std::vector<std::string>& t, size_t i, bool want_fp, size_t line) {
    if (i >= t.size()) asm_fail(line, "missing operand");
    bool fp;
    uint8_t r;
    if (!parse_reg(t[i], fp, r) || fp != want_fp)
        asm_fail(line, "bad register operand '" + t[i] + "'");
    return r;
}

int64_t need_int(const std::vector<std::string>& t, size_t i, size_t line) {
    if (i >= t.size()) asm_fail(line, "missing operand");
    int64_t v;
    if (!parse_int(t[i], v)) asm_fail(line, "bad integer operand '" + t[i] + "'");
    return v;
}

std::string need_sym(const std::vector<std::string>& t, size_t i, size_t line) {
    if (i >= t.size()) asm_fail(line, "missing label operand");
    return t[i];
}

} // namespace

Program assemble(const std::string& text) {
    ProgramBuilder b;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = tokenize(line);
        if (t.empty()) continue;
        // leading label
        if (t[0].back() == ':') {
            b.label(t[0].substr(0, t[0].size() - 1));
            t.erase(t.begin());
            if (t.empty()) continue;
        }
        const std::string& m = t[0];
        if (m == "li") {
            b.li(need_reg(t, 1, false, lineno), need_int(t, 2, lineno));
        } else if (m == "addi") {
            b.addi(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                   need_int(t, 3, lineno));
        } else if (m == "add") {
            b.add(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                  need_reg(t, 3, false, lineno));
        } else if (m == "sub") {
            b.sub(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                  need_reg(t, 3, false, lineno));
        } else if (m == "slli") {
            b.slli(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                   unsigned(need_int(t, 3, lineno)));
        } else if (m == "srli") {
            b.srli(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                   unsigned(need_int(t, 3, lineno)));
        } else if (m == "ld" || m == "lwu" || m == "lhu" || m == "lbu") {
            unsigned bytes = m == "ld" ? 8 : m == "lwu" ? 4 : m == "lhu" ? 2 : 1;
            b.load_i(need_reg(t, 1, false, lineno), need_reg(t, 3, false, lineno),
                     need_int(t, 2, lineno), bytes);
        } else if (m == "sd" || m == "sw" || m == "sh" || m == "sb") {
            unsigned bytes = m == "sd" ? 8 : m == "sw" ? 4 : m == "sh" ? 2 : 1;
            b.store_i(need_reg(t, 1, false, lineno), need_reg(t, 3, false, lineno),
                      need_int(t, 2, lineno), bytes);
        } else if (m == "fld") {
            b.fld(need_reg(t, 1, true, lineno), need_reg(t, 3, false, lineno),
                  need_int(t, 2, lineno));
        } else if (m == "fsd") {
            b.fsd(need_reg(t, 1, true, lineno), need_reg(t, 3, false, lineno),
                  need_int(t, 2, lineno));
        } else if (m == "fmadd.d") {
            b.fmadd(need_reg(t, 1, true, lineno), need_reg(t, 2, true, lineno),
                    need_reg(t, 3, true, lineno), need_reg(t, 4, true, lineno));
        } else if (m == "fadd.d") {
            b.fadd(need_reg(t, 1, true, lineno), need_reg(t, 2, true, lineno),
                   need_reg(t, 3, true, lineno));
        } else if (m == "fmul.d") {
            b.fmul(need_reg(t, 1, true, lineno), need_reg(t, 2, true, lineno),
                   need_reg(t, 3, true, lineno));
        } else if (m == "fmv.d") {
            b.fmv(need_reg(t, 1, true, lineno), need_reg(t, 2, true, lineno));
        } else if (m == "blt") {
            b.blt(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                  need_sym(t, 3, lineno));
        } else if (m == "beq") {
            b.beq(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                  need_sym(t, 3, lineno));
        } else if (m == "bne") {
            b.bne(need_reg(t, 1, false, lineno), need_reg(t, 2, false, lineno),
                  need_sym(t, 3, lineno));
        } else if (m == "j") {
            b.j(need_sym(t, 1, lineno));
        } else if (m == "frep") {
            bool fp = false;
            uint8_t r = 0;
            unsigned sc = t.size() > 3 ? unsigned(need_int(t, 3, lineno)) : 0;
            unsigned sb = t.size() > 4 ? unsigned(need_int(t, 4, lineno)) : 0;
            if (parse_reg(t.size() > 1 ? t[1] : "", fp, r) && !fp)
                b.frep_reg(r, unsigned(need_int(t, 2, lineno)), sc, sb);
            else
                b.frep_imm(need_int(t, 1, lineno), unsigned(need_int(t, 2, lineno)), sc, sb);
        } else if (m == "frep.s") {
            unsigned sc = t.size() > 3 ? unsigned(need_int(t, 3, lineno)) : 0;
            unsigned sb = t.size() > 4 ? unsigned(need_int(t, 4, lineno)) : 0;
            b.frep_s(unsigned(need_int(t, 1, lineno)), unsigned(need_int(t, 2, lineno)), sc, sb);
        } else if (m == "scfgw") {
            b.scfgw(need_reg(t, 1, false, lineno), unsigned(need_int(t, 2, lineno)),
                    unsigned(need_int(t, 3, lineno)));
        } else if (m == "scfgr") {
            b.scfgr(need_reg(t, 1, false, lineno), unsigned(need_int(t, 2, lineno)),
                    unsigned(need_int(t, 3, lineno)));
        } else if (m == "ssr.en") {
            b.ssr_enable();
        } else if (m == "ssr.dis") {
            b.ssr_disable();
        } else if (m == "fpu.fence") {
            b.fence();
        } else if (m == "halt") {
            b.halt();
        } else {
            asm_fail(lineno, "unknown mnemonic '" + m + "'");
        }
    }
    return b.build();
}

// --- disassembler ----------------------------------------------------------

namespace {
std::string xr(uint8_t r) { return "x" + std::to_string(r); }
std::string fr(uint8_t r) { return "f" + std::to_string(r); }
std::string mem_op(const Instruction& i) {
    return std::to_string(i.imm) + "(" + xr(i.rs1) + ")";
}
} // namespace

std::string disassemble(const Instruction& i) {
    switch (i.op) {
        case Op::FMADD:
            return "fmadd.d " + fr(i.rd) + ", " + fr(i.rs1) + ", " + fr(i.rs2) + ", " + fr(i.rs3);
        case Op::FADD:
            return "fadd.d " + fr(i.rd) + ", " + fr(i.rs1) + ", " + fr(i.rs2);
        case Op::FMUL:
            return "fmul.d " + fr(i.rd) + ", " + fr(i.rs1) + ", " + fr(i.rs2);
        case Op::FMV:
            return "fmv.d " + fr(i.rd) + ", " + fr(i.rs1);
        case Op::LOAD_F:
            return "fld " + fr(i.rd) + ", " + mem_op(i);
        case Op::STORE_F:
            return "fsd " + fr(i.rs2) + ", " + mem_op(i);
        case Op::LOAD_I: {
            const char* m = i.size == 8 ? "ld" : i.size == 4 ? "lwu" : i.size == 2 ? "lhu" : "lbu";
            return std::string(m) + " " + xr(i.rd) + ", " + mem_op(i);
        }
        case Op::STORE_I: {
            const char* m = i.size == 8 ? "sd" : i.size == 4 ? "sw" : i.size == 2 ? "sh" : "sb";
            return std::string(m) + " " + xr(i.rs2) + ", " + mem_op(i);
        }
        case Op::ADD_I:
            if (i.use_imm)
                return "addi " + xr(i.rd) + ", " + xr(i.rs1) + ", " + std::to_string(i.imm);
            return (i.sub ? "sub " : "add ") + xr(i.rd) + ", " + xr(i.rs1) + ", " + xr(i.rs2);
        case Op::SHIFT_I:
            return (i.sub ? "srli " : "slli ") + xr(i.rd) + ", " + xr(i.rs1) + ", " +
                   std::to_string(i.imm);
        case Op::BRANCH_LT:
            return "blt " + xr(i.rs1) + ", " + xr(i.rs2) + ", " + std::to_string(i.imm);
        case Op::BRANCH_EQ:
            return "beq " + xr(i.rs1) + ", " + xr(i.rs2) + ", " + std::to_string(i.imm);
        case Op::BRANCH_NE:
            return "bne " + xr(i.rs1) + ", " + xr(i.rs2) + ", " + std::to_string(i.imm);
        case Op::JUMP:
            return "j " + std::to_string(i.imm);
        case Op::FREP: {
            std::string head = i.use_imm ? std::to_string(i.imm) : xr(i.rs1);
            return "frep " + head + ", " + std::to_string(i.body_len) + ", " +
                   std::to_string(i.stagger_count) + ", " + std::to_string(i.stagger_base);
        }
        case Op::FREP_S:
            return "frep.s " + std::to_string(i.lane) + ", " + std::to_string(i.body_len) + ", " +
                   std::to_string(i.stagger_count) + ", " + std::to_string(i.stagger_base);
        case Op::SSR_CFG_WRITE:
            return "scfgw " + xr(i.rs1) + ", " + std::to_string(i.lane) + ", " +
                   std::to_string(i.cfgreg);
        case Op::SSR_CFG_READ:
            return "scfgr " + xr(i.rd) + ", " + std::to_string(i.lane) + ", " +
                   std::to_string(i.cfgreg);
        case Op::SSR_ENABLE:
            return "ssr.en";
        case Op::SSR_DISABLE:
            return "ssr.dis";
        case Op::FPU_FENCE:
            return "fpu.fence";
        case Op::HALT:
            return "halt";
    }
    return "??";
}

std::string disassemble(const Program& prog) {
    std::string out;
    for (size_t i = 0; i < prog.size(); ++i) {
        out += std::to_string(i) + ":\t" + disassemble(prog[i]) + "\n";
    }
    return out;
}

} // namespace ssrsim
