#include "ssrsim/mtx.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <tuple>

namespace ssrsim {

namespace {

struct Entry {
    uint64_t row, col;
    double val;
};

[[noreturn]] void fail(const std::string& path, uint64_t line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

} // namespace

CsrMatrix load_matrix_market(const std::string& path, IndexWidth width) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");

    std::string line;
    uint64_t lineno = 0;

    if (!std::getline(in, line)) fail(path, 1, "empty file");
    ++lineno;
    std::istringstream banner(line);
    std::string tag, object, fmt, field, sym;
    banner >> tag >> object >> fmt >> field >> sym;
    if (tag != "%%MatrixMarket") fail(path, lineno, "missing MatrixMarket banner");
    if (object != "matrix" || fmt != "coordinate")
        fail(path, lineno, "only 'matrix coordinate' files are supported");
    const bool pattern = field == "pattern";
    if (!pattern && field != "real" && field != "integer")
        fail(path, lineno, "unsupported field type '" + field + "'");
    const bool symmetric = sym == "symmetric";
    if (!symmetric && sym != "general")
        fail(path, lineno, "unsupported symmetry '" + sym + "'");

    uint64_t nrows = 0, ncols = 0, nnz_decl = 0;
    for (;;) {
        if (!std::getline(in, line)) fail(path, lineno, "missing size line");
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream sz(line);
        if (!(sz >> nrows >> ncols >> nnz_decl)) fail(path, lineno, "bad size line");
        break;
    }

    std::vector<Entry> entries;
    entries.reserve(symmetric ? nnz_decl * 2 : nnz_decl);
    uint64_t seen = 0;
    while (seen < nnz_decl) {
        if (!std::getline(in, line))
            fail(path, lineno, "unexpected end of file: expected " + std::to_string(nnz_decl) +
                                   " entries, got " + std::to_string(seen));
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream es(line);
        uint64_t r, c;
        double v = 1.0;
        if (!(es >> r >> c)) fail(path, lineno, "bad entry");
        if (!pattern && !(es >> v)) fail(path, lineno, "missing value");
        if (r < 1 || r > nrows || c < 1 || c > ncols) fail(path, lineno, "coordinate out of range");
        entries.push_back({r - 1, c - 1, v});
        if (symmetric && r != c) entries.push_back({c - 1, r - 1, v});
        ++seen;
    }

    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });

    CsrMatrix m;
    m.nrows = nrows;
    m.ncols = ncols;
    m.width = width;
    m.row_ptrs.assign(nrows + 1, 0);
    for (size_t i = 0; i < entries.size();) {
        size_t j = i;
        double sum = 0.0;
        while (j < entries.size() && entries[j].row == entries[i].row &&
               entries[j].col == entries[i].col) {
            sum += entries[j].val; // duplicates are summed
            ++j;
        }
        m.col_idcs.push_back(entries[i].col);
        m.vals.push_back(sum);
        m.row_ptrs[entries[i].row + 1]++;
        i = j;
    }
    for (uint64_t r = 0; r < nrows; ++r) m.row_ptrs[r + 1] += m.row_ptrs[r];
    if (ncols != 0 && ncols - 1 > index_max(width))
        throw WidthOverflow(path + ": ncols " + std::to_string(ncols) + " overflows " +
                            std::to_string(index_bits(width)) + "-bit indices");
    m.validate();
    return m;
}

namespace {
constexpr char kCacheMagic[8] = {'s', 's', 'r', 'c', 's', 'r', '0', '2'};
}

void save_csr_cache(const std::string& path, const CsrMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot write cache");
    out.write(kCacheMagic, sizeof kCacheMagic);
    uint64_t hdr[4] = {m.nrows, m.ncols, m.nnz(), uint64_t(index_bytes(m.width))};
    out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    out.write(reinterpret_cast<const char*>(m.row_ptrs.data()),
              std::streamsize(m.row_ptrs.size() * sizeof(uint32_t)));
    out.write(reinterpret_cast<const char*>(m.col_idcs.data()),
              std::streamsize(m.col_idcs.size() * sizeof(uint64_t)));
    out.write(reinterpret_cast<const char*>(m.vals.data()),
              std::streamsize(m.vals.size() * sizeof(double)));
}

bool load_csr_cache(const std::string& path, CsrMatrix& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0)
        return false;
    uint64_t hdr[4];
    if (!in.read(reinterpret_cast<char*>(hdr), sizeof hdr)) return false;
    CsrMatrix m;
    m.nrows = hdr[0];
    m.ncols = hdr[1];
    m.width = static_cast<IndexWidth>(hdr[3]);
    m.row_ptrs.resize(m.nrows + 1);
    m.col_idcs.resize(hdr[2]);
    m.vals.resize(hdr[2]);
    if (!in.read(reinterpret_cast<char*>(m.row_ptrs.data()),
                 std::streamsize(m.row_ptrs.size() * sizeof(uint32_t))))
        return false;
    if (!in.read(reinterpret_cast<char*>(m.col_idcs.data()),
                 std::streamsize(m.col_idcs.size() * sizeof(uint64_t))))
        return false;
    if (!in.read(reinterpret_cast<char*>(m.vals.data()),
                 std::streamsize(m.vals.size() * sizeof(double))))
        return false;
    m.validate();
    out = std::move(m);
    return true;
}

} // namespace ssrsim
