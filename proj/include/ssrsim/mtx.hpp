#pragma once

#include <string>

#include "ssrsim/formats.hpp"

namespace ssrsim {

struct ParseError : FormatError {
    using FormatError::FormatError;
};

// Matrix Market loader. Supported: "matrix coordinate real|integer|pattern
// general|symmetric". 1-based coordinates become 0-based, duplicates are
// summed, symmetric entries are mirrored (diagonal not doubled), pattern
// values become 1.0. Columns within each row come out sorted.
CsrMatrix load_matrix_market(const std::string& path, IndexWidth width);

// Versioned binary cache of a converted CSR image. load returns false if the
// file is absent or has a stale version tag (callers then reparse).
void save_csr_cache(const std::string& path, const CsrMatrix& m);
bool load_csr_cache(const std::string& path, CsrMatrix& out);

} // namespace ssrsim
