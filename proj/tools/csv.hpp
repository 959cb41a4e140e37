#pragma once

#include <gfista/gfista.h>

#include <string>
#include <vector>

namespace gfista_tools {

/// Column layout of a trace CSV. relative_gap is gap / gap0 where gap0 is the
/// gap at k = 0; it is left empty when gap0 is missing, zero, or not finite.
extern const char kTraceCsvHeader[];

/// Render one trace as CSV text: the exact header line, then one row per
/// record. Floats use 17 significant digits; NaN fields are left empty;
/// infinities print as "inf".
std::string trace_to_csv(const gf_trace_record* records, int n_records);

/// trace_to_csv written to a file. Raises io_error on failure.
void write_trace_csv(const std::string& path, const gf_trace_record* records,
                     int n_records);

/// Parse text produced by trace_to_csv back into records (empty fields become
/// NaN). Raises io_error on malformed input. Round-trips bit-exactly.
std::vector<gf_trace_record> parse_trace_csv(const std::string& text);

}  // namespace gfista_tools
