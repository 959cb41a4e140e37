#include "csv.hpp"

#include <gfista/types.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace gfista_tools {

const char kTraceCsvHeader[] =
    "k,objective,gap,relative_gap,lipschitz_estimate,tau,t_k,omega_k,beta_k,"
    "n_backtracks,certificate_bound";

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append_double(std::string* out, double v) {
  if (std::isnan(v)) return;  // missing value: empty field
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  *out += buf;
}

double parse_double(const std::string& field, int line,
                    const std::string& what) {
  if (field.empty()) return kNaN;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    std::ostringstream msg;
    msg << "trace CSV line " << line << ": bad " << what << " '" << field
        << "'";
    throw gfista::Error(gfista::ErrorCode::io_error, msg.str());
  }
  return v;
}

long parse_int(const std::string& field, int line, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size()) {
    std::ostringstream msg;
    msg << "trace CSV line " << line << ": bad " << what << " '" << field
        << "'";
    throw gfista::Error(gfista::ErrorCode::io_error, msg.str());
  }
  return v;
}

}  // namespace

std::string trace_to_csv(const gf_trace_record* records, int n_records) {
  if (!records || n_records < 1)
    throw gfista::Error(gfista::ErrorCode::invalid_argument,
                        "trace_to_csv: need at least one record");
  const double gap0 = records[0].gap;
  const bool have_rel = std::isfinite(gap0) && gap0 != 0.0;
  std::string out = kTraceCsvHeader;
  out += '\n';
  for (int i = 0; i < n_records; ++i) {
    const gf_trace_record& r = records[i];
    out += std::to_string(r.k);
    out += ',';
    append_double(&out, r.objective);
    out += ',';
    append_double(&out, r.gap);
    out += ',';
    append_double(&out, have_rel ? r.gap / gap0 : kNaN);
    out += ',';
    append_double(&out, r.lipschitz_estimate);
    out += ',';
    append_double(&out, r.tau);
    out += ',';
    append_double(&out, r.t);
    out += ',';
    append_double(&out, r.omega);
    out += ',';
    append_double(&out, r.beta);
    out += ',';
    out += std::to_string(r.n_backtracks);
    out += ',';
    append_double(&out, r.certificate_bound);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const gf_trace_record* records,
                     int n_records) {
  const std::string text = trace_to_csv(records, n_records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw gfista::Error(gfista::ErrorCode::io_error,
                        path + ": cannot open for writing");
  out << text;
  if (!out)
    throw gfista::Error(gfista::ErrorCode::io_error, path + ": write failed");
}

std::vector<gf_trace_record> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader)
    throw gfista::Error(gfista::ErrorCode::io_error,
                        "trace CSV: unexpected header");
  std::vector<gf_trace_record> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 11) {
      std::ostringstream msg;
      msg << "trace CSV line " << line_no << ": expected 11 fields, got "
          << fields.size();
      throw gfista::Error(gfista::ErrorCode::io_error, msg.str());
    }
    gf_trace_record r;
    r.k = int32_t(parse_int(fields[0], line_no, "k"));
    r.objective = parse_double(fields[1], line_no, "objective");
    r.gap = parse_double(fields[2], line_no, "gap");
    // fields[3] (relative_gap) is derived; parsed for completeness but the
    // record has no slot for it.
    parse_double(fields[3], line_no, "relative_gap");
    r.lipschitz_estimate =
        parse_double(fields[4], line_no, "lipschitz_estimate");
    r.tau = parse_double(fields[5], line_no, "tau");
    r.t = parse_double(fields[6], line_no, "t_k");
    r.omega = parse_double(fields[7], line_no, "omega_k");
    r.beta = parse_double(fields[8], line_no, "beta_k");
    r.n_backtracks = int32_t(parse_int(fields[9], line_no, "n_backtracks"));
    r.certificate_bound =
        parse_double(fields[10], line_no, "certificate_bound");
    records.push_back(r);
  }
  return records;
}

}  // namespace gfista_tools
