#include <doctest.h>

#include "csv.hpp"
#include "pgm.hpp"

#include <gfista/types.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

using namespace gfista;
using gfista_tools::kTraceCsvHeader;
using gfista_tools::parse_trace_csv;
using gfista_tools::trace_to_csv;
using gfista_tools::write_trace_csv;

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gfista-pgm-csv-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string write_bytes(const fs::path& dir, const std::string& name,
                        const std::string& bytes) {
  fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.close();
  return p.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

std::optional<std::string> thrown_io_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::io_error);
    return std::string(e.what());
  }
  return std::nullopt;
}

gf_trace_record blank_record() {
  gf_trace_record r;
  r.k = 0;
  r.objective = kNaN;
  r.gap = kNaN;
  r.lipschitz_estimate = kNaN;
  r.tau = kNaN;
  r.t = kNaN;
  r.omega = kNaN;
  r.beta = kNaN;
  r.n_backtracks = 0;
  r.certificate_bound = kNaN;
  return r;
}

}  // namespace

TEST_CASE("ASCII graymaps parse with comments and scale by maxval") {
  TempDir dir;
  std::string path =
      write_bytes(dir.path, "a.pgm", "P2\n# comment line\n2 1 # trailing\n255\n0 255\n");
  ScalarField u = load_pgm(path);
  CHECK(u.rows == 1);
  CHECK(u.cols == 2);
  CHECK(u.at(0, 0) == 0.0);
  CHECK(u.at(0, 1) == 1.0);

  std::string half = write_bytes(dir.path, "half.pgm", "P2\n1 1\n200\n100\n");
  ScalarField v = load_pgm(half);
  CHECK(v.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("binary 16-bit samples are big-endian") {
  TempDir dir;
  std::string bytes = "P5\n2 1\n65535\n";
  const unsigned char payload[4] = {0x01, 0x00, 0xFF, 0xFF};
  bytes.append(reinterpret_cast<const char*>(payload), 4);
  std::string path = write_bytes(dir.path, "wide.pgm", bytes);
  ScalarField u = load_pgm(path);
  CHECK(u.at(0, 0) == doctest::Approx(256.0 / 65535.0).epsilon(1e-15));
  CHECK(u.at(0, 1) == 1.0);
}

TEST_CASE("save quantizes by round-half-up and emits exact bytes") {
  TempDir dir;
  ScalarField f(2, 2);
  f.data << 0.5, 1.0, 0.0, 2.0;  // 2.0 clamps to 1.0
  std::string path = (dir.path / "q.pgm").string();
  save_pgm(f, path, 255);
  std::string bytes = read_bytes(path);
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(bytes.compare(0, header.size(), header) == 0);
  const unsigned char* px =
      reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
  CHECK(px[0] == 128);  // lround(127.5) rounds the half up
  CHECK(px[1] == 255);
  CHECK(px[2] == 0);
  CHECK(px[3] == 255);
}

TEST_CASE("round-trips stay within half a quantization step") {
  TempDir dir;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  ScalarField f(9, 13);
  for (Eigen::Index i = 0; i < f.data.size(); ++i) f.data[i] = dist(rng);

  std::string p8 = (dir.path / "r8.pgm").string();
  save_pgm(f, p8, 255);
  ScalarField g8 = load_pgm(p8);
  CHECK((g8.data - f.data).lpNorm<Eigen::Infinity>() <= 0.5 / 255.0 + 1e-12);

  std::string p16 = (dir.path / "r16.pgm").string();
  save_pgm(f, p16, 65535);
  ScalarField g16 = load_pgm(p16);
  CHECK((g16.data - f.data).lpNorm<Eigen::Infinity>() <=
        0.5 / 65535.0 + 1e-12);
}

TEST_CASE("malformed graymaps fail with io_error naming a byte offset") {
  TempDir dir;

  auto msg = thrown_io_message([&] {
    load_pgm(write_bytes(dir.path, "magic.pgm", "P3\n2 1\n255\n0 0\n"));
  });
  REQUIRE(msg.has_value());
  CHECK(msg->find("byte") != std::string::npos);

  msg = thrown_io_message([&] {
    std::string bytes = "P5\n4 4\n255\n";
    bytes += "\x01\x02";  // 2 of 16 payload bytes
    load_pgm(write_bytes(dir.path, "short.pgm", bytes));
  });
  REQUIRE(msg.has_value());
  CHECK(msg->find("truncated") != std::string::npos);
  CHECK(msg->find("byte") != std::string::npos);

  msg = thrown_io_message([&] {
    load_pgm(write_bytes(dir.path, "maxval.pgm", "P2\n2 1\n0\n0 0\n"));
  });
  REQUIRE(msg.has_value());
  CHECK(msg->find("maxval") != std::string::npos);

  msg = thrown_io_message(
      [&] { load_pgm((dir.path / "does-not-exist.pgm").string()); });
  REQUIRE(msg.has_value());

  msg = thrown_io_message([&] {
    load_pgm(write_bytes(dir.path, "big.pgm", "P2\n1 1\n255\n999\n"));
  });
  REQUIRE(msg.has_value());
  CHECK(msg->find("exceeds maxval") != std::string::npos);
}

TEST_CASE("save rejects unsupported depths and malformed fields") {
  TempDir dir;
  ScalarField f(2, 2);
  std::string path = (dir.path / "bad.pgm").string();
  CHECK_THROWS_AS(save_pgm(f, path, 100), Error);

  ScalarField torn(2, 2);
  torn.data = Vector::Zero(3);  // size disagrees with rows * cols
  CHECK_THROWS_AS(save_pgm(torn, path, 255), Error);
}

TEST_CASE("trace CSV: exact header, empty NaN fields, inf spelling") {
  std::vector<gf_trace_record> recs(3, blank_record());
  recs[0].k = 0;
  recs[0].objective = 10.0;
  recs[0].gap = 2.0;
  recs[0].tau = 0.125;
  recs[0].n_backtracks = 0;
  recs[0].certificate_bound = std::numeric_limits<double>::infinity();
  recs[1].k = 1;
  recs[1].objective = 0.1 + 0.2;  // a value needing all 17 digits
  recs[1].gap = 1.0;
  recs[1].tau = 0.125;
  recs[1].t = 1.8;
  recs[1].omega = 0.97;
  recs[1].beta = 0.3;
  recs[1].n_backtracks = 2;
  recs[1].certificate_bound = 3.5;
  recs[2].k = 2;
  recs[2].objective = 9.25;
  recs[2].gap = kNaN;  // e.g. reference missing at this row
  recs[2].n_backtracks = 0;

  std::string text = trace_to_csv(recs.data(), 3);
  REQUIRE(text.rfind('\n') == text.size() - 1);

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "k,objective,gap,relative_gap,lipschitz_estimate,tau,t_k,omega_k,"
        "beta_k,n_backtracks,certificate_bound");
  CHECK(lines[0] == kTraceCsvHeader);

  // Row 0: relative_gap = 2/2 = 1, certificate prints as inf, NaN t/omega/beta
  // collapse to empty fields.
  CHECK(lines[1] == "0,10,2,1,,0.125,,,,0,inf");
  // Row 1: 0.1 + 0.2 requires the full 17 significant digits.
  CHECK(lines[2] ==
        "1,0.30000000000000004,1,0.5,,0.125,1.8,0.96999999999999997,"
        "0.29999999999999999,2,3.5");
  // Row 2: missing gap leaves gap and relative_gap empty.
  CHECK(lines[3] == "2,9.25,,,,,,,,0,");
}

TEST_CASE("trace CSV: relative gap is omitted without a finite nonzero gap0") {
  std::vector<gf_trace_record> recs(2, blank_record());
  recs[0].objective = 4.0;
  recs[1].k = 1;
  recs[1].objective = 3.0;
  recs[1].gap = 0.5;

  std::string text = trace_to_csv(recs.data(), 2);
  auto parsed = parse_trace_csv(text);
  REQUIRE(parsed.size() == 2);
  // gap0 was NaN, so even a finite later gap gets no relative column.
  std::size_t header_end = text.find('\n');
  std::string row1 = text.substr(header_end + 1);
  std::string row2 = row1.substr(row1.find('\n') + 1);
  CHECK(row2.substr(0, row2.find('\n')) == "1,3,0.5,,,,,,,0,");
}

TEST_CASE("trace CSV round-trips bit for bit") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  std::vector<gf_trace_record> recs;
  for (int k = 0; k < 20; ++k) {
    gf_trace_record r = blank_record();
    r.k = k;
    r.objective = std::exp(dist(rng));
    r.gap = k == 7 ? kNaN : std::exp(dist(rng));
    r.lipschitz_estimate = 8.0 + dist(rng);
    r.tau = 1.0 / r.lipschitz_estimate;
    r.t = 1.0 + std::abs(dist(rng));
    r.omega = 0.9;
    r.beta = dist(rng);
    r.n_backtracks = k % 3;
    r.certificate_bound =
        k == 3 ? std::numeric_limits<double>::infinity() : std::exp(dist(rng));
    recs.push_back(r);
  }
  std::string text = trace_to_csv(recs.data(), int(recs.size()));
  std::vector<gf_trace_record> parsed = parse_trace_csv(text);
  REQUIRE(parsed.size() == recs.size());
  // Re-serializing the parsed records must give the identical byte stream;
  // %.17g guarantees doubles survive the text round trip.
  CHECK(trace_to_csv(parsed.data(), int(parsed.size())) == text);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(parsed[i].k == recs[i].k);
    CHECK(parsed[i].n_backtracks == recs[i].n_backtracks);
    const bool gap_matches =
        (std::isnan(parsed[i].gap) && std::isnan(recs[i].gap)) ||
        parsed[i].gap == recs[i].gap;
    CHECK(gap_matches);
    CHECK(parsed[i].objective == recs[i].objective);
    CHECK(parsed[i].certificate_bound == recs[i].certificate_bound);
  }
}

TEST_CASE("trace CSV writer and parser fail loudly on bad input") {
  CHECK_THROWS_AS(trace_to_csv(nullptr, 1), Error);

  gf_trace_record r = blank_record();
  CHECK_THROWS_AS(trace_to_csv(&r, 0), Error);

  CHECK_THROWS_AS(parse_trace_csv("k,objective\n1,2\n"), Error);

  std::string good = trace_to_csv(&r, 1);
  std::string bad = good;
  bad += "1,abc,,,,,,,,0,\n";
  CHECK_THROWS_AS(parse_trace_csv(bad), Error);

  TempDir dir;
  std::string path = (dir.path / "trace.csv").string();
  write_trace_csv(path, &r, 1);
  std::string text = read_bytes(path);
  CHECK(text == good);
  CHECK_THROWS_AS(write_trace_csv((dir.path / "nope" / "x.csv").string(), &r, 1),
                  Error);
}
