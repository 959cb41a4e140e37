#include "pgm.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace gfista {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset,
                             const std::string& what) {
  std::ostringstream msg;
  msg << path << ": " << what << " at byte " << offset;
  throw Error(ErrorCode::io_error, msg.str());
}

class Parser {
 public:
  Parser(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::size_t pos() const { return pos_; }
  const std::string& bytes() const { return bytes_; }

  [[noreturn]] void fail(const std::string& what) const {
    parse_fail(path_, pos_, what);
  }

  // Whitespace and '#' comments (to end of line) between header tokens.
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long next_uint(const char* what) {
    skip_separators();
    if (pos_ >= bytes_.size()) fail(std::string("missing ") + what);
    if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_])))
      fail(std::string("expected ") + what);
    long value = 0;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1000000000L) fail(std::string(what) + " out of range");
      ++pos_;
    }
    return value;
  }

  // The single whitespace byte that separates the header from binary data.
  void consume_one_space() {
    if (pos_ >= bytes_.size() ||
        !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      fail("expected whitespace before pixel data");
    ++pos_;
  }

  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarField load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, path + ": cannot open for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Parser p(buffer.str(), path);

  const std::string& bytes = p.bytes();
  if (bytes.size() < 2) p.fail("not a portable graymap");
  const char magic0 = bytes[0], magic1 = bytes[1];
  if (magic0 != 'P' || (magic1 != '2' && magic1 != '5'))
    p.fail("unsupported magic (want P2 or P5)");
  const bool binary = magic1 == '5';
  p.advance(2);

  const long cols = p.next_uint("width");
  const long rows = p.next_uint("height");
  const long maxval = p.next_uint("maxval");
  if (cols < 1 || rows < 1) p.fail("dimensions must be positive");
  if (maxval < 1 || maxval > 65535) p.fail("maxval must be in [1, 65535]");

  ScalarField u(rows, cols);
  const double scale = 1.0 / double(maxval);
  const std::size_t count = std::size_t(rows) * std::size_t(cols);

  if (binary) {
    p.consume_one_space();
    const int sample_bytes = maxval > 255 ? 2 : 1;
    if (bytes.size() - p.pos() < count * sample_bytes)
      parse_fail(path, bytes.size(), "truncated pixel data");
    const unsigned char* data =
        reinterpret_cast<const unsigned char*>(bytes.data()) + p.pos();
    for (std::size_t i = 0; i < count; ++i) {
      long v;
      if (sample_bytes == 2)
        v = (long(data[2 * i]) << 8) | long(data[2 * i + 1]);  // big-endian
      else
        v = data[i];
      if (v > maxval) parse_fail(path, p.pos() + i * sample_bytes,
                                 "sample exceeds maxval");
      u.data[Eigen::Index(i)] = double(v) * scale;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = p.next_uint("sample");
      if (v > maxval) p.fail("sample exceeds maxval");
      u.data[Eigen::Index(i)] = double(v) * scale;
    }
  }
  return u;
}

void save_pgm(const ScalarField& field, const std::string& path, int maxval) {
  if (maxval != 255 && maxval != 65535)
    throw Error(ErrorCode::invalid_argument,
                "save_pgm: maxval must be 255 or 65535");
  if (field.rows < 1 || field.cols < 1 ||
      field.data.size() != field.rows * field.cols)
    throw Error(ErrorCode::invalid_argument, "save_pgm: malformed field");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, path + ": cannot open for writing");
  out << "P5\n" << field.cols << " " << field.rows << "\n" << maxval << "\n";
  for (Eigen::Index i = 0; i < field.data.size(); ++i) {
    double v = field.data[i];
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    const long q = std::lround(v * double(maxval));  // half rounds up (v >= 0)
    if (maxval > 255) {
      const unsigned char hi = (unsigned char)((q >> 8) & 0xff);
      const unsigned char lo = (unsigned char)(q & 0xff);
      out.put(char(hi)).put(char(lo));
    } else {
      out.put(char((unsigned char)q));
    }
  }
  if (!out) throw Error(ErrorCode::io_error, path + ": write failed");
}

}  // namespace gfista
