#include "codedals/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "codedals/error.hpp"

namespace codedals {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'A', 'L', 'S'};
// Upper bound on rows*cols accepted from a binary header (2^31 doubles).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view token, std::size_t line_no) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
    throw IoError(fmt::format("line {}: invalid number '{}'", line_no, token));
  }
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const Matrix& m) {
  std::string buf = fmt::format("# {} {}\n", m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) buf.push_back(',');
      fmt::format_to(std::back_inserter(buf), "{:.17g}", row[c]);
    }
    buf.push_back('\n');
  }
  out << buf;
}

Matrix read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() != '#') {
      throw IoError(fmt::format("line {}: expected '# rows cols' header", line_no));
    }
    t.remove_prefix(1);
    t = trim(t);
    const auto space = t.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw IoError("malformed CSV header");
    }
    const auto rs = trim(t.substr(0, space));
    const auto cs = trim(t.substr(space + 1));
    auto r1 = std::from_chars(rs.data(), rs.data() + rs.size(), rows);
    auto r2 = std::from_chars(cs.data(), cs.data() + cs.size(), cols);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != rs.data() + rs.size() ||
        r2.ptr != cs.data() + cs.size()) {
      throw IoError("malformed CSV header");
    }
    break;
  }
  if (rows == 0 || cols == 0) {
    throw IoError("CSV header missing or has zero dimension");
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::size_t read_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (read_rows == rows) {
      throw IoError(fmt::format("line {}: more than {} rows", line_no, rows));
    }
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      data.push_back(parse_double(t.substr(start, comma - start), line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != cols) {
      throw IoError(fmt::format("line {}: expected {} values, got {}", line_no, cols, count));
    }
    ++read_rows;
  }
  if (read_rows != rows) {
    throw IoError(fmt::format("expected {} rows, got {}", rows, read_rows));
  }
  return Matrix(rows, cols, std::move(data));
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), b.size());
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), b.size());
}

void write_f64_le(std::ostream& out, double v) { write_u64_le(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t read_u32_le(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) {
    throw IoError("unexpected end of binary stream");
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t read_u64_le(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) {
    throw IoError("unexpected end of binary stream");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double read_f64_le(std::istream& in) { return std::bit_cast<double>(read_u64_le(in)); }

void write_binary(std::ostream& out, const Matrix& m) {
  out.write(kMagic.data(), kMagic.size());
  write_u64_le(out, m.rows());
  write_u64_le(out, m.cols());
  for (double v : m.data()) write_f64_le(out, v);
}

Matrix read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("bad magic: not a CALS matrix");
  }
  const auto rows = read_u64_le(in);
  const auto cols = read_u64_le(in);
  if (rows == 0 || cols == 0 || rows > kMaxElements || cols > kMaxElements / rows) {
    throw IoError(fmt::format("implausible binary matrix header {}x{}", rows, cols));
  }
  std::vector<double> data(rows * cols);
  for (double& v : data) v = read_f64_le(in);
  return Matrix(rows, cols, std::move(data));
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  const bool binary = path.extension() == ".bin";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw IoError(fmt::format("cannot open {} for writing", path.string()));
  }
  binary ? write_binary(out, m) : write_csv(out, m);
  if (!out) {
    throw IoError(fmt::format("write to {} failed", path.string()));
  }
}

Matrix load_matrix(const std::filesystem::path& path) {
  const bool binary = path.extension() == ".bin";
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw IoError(fmt::format("cannot open {}", path.string()));
  }
  return binary ? read_binary(in) : read_csv(in);
}

}  // namespace codedals
