#include "clip/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>
#include <vector>

namespace clip {

namespace {

static_assert(std::endian::native == std::endian::little, "CLP1 I/O assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(std::string_view bytes, std::size_t offset) {
  std::uint64_t v;
  std::memcpy(&v, bytes.data() + offset, 8);
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_csv(const std::filesystem::path& p) { return p.extension() == ".csv"; }

}  // namespace

std::string encode_matrix(const Matrix& m) {
  std::string out;
  out.reserve(kMatrixHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  out.append(kMatrixMagic);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.append(reinterpret_cast<const char*>(m.data()), 8 * static_cast<std::size_t>(m.size()));
  return out;
}

Matrix decode_matrix(std::string_view bytes, const std::string& origin, bool allow_nonfinite) {
  if (bytes.size() < kMatrixHeaderBytes) {
    throw Error(ErrorKind::Format, origin + ": truncated header (" + std::to_string(bytes.size()) +
                                       " bytes, expected at least " +
                                       std::to_string(kMatrixHeaderBytes) + ")");
  }
  if (bytes.substr(0, 4) != kMatrixMagic) throw Error(ErrorKind::Format, origin + ": bad magic");
  const std::uint64_t rows = get_u64(bytes, 4);
  const std::uint64_t cols = get_u64(bytes, 12);
  if (rows == 0 || cols == 0 || rows > (1ULL << 40) || cols > (1ULL << 40) ||
      rows * cols > (1ULL << 40)) {
    throw Error(ErrorKind::Format, origin + ": implausible shape " + std::to_string(rows) + "x" +
                                       std::to_string(cols));
  }
  const std::uint64_t expected = kMatrixHeaderBytes + 8 * rows * cols;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::Format, origin + ": expected " + std::to_string(expected) +
                                       " bytes, got " + std::to_string(bytes.size()));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::memcpy(m.data(), bytes.data() + kMatrixHeaderBytes, 8 * rows * cols);
  if (!allow_nonfinite) require_finite(m, origin);
  return m;
}

Matrix parse_csv_matrix(std::string_view text, const std::string& origin, bool allow_nonfinite) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    while (true) {
      const auto comma = line.find(',');
      const std::string_view field = trim(line.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::Format, origin + ": line " + std::to_string(line_no) +
                                           ": cannot parse '" + std::string(field) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Format, origin + ": line " + std::to_string(line_no) + " has " +
                                         std::to_string(row.size()) + " fields, expected " +
                                         std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Format, origin + ": empty CSV");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  if (!allow_nonfinite) require_finite(m, origin);
  return m;
}

std::string format_csv_matrix(const Matrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

Matrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return is_csv(path) ? parse_csv_matrix(bytes, path.string()) : decode_matrix(bytes, path.string());
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  require_finite(m, path.string());
  write_file_atomic(path, is_csv(path) ? format_csv_matrix(m) : encode_matrix(m));
}

}  // namespace clip
