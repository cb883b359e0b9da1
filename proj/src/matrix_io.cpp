#include "decodekit/matrix_io.hpp"

#include "decodekit/digest.hpp"
#include "decodekit/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <unordered_map>

namespace decodekit {
namespace {

constexpr char kMagic[4] = {'R', 'D', 'M', 'X'};
constexpr std::uint32_t kBinaryVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = std::string_view(bytes_).substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated binary matrix while reading ") + what);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? MatrixFormat::Csv : MatrixFormat::Binary;
}

LabeledMatrix parse_csv(const std::string& text) {
  std::string_view all(text);
  if (all.starts_with("\xEF\xBB\xBF")) all.remove_prefix(3);

  std::vector<std::string> ids;
  std::vector<double> cells;
  std::unordered_map<std::string, std::size_t> first_seen;
  std::size_t n_fields = 0;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::size_t start = 0;
  while (start <= all.size()) {
    const auto nl = all.find('\n', start);
    const auto line = all.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? all.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    const auto fields = split_fields(line);
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (fields[f].starts_with('"')) throw FormatError("quoted fields are not supported", line_no, f + 1);
    }
    if (!header_seen) {
      if (fields[0] != "stimulus_id") {
        throw FormatError("header must start with 'stimulus_id', found '" + std::string(fields[0]) + "'", line_no, 1);
      }
      if (fields.size() < 2) throw FormatError("header declares no value columns", line_no);
      n_fields = fields.size();
      header_seen = true;
      continue;
    }
    if (fields.size() != n_fields) {
      throw FormatError("ragged row: expected " + std::to_string(n_fields) + " fields, found " +
                            std::to_string(fields.size()),
                        line_no);
    }
    std::string id(fields[0]);
    if (id.empty()) throw FormatError("empty stimulus id", line_no, 1);
    if (auto [it, inserted] = first_seen.emplace(id, line_no); !inserted) {
      throw FormatError("duplicate stimulus id '" + id + "' (first seen on row " + std::to_string(it->second) + ")",
                        line_no, 1);
    }
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto field = fields[f];
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      auto res = std::from_chars(first, last, v);
      if (field.empty() || res.ec != std::errc() || res.ptr != last) {
        throw FormatError("cannot parse '" + std::string(field) + "' as a number", line_no, f + 1);
      }
      if (!std::isfinite(v)) throw FormatError("non-finite value '" + std::string(field) + "'", line_no, f + 1);
      cells.push_back(v);
    }
    ids.push_back(std::move(id));
  }
  if (!header_seen) throw FormatError("empty file: missing header");
  if (ids.empty()) throw FormatError("no data rows");

  const auto cols = static_cast<Eigen::Index>(n_fields - 1);
  const auto rows = static_cast<Eigen::Index>(ids.size());
  Matrix values(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) values(r, c) = cells[static_cast<std::size_t>(r * cols + c)];
  return LabeledMatrix(std::move(ids), std::move(values));
}

std::string render_csv(const LabeledMatrix& m) {
  std::string out = "stimulus_id";
  for (Eigen::Index c = 0; c < m.cols(); ++c) out += ",c" + std::to_string(c + 1);
  out += '\n';
  const auto& ids = m.stimulus_ids();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += ids[r];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += ',';
      out += format_double(m.values()(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string encode_binary(const LabeledMatrix& m) {
  std::string out;
  out.reserve(24 + static_cast<std::size_t>(m.rows() * (m.cols() * 8 + 16)));
  out.append(kMagic, 4);
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (const auto& id : m.stimulus_ids()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m.values()(r, c));
  return out;
}

LabeledMatrix decode_binary(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic: not an RDMX matrix");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kBinaryVersion) throw FormatError("unsupported RDMX version " + std::to_string(version));
  const auto rows = in.get<std::uint64_t>("row count");
  const auto cols = in.get<std::uint64_t>("column count");
  if (rows == 0) throw FormatError("matrix has no rows");
  if (cols == 0) throw FormatError("matrix has no columns");
  // Each row needs at least a 4-byte id length and 8 bytes per column.
  if (rows > in.remaining() / 4 || cols > in.remaining() / 8 || rows * cols > in.remaining() / 8) {
    throw FormatError("declared shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " exceeds file size");
  }

  std::vector<std::string> ids;
  ids.reserve(rows);
  std::unordered_map<std::string, std::uint64_t> first_seen;
  for (std::uint64_t r = 0; r < rows; ++r) {
    const auto len = in.get<std::uint32_t>("id length");
    std::string id(in.take(len, "id"));
    if (id.empty()) throw FormatError("empty stimulus id", r + 1, 1);
    if (auto [it, inserted] = first_seen.emplace(id, r + 1); !inserted) {
      throw FormatError("duplicate stimulus id '" + id + "' (first seen on row " + std::to_string(it->second) + ")",
                        r + 1, 1);
    }
    ids.push_back(std::move(id));
  }
  if (in.remaining() != rows * cols * 8) {
    throw FormatError("payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                      std::to_string(rows * cols * 8));
  }
  Matrix values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c) {
      const double v = std::bit_cast<double>(in.get<std::uint64_t>("value"));
      if (!std::isfinite(v)) throw FormatError("non-finite value", r + 1, c + 1);
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return LabeledMatrix(std::move(ids), std::move(values));
}

LabeledMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == MatrixFormat::Csv ? parse_csv(bytes) : decode_binary(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string(), e);
  }
}

void save_matrix(const LabeledMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
  validate_matrix(m.stimulus_ids(), m.values());
  write_file(path, format == MatrixFormat::Csv ? render_csv(m) : encode_binary(m));
}

}  // namespace decodekit
