#include "fairlens/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <boost/crc.hpp>

namespace fairlens {
namespace io {
namespace {

namespace fs = std::filesystem;

class ByteWriter {
 public:
  void Raw(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  template <typename T>
  void Int(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(
          static_cast<std::uint64_t>(value) >> (8 * i)));
    }
  }
  void F32(float v) { Int(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { Int(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void Need(std::size_t size) const {
    if (pos_ + size > bytes_.size()) {
      throw Error(ErrorCode::kTruncationError,
                  "unexpected end of data at byte " + std::to_string(pos_));
    }
  }
  template <typename T>
  T Int() {
    Need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  float F32() { return std::bit_cast<float>(Int<std::uint32_t>()); }
  double F64() { return std::bit_cast<double>(Int<std::uint64_t>()); }
  std::span<const std::uint8_t> Take(std::size_t size) {
    Need(size);
    auto out = bytes_.subspan(pos_, size);
    pos_ += size;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

bool HasTextExtension(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" || ext == ".txt";
}

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(Trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

double ParseDouble(const std::string& field, const std::string& where) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kFormatError,
                "cannot parse number '" + field + "' at " + where);
  }
  return v;
}

long long ParseInteger(const std::string& field, const std::string& where) {
  long long v = 0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw Error(ErrorCode::kSchemaError,
                "cannot parse integer '" + field + "' at " + where);
  }
  return v;
}

void EncodeMiClip(const mitigation::MiClipTransform& t, ByteWriter& w) {
  w.Int(static_cast<std::uint32_t>(t.input_dims()));
  for (bool keep : t.keep_mask()) w.Int(static_cast<std::uint8_t>(keep ? 1 : 0));
  for (double s : t.mi_scores()) w.F64(s);
}

void EncodeFairPca(const mitigation::FairPcaTransform& t, ByteWriter& w) {
  const auto& diag = t.diagnostics();
  w.Int(static_cast<std::uint32_t>(t.input_dims()));
  w.Int(static_cast<std::uint32_t>(t.target_dim()));
  w.Int(static_cast<std::int32_t>(diag.constraint_count));
  w.Int(static_cast<std::int32_t>(diag.constraint_rank));
  w.F64(diag.constraint_residual);
  w.F64(diag.retained_variance);
  for (Eigen::Index i = 0; i < t.mean().size(); ++i) w.F64(t.mean()[i]);
  for (Eigen::Index r = 0; r < t.projection().rows(); ++r) {
    for (Eigen::Index c = 0; c < t.projection().cols(); ++c) {
      w.F64(t.projection()(r, c));
    }
  }
}

mitigation::MiClipTransform DecodeMiClip(ByteReader& r) {
  const auto d = r.Int<std::uint32_t>();
  std::vector<bool> mask(d);
  for (std::uint32_t i = 0; i < d; ++i) {
    const auto b = r.Int<std::uint8_t>();
    if (b > 1) throw Error(ErrorCode::kFormatError, "bad mask byte");
    mask[i] = b == 1;
  }
  std::vector<double> scores(d);
  for (auto& s : scores) s = r.F64();
  return mitigation::MiClipTransform(std::move(mask), std::move(scores));
}

mitigation::FairPcaTransform DecodeFairPca(ByteReader& r) {
  const auto d = r.Int<std::uint32_t>();
  const auto rank = r.Int<std::uint32_t>();
  mitigation::FairPcaDiagnostics diag;
  diag.constraint_count = r.Int<std::int32_t>();
  diag.constraint_rank = r.Int<std::int32_t>();
  diag.dropped_constraints = diag.constraint_count - diag.constraint_rank;
  diag.constraint_residual = r.F64();
  diag.retained_variance = r.F64();
  r.Need(static_cast<std::size_t>(d) * (1 + rank) * 8);
  Vector mean(d);
  for (std::uint32_t i = 0; i < d; ++i) mean[i] = r.F64();
  Eigen::MatrixXd projection(d, rank);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t c = 0; c < rank; ++c) projection(i, c) = r.F64();
  }
  return mitigation::FairPcaTransform(std::move(mean), std::move(projection),
                                      std::move(diag));
}

}  // namespace

std::vector<std::uint8_t> ReadFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError,
                "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string ReadFileText(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void WriteFileBytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError,
                  "cannot write " + path.string() + ": " + std::strerror(errno));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      throw Error(ErrorCode::kIoError,
                  "write failed for " + path.string() + ": " +
                      std::strerror(errno));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::kIoError,
                "cannot write " + path.string() + ": " + ec.message());
  }
}

void WriteFileText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                 text.size()));
}

std::vector<std::uint8_t> EncodeEmbeddings(const EmbeddingMatrix& matrix) {
  ByteWriter w;
  w.Raw(kEmbeddingMagic, 8);
  w.Int(kEmbeddingVersion);
  w.Int(static_cast<std::uint64_t>(matrix.rows()));
  w.Int(static_cast<std::uint32_t>(matrix.dims()));
  w.Int(kDtypeFloat32);
  const Matrix& v = matrix.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      w.F32(static_cast<float>(v(i, j)));
    }
  }
  return std::move(w.bytes());
}

EmbeddingMatrix DecodeEmbeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kEmbeddingMagic, 8) != 0) {
    throw Error(ErrorCode::kFormatError, "missing FLENSEMB magic");
  }
  ByteReader r(bytes);
  r.Take(8);
  const auto version = r.Int<std::uint16_t>();
  if (version != kEmbeddingVersion) {
    throw Error(ErrorCode::kVersionError,
                "unsupported embedding version " + std::to_string(version));
  }
  const auto n = r.Int<std::uint64_t>();
  const auto d = r.Int<std::uint32_t>();
  const auto dtype = r.Int<std::uint8_t>();
  if (dtype != kDtypeFloat32) {
    throw Error(ErrorCode::kFormatError,
                "unsupported dtype code " + std::to_string(dtype));
  }
  if (n == 0 || d == 0) {
    throw Error(ErrorCode::kFormatError, "empty embedding matrix");
  }
  const std::uint64_t payload = n * static_cast<std::uint64_t>(d) * 4;
  if (r.remaining() < payload) {
    throw Error(ErrorCode::kTruncationError,
                "payload has " + std::to_string(r.remaining()) +
                    " bytes, header promises " + std::to_string(payload));
  }
  if (r.remaining() > payload) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after payload");
  }
  Matrix m(n, d);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = r.F32();
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kDataError,
                    "non-finite value at row " + std::to_string(i) + ", col " +
                        std::to_string(j));
      }
      m(i, j) = v;
    }
  }
  return EmbeddingMatrix(std::move(m));
}

EmbeddingMatrix ReadEmbeddingsBinary(const fs::path& path) {
  return DecodeEmbeddings(ReadFileBytes(path));
}

EmbeddingMatrix ReadEmbeddingsText(const fs::path& path) {
  const auto lines = Lines(ReadFileText(path));
  if (lines.empty()) {
    throw Error(ErrorCode::kFormatError, path.string() + " has no rows");
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = SplitFields(lines[i]);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      const double v = ParseDouble(f, path.string() + " line " + std::to_string(i + 1));
      const float narrowed = static_cast<float>(v);
      if (!std::isfinite(narrowed)) {
        throw Error(ErrorCode::kDataError,
                    "non-finite value on line " + std::to_string(i + 1));
      }
      row.push_back(narrowed);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::kFormatError,
                  "line " + std::to_string(i + 1) + " has " +
                      std::to_string(row.size()) + " values, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  return EmbeddingMatrix::FromRows(rows);
}

void WriteEmbeddingsBinary(const EmbeddingMatrix& matrix, const fs::path& path) {
  WriteFileBytes(path, EncodeEmbeddings(matrix));
}

void WriteEmbeddingsText(const EmbeddingMatrix& matrix, const fs::path& path) {
  std::string out;
  char buf[64];
  const Matrix& v = matrix.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof(buf),
                                     static_cast<float>(v(i, j)));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  WriteFileText(path, out);
}

EmbeddingMatrix ReadEmbeddings(const fs::path& path) {
  return HasTextExtension(path) ? ReadEmbeddingsText(path)
                                : ReadEmbeddingsBinary(path);
}

void WriteEmbeddings(const EmbeddingMatrix& matrix, const fs::path& path) {
  if (HasTextExtension(path)) {
    WriteEmbeddingsText(matrix, path);
  } else {
    WriteEmbeddingsBinary(matrix, path);
  }
}

LabelTable::LabelTable(std::vector<std::string> columns,
                       std::vector<std::vector<std::string>> cells)
    : columns_(std::move(columns)), cells_(std::move(cells)) {
  if (columns_.size() != cells_.size()) {
    throw Error(ErrorCode::kSchemaError, "column/cell count mismatch");
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].empty() || columns_[c] == "item_id") {
      throw Error(ErrorCode::kSchemaError,
                  "invalid attribute column name '" + columns_[c] + "'");
    }
    if (!index_.emplace(columns_[c], c).second) {
      throw Error(ErrorCode::kSchemaError,
                  "duplicate column '" + columns_[c] + "'");
    }
    if (cells_[c].size() != cells_.front().size()) {
      throw Error(ErrorCode::kSchemaError, "columns differ in length");
    }
    for (const auto& cell : cells_[c]) {
      if (cell.empty()) {
        throw Error(ErrorCode::kSchemaError,
                    "missing value in column '" + columns_[c] + "'");
      }
    }
  }
}

LabelTable LabelTable::Parse(const std::string& text) {
  const auto lines = Lines(text);
  if (lines.empty()) throw Error(ErrorCode::kSchemaError, "empty label file");
  const auto header = SplitFields(lines.front());
  if (header.empty() || header.front() != "item_id") {
    throw Error(ErrorCode::kSchemaError, "first column must be item_id");
  }
  const std::vector<std::string> columns(header.begin() + 1, header.end());
  std::vector<std::vector<std::string>> cells(columns.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = SplitFields(lines[r]);
    const std::string where = "label row " + std::to_string(r);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kSchemaError,
                  where + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    const long long id = ParseInteger(fields.front(), where);
    if (id != static_cast<long long>(r - 1)) {
      throw Error(ErrorCode::kSchemaError,
                  where + ": item_id " + std::to_string(id) + ", expected " +
                      std::to_string(r - 1));
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      cells[c].push_back(fields[c + 1]);
    }
  }
  if (lines.size() < 2) throw Error(ErrorCode::kSchemaError, "no label rows");
  return LabelTable(columns, std::move(cells));
}

LabelTable LabelTable::Read(const fs::path& path) {
  return Parse(ReadFileText(path));
}

bool LabelTable::HasColumn(const std::string& name) const {
  return index_.count(name) != 0;
}

const std::vector<std::string>& LabelTable::Column(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kSchemaError, "no label column '" + name + "'");
  }
  return cells_[it->second];
}

GroupLabels LabelTable::Groups(const std::string& name) const {
  const auto& cells = Column(name);
  std::vector<std::string> names;
  std::unordered_map<std::string, int> ids;
  std::vector<int> labels;
  labels.reserve(cells.size());
  for (const auto& cell : cells) {
    const auto [it, inserted] = ids.emplace(cell, static_cast<int>(names.size()));
    if (inserted) names.push_back(cell);
    labels.push_back(it->second);
  }
  const int p = static_cast<int>(names.size());
  if (p < 2) {
    throw Error(ErrorCode::kDataError,
                "column '" + name + "' has fewer than 2 categories");
  }
  return GroupLabels(std::move(labels), p, std::move(names));
}

BinaryLabels LabelTable::Binary(const std::string& name) const {
  const auto& cells = Column(name);
  std::vector<int> values;
  values.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c == "0" || c == "-1") {
      values.push_back(-1);
    } else if (c == "1" || c == "+1") {
      values.push_back(1);
    } else {
      throw Error(ErrorCode::kDataError,
                  "column '" + name + "' row " + std::to_string(i) +
                      ": '" + c + "' is not a binary label");
    }
  }
  return BinaryLabels(std::move(values));
}

std::vector<Split> LabelTable::Splits(const std::string& name) const {
  const auto& cells = Column(name);
  std::vector<Split> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] == "train") {
      out.push_back(Split::kTrain);
    } else if (cells[i] == "test") {
      out.push_back(Split::kTest);
    } else {
      throw Error(ErrorCode::kDataError,
                  "split value '" + cells[i] + "' at row " + std::to_string(i) +
                      " is neither train nor test");
    }
  }
  return out;
}

std::string LabelTable::ToText() const {
  std::string out = "item_id";
  for (const auto& c : columns_) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < rows(); ++r) {
    out += std::to_string(r);
    for (const auto& col : cells_) out += "," + col[r];
    out += "\n";
  }
  return out;
}

void LabelTable::Write(const fs::path& path) const {
  WriteFileText(path, ToText());
}

GroupLabels ReadGroupLabels(const fs::path& path, const std::string& attribute) {
  return LabelTable::Read(path).Groups(attribute);
}

BinaryLabels ReadBinaryLabels(const fs::path& path, const std::string& attribute) {
  return LabelTable::Read(path).Binary(attribute);
}

std::vector<std::uint8_t> SerializeTransform(
    const mitigation::FittedTransform& transform) {
  ByteWriter payload;
  std::uint8_t method = 0;
  if (const auto* clip = std::get_if<mitigation::MiClipTransform>(&transform.map)) {
    method = 1;
    EncodeMiClip(*clip, payload);
  } else {
    method = 2;
    EncodeFairPca(std::get<mitigation::FairPcaTransform>(transform.map), payload);
  }
  ByteWriter w;
  w.Raw(kTransformMagic, 8);
  w.Int(kTransformVersion);
  w.Int(method);
  w.Int(static_cast<std::uint8_t>(transform.source));
  w.Int(static_cast<std::uint64_t>(payload.bytes().size()));
  w.Raw(payload.bytes().data(), payload.bytes().size());
  w.Int(Crc32(w.bytes()));
  return std::move(w.bytes());
}

mitigation::FittedTransform DeserializeTransform(
    std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kTransformMagic, 8) != 0) {
    throw Error(ErrorCode::kFormatError, "missing FLENSXFM magic");
  }
  ByteReader r(bytes);
  r.Take(8);
  const auto version = r.Int<std::uint16_t>();
  if (version != kTransformVersion) {
    throw Error(ErrorCode::kVersionError,
                "unsupported transform version " + std::to_string(version));
  }
  const auto method = r.Int<std::uint8_t>();
  const auto source = r.Int<std::uint8_t>();
  const auto length = r.Int<std::uint64_t>();
  if (r.remaining() != length + 4) {
    throw Error(ErrorCode::kTruncationError,
                "transform payload length does not match the file size");
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (Crc32(body) != tail.Int<std::uint32_t>()) {
    throw Error(ErrorCode::kChecksumError, "transform checksum mismatch");
  }
  if (source > 1) throw Error(ErrorCode::kFormatError, "bad attribute source");
  ByteReader payload(r.Take(length));
  const auto attribute = static_cast<mitigation::AttributeSource>(source);
  auto decode = [&]() -> mitigation::FittedTransform {
    switch (method) {
      case 1: return {DecodeMiClip(payload), attribute};
      case 2: return {DecodeFairPca(payload), attribute};
    }
    throw Error(ErrorCode::kFormatError,
                "unknown transform method " + std::to_string(method));
  };
  mitigation::FittedTransform out = decode();
  if (payload.remaining() != 0) {
    throw Error(ErrorCode::kFormatError, "trailing bytes in transform payload");
  }
  return out;
}

void WriteTransform(const mitigation::FittedTransform& transform,
                    const fs::path& path) {
  WriteFileBytes(path, SerializeTransform(transform));
}

mitigation::FittedTransform ReadTransform(const fs::path& path) {
  return DeserializeTransform(ReadFileBytes(path));
}

std::string RenderReport(const nlohmann::json& report) {
  return report.dump(2) + "\n";
}

void WriteReport(const nlohmann::json& report, const fs::path& path) {
  WriteFileText(path, RenderReport(report));
}

nlohmann::json ReadReport(const fs::path& path) {
  try {
    return nlohmann::json::parse(ReadFileText(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kFormatError,
                "report " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace io
}  // namespace fairlens
