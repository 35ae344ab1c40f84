#ifndef FAIRLENS_IO_HPP_
#define FAIRLENS_IO_HPP_

// On-disk formats.
//
// Embeddings (binary, little-endian):
//   offset  0  8 bytes  magic "FLENSEMB"
//   offset  8  u16      version (1)
//   offset 10  u64      n (rows)
//   offset 18  u32      d (dims)
//   offset 22  u8       dtype (1 = float32)
//   offset 23  n*d*4    row-major float32 payload, nothing after it
//
// Embeddings (text): one comma-separated row per item, selected by a .csv or
// .txt extension. Values are narrowed to float32 like the binary form.
//
// Labels: comma-separated text with a header row. The first column is
// item_id (dense 0..n-1, increasing); every other column is an attribute.
//
// Transforms (binary, little-endian):
//   "FLENSXFM", u16 version, u8 method (1 miclip, 2 fairpca), u8 attribute
//   source, u64 payload length, payload, u32 CRC-32 of all preceding bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairlens/core.hpp"
#include "fairlens/mitigation.hpp"
#include "json.hpp"

namespace fairlens {
namespace io {

inline constexpr char kEmbeddingMagic[] = "FLENSEMB";
inline constexpr char kTransformMagic[] = "FLENSXFM";
inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::uint16_t kTransformVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 23;

// Binary unless the extension is .csv or .txt.
EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path);
void WriteEmbeddings(const EmbeddingMatrix& matrix,
                     const std::filesystem::path& path);

EmbeddingMatrix ReadEmbeddingsBinary(const std::filesystem::path& path);
EmbeddingMatrix ReadEmbeddingsText(const std::filesystem::path& path);
void WriteEmbeddingsBinary(const EmbeddingMatrix& matrix,
                           const std::filesystem::path& path);
void WriteEmbeddingsText(const EmbeddingMatrix& matrix,
                         const std::filesystem::path& path);

std::vector<std::uint8_t> EncodeEmbeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix DecodeEmbeddings(std::span<const std::uint8_t> bytes);

class LabelTable {
 public:
  static LabelTable Read(const std::filesystem::path& path);
  static LabelTable Parse(const std::string& text);

  LabelTable(std::vector<std::string> columns,
             std::vector<std::vector<std::string>> cells);

  std::size_t rows() const { return cells_.empty() ? 0 : cells_.front().size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  bool HasColumn(const std::string& name) const;

  // Raw cells; throws SchemaError for a missing column.
  const std::vector<std::string>& Column(const std::string& name) const;

  // Categories mapped to dense indices in first-appearance order; the
  // category strings become the group names.
  GroupLabels Groups(const std::string& name) const;
  // Accepts 0/1 and -1/+1.
  BinaryLabels Binary(const std::string& name) const;
  // Values "train" / "test".
  std::vector<Split> Splits(const std::string& name = "split") const;

  std::string ToText() const;
  void Write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;                // attribute columns
  std::vector<std::vector<std::string>> cells_;     // per column
  std::unordered_map<std::string, std::size_t> index_;
};

GroupLabels ReadGroupLabels(const std::filesystem::path& path,
                            const std::string& attribute);
BinaryLabels ReadBinaryLabels(const std::filesystem::path& path,
                              const std::string& attribute);

std::vector<std::uint8_t> SerializeTransform(
    const mitigation::FittedTransform& transform);
mitigation::FittedTransform DeserializeTransform(
    std::span<const std::uint8_t> bytes);
void WriteTransform(const mitigation::FittedTransform& transform,
                    const std::filesystem::path& path);
mitigation::FittedTransform ReadTransform(const std::filesystem::path& path);

// Reports are pretty-printed JSON with a trailing newline.
std::string RenderReport(const nlohmann::json& report);
void WriteReport(const nlohmann::json& report,
                 const std::filesystem::path& path);
nlohmann::json ReadReport(const std::filesystem::path& path);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
std::string ReadFileText(const std::filesystem::path& path);
// Writes through a sibling temporary file and renames it into place.
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes);
void WriteFileText(const std::filesystem::path& path, const std::string& text);

}  // namespace io
}  // namespace fairlens

#endif  // FAIRLENS_IO_HPP_
