#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace otafl {

enum class IdxErrorKind { BadMagic, Truncated, UnsupportedType };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

/// An unsigned-byte tensor in the IDX container format: two zero bytes, a
/// type code (0x08 = ubyte), a dimension count, big-endian 32-bit dimension
/// sizes, then the raw payload.
struct IdxTensor {
  std::vector<std::uint32_t> shape;
  std::vector<std::uint8_t> data;

  std::size_t element_count() const;
};

IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor);

IdxTensor read_idx_file(const std::filesystem::path& path);
void write_idx_file(const IdxTensor& tensor, const std::filesystem::path& path);

}  // namespace otafl
