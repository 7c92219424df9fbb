#include "otafl/idx.hpp"

#include <fstream>

namespace otafl {

std::size_t IdxTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw IdxError(IdxErrorKind::Truncated, "idx: input shorter than the 4-byte magic");
  }
  if (bytes[0] != 0 || bytes[1] != 0) {
    throw IdxError(IdxErrorKind::BadMagic, "idx: first two magic bytes must be zero");
  }
  const std::uint8_t type_code = bytes[2];
  if (type_code != 0x08) {
    throw IdxError(IdxErrorKind::UnsupportedType,
                   "idx: unsupported type code " + std::to_string(type_code) +
                       " (only 0x08 unsigned byte is supported)");
  }
  const std::size_t ndim = bytes[3];
  if (ndim == 0) {
    throw IdxError(IdxErrorKind::BadMagic, "idx: zero-dimensional tensor");
  }
  const std::size_t header_size = 4 + 4 * ndim;
  if (bytes.size() < header_size) {
    throw IdxError(IdxErrorKind::Truncated, "idx: truncated dimension table");
  }

  IdxTensor t;
  t.shape.reserve(ndim);
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::size_t off = 4 + 4 * i;
    const std::uint32_t dim = (std::uint32_t{bytes[off]} << 24) |
                              (std::uint32_t{bytes[off + 1]} << 16) |
                              (std::uint32_t{bytes[off + 2]} << 8) |
                              std::uint32_t{bytes[off + 3]};
    t.shape.push_back(dim);
    total *= dim;
  }
  if (bytes.size() - header_size < total) {
    throw IdxError(IdxErrorKind::Truncated,
                   "idx: payload has " + std::to_string(bytes.size() - header_size) +
                       " bytes, header promises " + std::to_string(total));
  }
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header_size),
                bytes.begin() + static_cast<std::ptrdiff_t>(header_size + total));
  return t;
}

std::vector<std::uint8_t> serialize_idx(const IdxTensor& tensor) {
  if (tensor.shape.empty() || tensor.shape.size() > 255) {
    throw std::invalid_argument("idx: dimension count must be in [1, 255]");
  }
  if (tensor.element_count() != tensor.data.size()) {
    throw std::invalid_argument("idx: data length does not match the shape product");
  }
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * tensor.shape.size() + tensor.data.size());
  out.push_back(0);
  out.push_back(0);
  out.push_back(0x08);
  out.push_back(static_cast<std::uint8_t>(tensor.shape.size()));
  for (std::uint32_t dim : tensor.shape) {
    out.push_back(static_cast<std::uint8_t>(dim >> 24));
    out.push_back(static_cast<std::uint8_t>(dim >> 16));
    out.push_back(static_cast<std::uint8_t>(dim >> 8));
    out.push_back(static_cast<std::uint8_t>(dim));
  }
  out.insert(out.end(), tensor.data.begin(), tensor.data.end());
  return out;
}

IdxTensor read_idx_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("idx: cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

void write_idx_file(const IdxTensor& tensor, const std::filesystem::path& path) {
  const auto bytes = serialize_idx(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("idx: cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("idx: short write to " + path.string());
  }
}

}  // namespace otafl
