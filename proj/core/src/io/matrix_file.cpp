#include "ntfa/io/matrix_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "ntfa/error.hpp"

namespace ntfa::io {

namespace {

constexpr char kMagic[4] = {'N', 'T', 'F', 'A'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value = static_cast<T>(value | (static_cast<T>(in[offset + i]) << (8 * i)));
  }
  return value;
}

std::string at(const std::string& source, std::size_t offset) {
  return source + " at byte " + std::to_string(offset);
}

}  // namespace

std::vector<std::uint8_t> encode_matrix(const Tensor& matrix) {
  if (matrix.rank() != 2) throw DimensionError("matrix file: only rank-2 tensors are stored");
  if (matrix.rows() > std::numeric_limits<std::uint32_t>::max() ||
      matrix.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError("matrix file: dimensions exceed 32 bits");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(kMatrixHeaderBytes + 4 * matrix.size());
  put_le<std::uint16_t>(out, kMatrixFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.cols()));
  for (double x : matrix.values()) {
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  }
  return out;
}

Tensor decode_matrix(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  if (bytes.size() < 4) throw FormatError("truncated header in " + at(source, bytes.size()));
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic in " + at(source, 0));
  if (bytes.size() < kMatrixHeaderBytes) {
    throw FormatError("truncated header in " + at(source, bytes.size()));
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kMatrixFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " in " + at(source, 4));
  }
  const std::size_t rows = get_le<std::uint32_t>(bytes, 6);
  const std::size_t cols = get_le<std::uint32_t>(bytes, 10);
  const std::size_t expected = kMatrixHeaderBytes + 4 * rows * cols;
  if (bytes.size() < expected) {
    throw FormatError("truncated payload in " + at(source, bytes.size()) + " (expected " +
                      std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) throw FormatError("trailing bytes in " + at(source, expected));
  Tensor out({rows, cols}, 0.0);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    out[i] = static_cast<double>(
        std::bit_cast<float>(get_le<std::uint32_t>(bytes, kMatrixHeaderBytes + 4 * i)));
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const Tensor& matrix) {
  const std::vector<std::uint8_t> bytes = encode_matrix(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

Tensor read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_matrix(bytes, path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace ntfa::io
