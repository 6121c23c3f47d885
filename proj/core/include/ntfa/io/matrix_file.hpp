#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ntfa/diff/tensor.hpp"

namespace ntfa::io {

using diff::Tensor;

inline constexpr std::uint16_t kMatrixFormatVersion = 1;
/// "NTFA" magic (4 bytes), version (u16), rows (u32), cols (u32).
inline constexpr std::size_t kMatrixHeaderBytes = 14;

/// Encodes a rank-2 tensor as little-endian 32-bit floats behind the header.
std::vector<std::uint8_t> encode_matrix(const Tensor& matrix);

/// Decodes an encoded matrix.  Throws FormatError naming `source` and the
/// byte offset of the first problem.
Tensor decode_matrix(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");

void write_matrix(const std::filesystem::path& path, const Tensor& matrix);
Tensor read_matrix(const std::filesystem::path& path);

/// Whole-file helpers shared by the other writers.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ntfa::io
