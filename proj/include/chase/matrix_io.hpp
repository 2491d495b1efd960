#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "chase/dense_matrix.hpp"

namespace chase::io
{

/// CHSM binary layout: "CHSM" | u32 version | u64 rows | u64 cols | rows*cols
/// little-endian IEEE-754 doubles in column-major order.
inline constexpr char kMagic[4] = {'C', 'H', 'S', 'M'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 24;

void write_matrix(std::ostream& os, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& is);

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix(const std::filesystem::path& path);

} // namespace chase::io
