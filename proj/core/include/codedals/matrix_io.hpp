#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "codedals/matrix.hpp"

namespace codedals {

// Text format: a "# rows cols" header line, then one comma-separated row per
// line. Values are written with 17 significant digits so a CSV round trip is
// exact.
void write_csv(std::ostream& out, const Matrix& m);
Matrix read_csv(std::istream& in);

// Binary format: "CALS", u64 rows, u64 cols, rows*cols f64, all little-endian.
void write_binary(std::ostream& out, const Matrix& m);
Matrix read_binary(std::istream& in);

void write_u32_le(std::ostream& out, std::uint32_t v);
void write_u64_le(std::ostream& out, std::uint64_t v);
void write_f64_le(std::ostream& out, double v);
std::uint32_t read_u32_le(std::istream& in);
std::uint64_t read_u64_le(std::istream& in);
double read_f64_le(std::istream& in);

/// Picks the format from the extension: ".bin" is binary, anything else CSV.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace codedals
