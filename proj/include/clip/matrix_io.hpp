#pragma once

#include "clip/matrix.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace clip {

/// CLP1 binary layout: "CLP1", rows (u64 LE), cols (u64 LE), then
/// rows*cols f64 LE values in row-major order.
inline constexpr std::string_view kMatrixMagic = "CLP1";
inline constexpr std::size_t kMatrixHeaderBytes = 20;

std::string encode_matrix(const Matrix& m);
/// Non-finite entries are rejected unless allow_nonfinite is set.
Matrix decode_matrix(std::string_view bytes, const std::string& origin = "<memory>",
                     bool allow_nonfinite = false);

/// Reads CLP1, or headerless comma-separated text when the extension is .csv.
Matrix read_matrix(const std::filesystem::path& path);
/// Writes CLP1, or CSV when the extension is .csv. Atomic (temp file + rename).
void write_matrix(const std::filesystem::path& path, const Matrix& m);

Matrix parse_csv_matrix(std::string_view text, const std::string& origin = "<memory>",
                        bool allow_nonfinite = false);
std::string format_csv_matrix(const Matrix& m);

/// Atomically replaces `path` with `contents`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace clip
