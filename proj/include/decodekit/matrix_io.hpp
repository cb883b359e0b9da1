#pragma once

#include "decodekit/labeled_matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace decodekit {

enum class MatrixFormat { Csv, Binary };

/// `.csv` selects Csv, anything else Binary.
MatrixFormat format_for_path(const std::filesystem::path& path);

LabeledMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
inline LabeledMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_for_path(path));
}

void save_matrix(const LabeledMatrix& m, const std::filesystem::path& path, MatrixFormat format);
inline void save_matrix(const LabeledMatrix& m, const std::filesystem::path& path) {
  save_matrix(m, path, format_for_path(path));
}

// Codecs over raw streams/strings, used by the file functions above and by
// tests that want to poke at malformed inputs without touching disk.
LabeledMatrix parse_csv(const std::string& text);
std::string render_csv(const LabeledMatrix& m);
LabeledMatrix decode_binary(const std::string& bytes);
std::string encode_binary(const LabeledMatrix& m);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace decodekit
