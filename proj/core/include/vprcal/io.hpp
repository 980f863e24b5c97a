#pragma once

#include <filesystem>
#include <string>

namespace vprcal {

/// Whole-file read/write; both throw Error(kIoFailure) naming the path.
/// write_file creates missing parent directories.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Decimal form with 17 significant digits; parses back to the same double.
std::string format_double(double value);

}  // namespace vprcal
