#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace vprcal::cli {

/// Raised when an output path would land outside the output directory.
class PathEscape : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves `path` against `out_dir`. Relative paths are taken below
/// `out_dir`; absolute ones must already lie inside it.
std::filesystem::path resolve_output(const std::filesystem::path& out_dir,
                                     const std::filesystem::path& path);

}  // namespace vprcal::cli
