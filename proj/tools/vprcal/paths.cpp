#include "paths.hpp"

#include <algorithm>

namespace vprcal::cli {

std::filesystem::path resolve_output(const std::filesystem::path& out_dir,
                                     const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path root = fs::weakly_canonical(fs::absolute(out_dir));
  const fs::path target =
      fs::weakly_canonical(path.is_absolute() ? path : fs::absolute(out_dir) / path);
  auto r = root.begin();
  auto t = target.begin();
  for (; r != root.end() && !r->empty(); ++r, ++t) {
    if (t == target.end() || *r != *t) {
      throw PathEscape("output path " + path.string() + " is outside --out-dir " +
                       out_dir.string());
    }
  }
  if (target == root) {
    throw PathEscape("output path " + path.string() + " names the output directory itself");
  }
  return target;
}

}  // namespace vprcal::cli
