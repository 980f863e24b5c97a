#include "vprcal/descriptor_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "vprcal/errors.hpp"
#include "vprcal/io.hpp"

namespace vprcal {
namespace {

constexpr char kBinaryMagic[4] = {'V', 'P', 'R', 'D'};
constexpr std::uint32_t kBinaryVersion = 1;

void check_finite(const Descriptor& d) {
  if (!d.vector.allFinite()) {
    throw Error(ErrorCode::kSchemaViolation,
                "descriptor " + std::to_string(d.keyframe_id) + " contains NaN or Inf");
  }
}

template <typename T>
void append_le(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(bits.data(), bits.size());
}

template <typename T>
T read_le(const std::string& in, std::size_t& offset) {
  if (offset + sizeof(T) > in.size()) {
    throw Error(ErrorCode::kSchemaViolation, "truncated binary descriptor file");
  }
  std::array<char, sizeof(T)> bits;
  std::memcpy(bits.data(), in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  offset += sizeof(T);
  return std::bit_cast<T>(bits);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, std::size_t line_no) {
  T value{};
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line_no, "invalid number '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "distance between vectors of size " +
                                                   std::to_string(a.size()) + " and " +
                                                   std::to_string(b.size()));
  }
  return (a - b).norm();
}

DescriptorStore::DescriptorStore(std::size_t dimension) : dimension_(dimension) {}

void DescriptorStore::insert(Descriptor d) {
  if (static_cast<std::size_t>(d.vector.size()) != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "descriptor of dimension " + std::to_string(d.vector.size()) +
                    " inserted into store of dimension " + std::to_string(dimension_));
  }
  if (contains(d.keyframe_id)) {
    throw Error(ErrorCode::kDuplicateKeyframe,
                "keyframe " + std::to_string(d.keyframe_id) + " already stored");
  }
  check_finite(d);
  index_.emplace(d.keyframe_id, entries_.size());
  entries_.push_back(std::move(d));
}

const Eigen::VectorXd& DescriptorStore::vector(KeyframeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownKeyframe, "keyframe " + std::to_string(id) + " not in store");
  }
  return entries_[it->second].vector;
}

std::vector<KeyframeId> DescriptorStore::ids() const {
  std::vector<KeyframeId> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.keyframe_id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Descriptor> DescriptorStore::descriptors() const {
  std::vector<Descriptor> out;
  out.reserve(entries_.size());
  for (KeyframeId id : ids()) out.push_back(entries_[index_.at(id)]);
  return out;
}

std::vector<MatchCandidate> DescriptorStore::query(KeyframeId query_id, std::size_t k,
                                                   std::size_t window) const {
  const Eigen::VectorXd& q = vector(query_id);
  std::vector<MatchCandidate> eligible;
  eligible.reserve(entries_.size());
  for (const auto& e : entries_) {
    const KeyframeId gap = e.keyframe_id > query_id ? e.keyframe_id - query_id
                                                    : query_id - e.keyframe_id;
    if (gap <= window) continue;
    eligible.push_back({query_id, e.keyframe_id, distance(q, e.vector)});
  }
  const auto by_distance = [](const MatchCandidate& a, const MatchCandidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.candidate_id < b.candidate_id;
  };
  const std::size_t keep = std::min(k, eligible.size());
  std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(keep),
                    eligible.end(), by_distance);
  eligible.resize(keep);
  return eligible;
}

Eigen::MatrixXd DescriptorStore::similarity_matrix() const {
  if (entries_.empty()) throw Error(ErrorCode::kEmptyStore, "similarity matrix of empty store");
  const std::vector<KeyframeId> order = ids();
  const auto n = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& vi = entries_[index_.at(order[i])].vector;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = distance(vi, entries_[index_.at(order[j])].vector);
      m(i, j) = d;
      m(j, i) = d;
    }
  }
  return m;
}

DescriptorStore normalized(const DescriptorStore& store) {
  DescriptorStore out(store.dimension());
  for (auto d : store.descriptors()) {
    const double n = d.vector.norm();
    if (n > 0.0) d.vector /= n;
    out.insert(std::move(d));
  }
  return out;
}

DescriptorStore make_store(const std::vector<Descriptor>& descriptors) {
  if (descriptors.empty()) return DescriptorStore(0);
  DescriptorStore store(static_cast<std::size_t>(descriptors.front().vector.size()));
  for (const auto& d : descriptors) store.insert(d);
  return store;
}

std::string write_descriptors_csv(const std::vector<Descriptor>& descriptors) {
  const Eigen::Index dim = descriptors.empty() ? 0 : descriptors.front().vector.size();
  std::string out = "keyframe_id";
  for (Eigen::Index i = 0; i < dim; ++i) out += ",v" + std::to_string(i);
  out += '\n';
  for (const auto& d : descriptors) {
    if (d.vector.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "mixed descriptor dimensions");
    }
    out += std::to_string(d.keyframe_id);
    for (Eigen::Index i = 0; i < dim; ++i) {
      out += ',';
      out += format_double(d.vector[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<Descriptor> parse_descriptors_csv(const std::string& text) {
  std::vector<Descriptor> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t dim = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (!header_seen) {
      if (fields.front() != "keyframe_id") {
        throw ParseError(line_no, "expected header starting with keyframe_id");
      }
      for (std::size_t i = 1; i < fields.size(); ++i) {
        if (fields[i] != "v" + std::to_string(i - 1)) {
          throw ParseError(line_no, "unexpected header column '" + std::string(fields[i]) + "'");
        }
      }
      dim = fields.size() - 1;
      header_seen = true;
      continue;
    }
    if (fields.size() != dim + 1) {
      throw ParseError(line_no, "expected " + std::to_string(dim + 1) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    Descriptor d;
    d.keyframe_id = parse_number<std::uint64_t>(fields[0], line_no);
    d.vector.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      d.vector[static_cast<Eigen::Index>(i)] = parse_number<double>(fields[i + 1], line_no);
    }
    out.push_back(std::move(d));
  }
  if (!header_seen) throw ParseError(1, "missing header");
  return out;
}

std::string write_descriptors_binary(const std::vector<Descriptor>& descriptors) {
  const std::size_t dim = descriptors.empty() ? 0 : descriptors.front().vector.size();
  std::string out(kBinaryMagic, 4);
  append_le<std::uint32_t>(out, kBinaryVersion);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(descriptors.size()));
  for (const auto& d : descriptors) {
    if (static_cast<std::size_t>(d.vector.size()) != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "mixed descriptor dimensions");
    }
    append_le<std::uint64_t>(out, d.keyframe_id);
    for (Eigen::Index i = 0; i < d.vector.size(); ++i) append_le<double>(out, d.vector[i]);
  }
  return out;
}

std::vector<Descriptor> parse_descriptors_binary(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kBinaryMagic, 4) != 0) {
    throw Error(ErrorCode::kSchemaViolation, "missing VPRD magic");
  }
  std::size_t offset = 4;
  const auto version = read_le<std::uint32_t>(bytes, offset);
  if (version != kBinaryVersion) {
    throw Error(ErrorCode::kSchemaViolation, "unsupported version " + std::to_string(version));
  }
  const auto dim = read_le<std::uint32_t>(bytes, offset);
  const auto count = read_le<std::uint32_t>(bytes, offset);
  const std::size_t expected = offset + static_cast<std::size_t>(count) * (8 + 8 * dim);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kSchemaViolation, "binary descriptor file has " +
                                                 std::to_string(bytes.size()) + " bytes, expected " +
                                                 std::to_string(expected));
  }
  std::vector<Descriptor> out(count);
  for (auto& d : out) {
    d.keyframe_id = read_le<std::uint64_t>(bytes, offset);
    d.vector.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) d.vector[i] = read_le<double>(bytes, offset);
  }
  return out;
}

std::vector<Descriptor> load_descriptors(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  if (contents.size() >= 4 && std::memcmp(contents.data(), kBinaryMagic, 4) == 0) {
    return parse_descriptors_binary(contents);
  }
  return parse_descriptors_csv(contents);
}

void save_descriptors(const std::filesystem::path& path,
                      const std::vector<Descriptor>& descriptors) {
  const auto ext = path.extension();
  if (ext == ".bin" || ext == ".vprd") {
    write_file(path, write_descriptors_binary(descriptors));
  } else {
    write_file(path, write_descriptors_csv(descriptors));
  }
}

}  // namespace vprcal
