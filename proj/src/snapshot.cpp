#include "reid/match/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace reid::match {

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'R', 'E', 'I', 'D', 'I', 'D', 'X', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorCode::ValidationError, "index snapshot truncated");
  }
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw Error(ErrorCode::ValidationError, "index snapshot truncated");
  return s;
}

}  // namespace

void write_snapshot(std::ostream& out, const DescriptorIndex<double>& idx) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kSnapshotFormatVersion);
  put<std::uint64_t>(out, idx.generation());
  put_string(out, idx.schema_version());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(idx.dimension()));
  put<std::uint64_t>(out, idx.size());
  const auto& vectors = idx.vectors();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& e = idx.entries()[i];
    put_string(out, e.individual);
    put<std::uint8_t>(out, e.side == contour::Side::Left ? 0 : 1);
    put<double>(out, e.scale);
    put<std::int64_t>(out, e.begin);
    put<std::int64_t>(out, e.end);
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) put<double>(out, vectors(static_cast<Eigen::Index>(i), j));
  }
  if (!out) throw Error(ErrorCode::StorageFault, "failed writing index snapshot");
}

void write_snapshot(const std::filesystem::path& path, const DescriptorIndex<double>& idx) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::StorageFault, "cannot create " + path.string());
  write_snapshot(out, idx);
}

DescriptorIndex<double> read_snapshot(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::ValidationError, "not an index snapshot");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kSnapshotFormatVersion) {
    throw Error(ErrorCode::ValidationError, "unsupported snapshot format version " + std::to_string(version));
  }
  const auto generation = get<std::uint64_t>(in);
  std::string schema = get_string(in);
  const auto dim = static_cast<Eigen::Index>(get<std::uint32_t>(in));
  const auto count = get<std::uint64_t>(in);

  std::vector<DescriptorIndex<double>::Entry> entries;
  entries.reserve(count);
  DescriptorIndex<double>::Matrix vectors(static_cast<Eigen::Index>(count), dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    DescriptorIndex<double>::Entry e;
    e.individual = get_string(in);
    const auto side = get<std::uint8_t>(in);
    if (side > 1) throw Error(ErrorCode::ValidationError, "bad side byte in snapshot");
    e.side = side == 0 ? contour::Side::Left : contour::Side::Right;
    e.scale = get<double>(in);
    e.begin = static_cast<Eigen::Index>(get<std::int64_t>(in));
    e.end = static_cast<Eigen::Index>(get<std::int64_t>(in));
    for (Eigen::Index j = 0; j < dim; ++j) vectors(static_cast<Eigen::Index>(i), j) = get<double>(in);
    entries.push_back(std::move(e));
  }
  return DescriptorIndex<double>(generation, std::move(schema), std::move(entries), std::move(vectors));
}

DescriptorIndex<double> read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  return read_snapshot(in);
}

}  // namespace reid::match
