#pragma once

#include <filesystem>
#include <iosfwd>

#include "reid/match/index.hpp"

namespace reid::match {

// Index snapshot, little-endian binary:
//
//   magic            8 bytes  "REIDIDX\0"
//   format version   u32      1
//   generation       u64
//   schema version   u32 length + UTF-8 bytes
//   dimension        u32
//   entry count      u64
//   entries          count x { u32 id length, id bytes, u8 side (0 left, 1 right),
//                              f64 scale, i64 span begin, i64 span end,
//                              dimension x f64 vector }
//
// Doubles are stored bit-exact so offline ranking reproduces the service.

inline constexpr std::uint32_t kSnapshotFormatVersion = 1;

void write_snapshot(std::ostream& out, const DescriptorIndex<double>& idx);
void write_snapshot(const std::filesystem::path& path, const DescriptorIndex<double>& idx);
DescriptorIndex<double> read_snapshot(std::istream& in);
DescriptorIndex<double> read_snapshot(const std::filesystem::path& path);

}  // namespace reid::match
