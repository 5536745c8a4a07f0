#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "reid/eval/random.hpp"
#include "reid/seek.hpp"

namespace testing_support {

/// A value drawn uniformly from the slot alphabet, wildcard included with
/// probability `wild`.
inline std::string random_value(const reid::seek::Schema& schema, reid::seek::Slot s, reid::eval::Rng& rng,
                                double wild = 0.0) {
  if (rng.chance(wild)) return "*";
  const auto& spec = schema.slot(s);
  if (!spec.multi) return spec.tokens[rng.below(spec.tokens.size())];
  std::vector<std::string> features;
  for (const auto& t : spec.tokens) {
    if (t != spec.none_token) features.push_back(t);
  }
  const auto n = rng.below(spec.max_features + 1);
  if (n == 0) return spec.none_token;
  rng.shuffle(features);
  std::string joined = features[0];
  for (std::size_t i = 1; i < n; ++i) joined += "+" + features[i];
  return joined;
}

inline reid::seek::SeekCode random_code(reid::eval::Rng& rng, double wild = 0.0,
                                        const reid::seek::Schema& schema = reid::seek::Schema::builtin()) {
  std::array<std::string, reid::seek::kSlotCount> v;
  for (auto s : reid::seek::kAllSlots) v[reid::seek::index_of(s)] = random_value(schema, s, rng, wild);
  return reid::seek::SeekCode::from_values(v, schema);
}

/// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 gen{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("reid-test-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
