#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace reid::seek {

enum class Slot : std::uint8_t {
  Sex,
  Age,
  Tusks,
  RightEarProminent,
  RightEarSecondary,
  LeftEarProminent,
  LeftEarSecondary,
  Extreme,
};

inline constexpr std::size_t kSlotCount = 8;
inline constexpr std::string_view kWildcard = "*";

inline constexpr std::array<Slot, kSlotCount> kAllSlots = {
    Slot::Sex,               Slot::Age,
    Slot::Tusks,             Slot::RightEarProminent,
    Slot::RightEarSecondary, Slot::LeftEarProminent,
    Slot::LeftEarSecondary,  Slot::Extreme,
};

constexpr std::size_t index_of(Slot s) noexcept { return static_cast<std::size_t>(s); }
std::string_view slot_name(Slot s) noexcept;

struct SlotSpec {
  Slot slot;
  std::vector<std::string> tokens;  // sorted, excludes the wildcard
  bool multi = false;               // slot holds a '+'-joined token set
  std::string none_token;           // token that cannot be combined (multi slots)
  std::size_t max_features = 1;
};

/// Versioned SEEK vocabulary. Every slot alphabet is closed; the wildcard is
/// accepted in every slot.
class Schema {
 public:
  static const Schema& builtin();
  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::filesystem::path& path);

  nlohmann::json to_json() const;

  const std::string& version() const noexcept { return version_; }
  const SlotSpec& slot(Slot s) const noexcept { return slots_[index_of(s)]; }

  /// Canonical form of one segment, or throws UnknownSymbol/MalformedCode.
  std::string canonical_value(Slot s, std::string_view segment) const;

 private:
  std::string version_;
  std::array<SlotSpec, kSlotCount> slots_;
};

/// One slot value inside a code. `value` is already canonical.
struct SeekAttribute {
  Slot slot;
  std::string value;

  bool is_wildcard() const noexcept { return value == kWildcard; }
  bool operator==(const SeekAttribute&) const = default;
};

class SeekCode {
 public:
  SeekCode() = default;

  /// Validates and canonicalizes each value against `schema`.
  static SeekCode from_values(const std::array<std::string, kSlotCount>& values,
                              const Schema& schema = Schema::builtin());
  static SeekCode all_wildcard(const Schema& schema = Schema::builtin());

  const std::string& schema_version() const noexcept { return schema_version_; }
  const std::string& value(Slot s) const noexcept { return values_[index_of(s)]; }
  bool is_wildcard(Slot s) const noexcept { return value(s) == kWildcard; }
  SeekAttribute attribute(Slot s) const { return {s, value(s)}; }
  const std::array<std::string, kSlotCount>& values() const noexcept { return values_; }

  bool operator==(const SeekCode&) const = default;

 private:
  std::string schema_version_;
  std::array<std::string, kSlotCount> values_;
};

enum class Normalization { SlotCount, TotalWeight };

struct SeekWeights {
  std::array<double, kSlotCount> slot{1.0, 0.4, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double wildcard_penalty = 0.6;
  Normalization normalization = Normalization::SlotCount;

  double max_distance() const noexcept;
};

SeekCode parse_code(std::string_view text, const Schema& schema = Schema::builtin());
std::string format_code(const SeekCode& code);

/// Per-slot difference: 0 equal, 1 unequal, `wildcard_penalty` when either
/// side is a wildcard (including wildcard against wildcard).
double slot_difference(const SeekCode& a, const SeekCode& b, Slot s, const SeekWeights& w) noexcept;

double seek_distance(const SeekCode& a, const SeekCode& b, const SeekWeights& w = {});

/// Fraction of unordered within-group pairs that agree, per slot.
std::array<double, kSlotCount> attribute_agreement(std::span<const std::vector<SeekCode>> groups);

}  // namespace reid::seek
