#include "reid/seek.hpp"

#include <algorithm>
#include <fstream>

#include "reid/error.hpp"

namespace reid::seek {

namespace {

constexpr std::array<std::string_view, kSlotCount> kSlotNames = {
    "sex",
    "age",
    "tusks",
    "right_ear_prominent",
    "right_ear_secondary",
    "left_ear_prominent",
    "left_ear_secondary",
    "extreme",
};

std::vector<std::string> ear_tokens() {
  // feature type x ear region: Tear, Hole, Notch, Smooth loss; regions 1..6.
  std::vector<std::string> out;
  for (char type : {'H', 'N', 'S', 'T'}) {
    for (int region = 1; region <= 6; ++region) {
      out.push_back(std::string(1, type) + std::to_string(region));
    }
  }
  out.emplace_back("U");
  std::sort(out.begin(), out.end());
  return out;
}

Schema make_builtin() {
  nlohmann::json j;
  j["version"] = "seek-1.0";
  auto ear = [](std::string_view name) {
    return nlohmann::json{{"name", name},
                          {"tokens", ear_tokens()},
                          {"multi", true},
                          {"none_token", "U"},
                          {"max_features", 3}};
  };
  j["slots"] = nlohmann::json::array({
      {{"name", "sex"}, {"tokens", {"F", "M"}}},
      {{"name", "age"}, {"tokens", {"AD", "CALF", "JUV", "SUBAD"}}},
      {{"name", "tusks"}, {"tokens", {"T0", "T2", "TL", "TR"}}},
      ear("right_ear_prominent"),
      ear("right_ear_secondary"),
      ear("left_ear_prominent"),
      ear("left_ear_secondary"),
      {{"name", "extreme"}, {"tokens", {"X0", "X1", "X2", "X3", "X4"}}},
  });
  return Schema::from_json(j);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string_view slot_name(Slot s) noexcept { return kSlotNames[index_of(s)]; }

const Schema& Schema::builtin() {
  static const Schema schema = make_builtin();
  return schema;
}

Schema Schema::from_json(const nlohmann::json& j) {
  Schema out;
  try {
    out.version_ = j.at("version").get<std::string>();
    const auto& slots = j.at("slots");
    if (!slots.is_array() || slots.size() != kSlotCount) {
      throw Error(ErrorCode::ValidationError, "seek schema must list exactly 8 slots");
    }
    for (std::size_t i = 0; i < kSlotCount; ++i) {
      const auto& js = slots[i];
      if (js.at("name").get<std::string>() != kSlotNames[i]) {
        throw Error(ErrorCode::ValidationError,
                    "seek schema slot " + std::to_string(i) + " must be '" +
                        std::string(kSlotNames[i]) + "'");
      }
      SlotSpec spec;
      spec.slot = kAllSlots[i];
      spec.tokens = js.at("tokens").get<std::vector<std::string>>();
      std::sort(spec.tokens.begin(), spec.tokens.end());
      for (const auto& t : spec.tokens) {
        if (t.empty() || t == kWildcard || t.find_first_of(":+ \t") != std::string::npos) {
          throw Error(ErrorCode::ValidationError, "invalid seek token '" + t + "'");
        }
      }
      if (std::adjacent_find(spec.tokens.begin(), spec.tokens.end()) != spec.tokens.end()) {
        throw Error(ErrorCode::ValidationError, "duplicate token in slot " + std::string(kSlotNames[i]));
      }
      spec.multi = js.value("multi", false);
      spec.none_token = js.value("none_token", std::string{});
      spec.max_features = js.value("max_features", std::size_t{1});
      out.slots_[i] = std::move(spec);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("bad seek schema: ") + e.what());
  }
  return out;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open seek schema " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("bad seek schema: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json j;
  j["version"] = version_;
  j["wildcard"] = kWildcard;
  auto& slots = j["slots"] = nlohmann::json::array();
  for (const auto& s : slots_) {
    nlohmann::json js{{"name", slot_name(s.slot)}, {"tokens", s.tokens}};
    if (s.multi) {
      js["multi"] = true;
      js["none_token"] = s.none_token;
      js["max_features"] = s.max_features;
    }
    slots.push_back(std::move(js));
  }
  return j;
}

std::string Schema::canonical_value(Slot s, std::string_view segment) const {
  const SlotSpec& spec = slot(s);
  auto known = [&](std::string_view t) {
    return std::binary_search(spec.tokens.begin(), spec.tokens.end(), t);
  };
  if (segment.empty()) {
    throw Error(ErrorCode::MalformedCode, "empty segment for slot " + std::string(slot_name(s)));
  }
  if (segment == kWildcard) return std::string(kWildcard);
  if (!spec.multi) {
    if (!known(segment)) {
      throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + std::string(segment) + "' in slot " +
                                                std::string(slot_name(s)));
    }
    return std::string(segment);
  }

  std::vector<std::string> parts;
  for (auto part : split(segment, '+')) {
    if (part.empty() || part == kWildcard) {
      throw Error(ErrorCode::MalformedCode, "bad feature list '" + std::string(segment) + "'");
    }
    if (!known(part)) {
      throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + std::string(part) + "' in slot " +
                                                std::string(slot_name(s)));
    }
    parts.emplace_back(part);
  }
  std::sort(parts.begin(), parts.end());
  if (std::adjacent_find(parts.begin(), parts.end()) != parts.end()) {
    throw Error(ErrorCode::MalformedCode, "repeated feature in '" + std::string(segment) + "'");
  }
  if (parts.size() > spec.max_features) {
    throw Error(ErrorCode::MalformedCode, "too many features in '" + std::string(segment) + "'");
  }
  if (parts.size() > 1 && std::find(parts.begin(), parts.end(), spec.none_token) != parts.end()) {
    throw Error(ErrorCode::MalformedCode,
                "'" + spec.none_token + "' cannot be combined with other features");
  }
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

SeekCode SeekCode::from_values(const std::array<std::string, kSlotCount>& values,
                               const Schema& schema) {
  SeekCode code;
  code.schema_version_ = schema.version();
  for (auto s : kAllSlots) {
    code.values_[index_of(s)] = schema.canonical_value(s, values[index_of(s)]);
  }
  return code;
}

SeekCode SeekCode::all_wildcard(const Schema& schema) {
  std::array<std::string, kSlotCount> values;
  values.fill(std::string(kWildcard));
  return from_values(values, schema);
}

double SeekWeights::max_distance() const noexcept {
  double sum = 0.0;
  for (double x : slot) sum += x;
  return normalization == Normalization::SlotCount ? sum / kSlotCount : 1.0;
}

SeekCode parse_code(std::string_view text, const Schema& schema) {
  while (!text.empty() && (text.back() == '\r' || text.back() == '\n')) text.remove_suffix(1);
  if (text.empty()) throw Error(ErrorCode::MalformedCode, "empty seek code");
  auto segments = split(text, ':');
  if (segments.size() != kSlotCount) {
    throw Error(ErrorCode::MalformedCode, "seek code needs 8 segments, got " +
                                              std::to_string(segments.size()) + ": '" +
                                              std::string(text) + "'");
  }
  std::array<std::string, kSlotCount> values;
  for (std::size_t i = 0; i < kSlotCount; ++i) values[i] = std::string(segments[i]);
  return SeekCode::from_values(values, schema);
}

std::string format_code(const SeekCode& code) {
  std::string out;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    if (i) out += ':';
    out += code.values()[i];
  }
  return out;
}

double slot_difference(const SeekCode& a, const SeekCode& b, Slot s, const SeekWeights& w) noexcept {
  if (a.is_wildcard(s) || b.is_wildcard(s)) return w.wildcard_penalty;
  return a.value(s) == b.value(s) ? 0.0 : 1.0;
}

double seek_distance(const SeekCode& a, const SeekCode& b, const SeekWeights& w) {
  if (a.schema_version() != b.schema_version()) {
    throw Error(ErrorCode::SchemaMismatch, "seek codes from schema '" + a.schema_version() +
                                               "' and '" + b.schema_version() + "'");
  }
  double sum = 0.0;
  double total_weight = 0.0;
  for (auto s : kAllSlots) {
    sum += w.slot[index_of(s)] * slot_difference(a, b, s, w);
    total_weight += w.slot[index_of(s)];
  }
  if (w.normalization == Normalization::TotalWeight) {
    return total_weight > 0.0 ? sum / total_weight : 0.0;
  }
  return sum / static_cast<double>(kSlotCount);
}

std::array<double, kSlotCount> attribute_agreement(std::span<const std::vector<SeekCode>> groups) {
  std::array<std::size_t, kSlotCount> agree{};
  std::size_t pairs = 0;
  for (const auto& group : groups) {
    if (group.size() < 2) {
      throw Error(ErrorCode::EmptyInput, "agreement needs at least two codes per individual");
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        ++pairs;
        for (auto s : kAllSlots) {
          if (group[i].value(s) == group[j].value(s)) ++agree[index_of(s)];
        }
      }
    }
  }
  if (pairs == 0) throw Error(ErrorCode::EmptyInput, "no code groups to compare");
  std::array<double, kSlotCount> out{};
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    out[i] = static_cast<double>(agree[i]) / static_cast<double>(pairs);
  }
  return out;
}

}  // namespace reid::seek
