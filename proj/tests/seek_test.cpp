#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "reid/error.hpp"
#include "reid/seek.hpp"
#include "support.hpp"

using namespace reid;
using namespace reid::seek;
using testing_support::random_code;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::StorageFault;
}

SeekCode with(SeekCode c, Slot s, const std::string& v) {
  auto values = c.values();
  values[index_of(s)] = v;
  return SeekCode::from_values(values);
}

}  // namespace

TEST(SeekParse, ExampleCodeRoundTrips) {
  const auto c = parse_code("F:AD:T2:U:U:N1:U:X0");
  EXPECT_EQ(c.value(Slot::Sex), "F");
  EXPECT_EQ(c.value(Slot::Age), "AD");
  EXPECT_EQ(c.value(Slot::Tusks), "T2");
  EXPECT_EQ(c.value(Slot::RightEarProminent), "U");
  EXPECT_EQ(c.value(Slot::LeftEarProminent), "N1");
  EXPECT_EQ(c.value(Slot::Extreme), "X0");
  EXPECT_EQ(format_code(c), "F:AD:T2:U:U:N1:U:X0");
  EXPECT_EQ(parse_code(format_code(c)), c);
}

TEST(SeekParse, Errors) {
  EXPECT_EQ(code_of([] { parse_code(""); }), ErrorCode::MalformedCode);
  EXPECT_EQ(code_of([] { parse_code("F:AD:T2"); }), ErrorCode::MalformedCode);
  EXPECT_EQ(code_of([] { parse_code("F:AD:T2:U:U:N1:U:X0:X1"); }), ErrorCode::MalformedCode);
  EXPECT_EQ(code_of([] { parse_code("Q:AD:T2:U:U:N1:U:X0"); }), ErrorCode::UnknownSymbol);
  EXPECT_EQ(code_of([] { parse_code("F:AD:T2:Z9:U:N1:U:X0"); }), ErrorCode::UnknownSymbol);
  EXPECT_EQ(code_of([] { parse_code("F:AD:T2:U+N1:U:N1:U:X0"); }), ErrorCode::MalformedCode);
  EXPECT_EQ(code_of([] { parse_code("F:AD:T2:N1+N1:U:N1:U:X0"); }), ErrorCode::MalformedCode);
  EXPECT_EQ(code_of([] { parse_code("F:AD:T2:N1+N2+N3+N4:U:N1:U:X0"); }), ErrorCode::MalformedCode);
  EXPECT_EQ(code_of([] { parse_code("F::T2:U:U:N1:U:X0"); }), ErrorCode::MalformedCode);
}

TEST(SeekParse, WildcardSlot) {
  const auto c = parse_code("F:*:T2:U:U:N1:U:X0");
  EXPECT_TRUE(c.is_wildcard(Slot::Age));
  EXPECT_FALSE(c.is_wildcard(Slot::Sex));
}

TEST(SeekParse, AllWildcardFormat) {
  EXPECT_EQ(format_code(SeekCode::all_wildcard()), "*:*:*:*:*:*:*:*");
  EXPECT_EQ(parse_code("*:*:*:*:*:*:*:*"), SeekCode::all_wildcard());
}

TEST(SeekParse, FeatureListsAreSorted) {
  const auto c = parse_code("M:AD:T0:T3+H1:U:U:U:X1");
  EXPECT_EQ(c.value(Slot::RightEarProminent), "H1+T3");
  EXPECT_EQ(format_code(c), "M:AD:T0:H1+T3:U:U:U:X1");
}

TEST(SeekParse, RandomRoundTrip) {
  eval::Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto c = random_code(rng, 0.15);
    const auto s = format_code(c);
    EXPECT_EQ(parse_code(s), c) << s;
    EXPECT_EQ(format_code(parse_code(s)), s);
  }
}

TEST(SeekParse, DistinctCodesGiveDistinctStrings) {
  // Exhaustive over a sub-alphabet: sex x age x tusks x extreme with the ear
  // slots ranging over {U, H1, *}.
  const auto& schema = Schema::builtin();
  std::set<std::string> strings;
  std::size_t count = 0;
  const std::vector<std::string> ear{"U", "H1", "*"};
  for (const auto& sex : {"F", "M", "*"}) {
    for (const auto& age : schema.slot(Slot::Age).tokens) {
      for (const auto& tusks : schema.slot(Slot::Tusks).tokens) {
        for (const auto& e1 : ear) {
          for (const auto& e2 : ear) {
            for (const auto& x : {"X0", "X4"}) {
              const auto c = SeekCode::from_values({sex, age, tusks, e1, "U", e2, "U", x});
              strings.insert(format_code(c));
              ++count;
            }
          }
        }
      }
    }
  }
  EXPECT_EQ(strings.size(), count);
}

TEST(SeekSchema, Introspection) {
  const auto& schema = Schema::builtin();
  EXPECT_EQ(schema.slot(Slot::Sex).tokens, (std::vector<std::string>{"F", "M"}));
  EXPECT_EQ(schema.slot(Slot::Age).tokens.size(), 4u);
  EXPECT_TRUE(schema.slot(Slot::LeftEarSecondary).multi);
  const auto again = Schema::from_json(schema.to_json());
  EXPECT_EQ(again.to_json(), schema.to_json());
  EXPECT_EQ(again.version(), schema.version());
}

TEST(SeekSchema, RejectsBrokenSchema) {
  auto j = Schema::builtin().to_json();
  j["slots"].erase(0);
  EXPECT_EQ(code_of([&] { Schema::from_json(j); }), ErrorCode::ValidationError);
}

TEST(SeekDistance, Examples) {
  const auto a = parse_code("F:AD:T2:U:U:N1:U:X0");
  EXPECT_EQ(seek_distance(a, a), 0.0);

  const auto b = parse_code("M:CALF:T0:H1:H2:H3:H4:X1");
  EXPECT_DOUBLE_EQ(seek_distance(a, b), (0.4 + 7.0) / 8.0);
  EXPECT_EQ(seek_distance(a, b), 0.925);

  const auto w = with(a, Slot::Age, "*");
  EXPECT_EQ(seek_distance(w, a), 0.03);
  EXPECT_DOUBLE_EQ(seek_distance(w, a), 0.4 * 0.6 / 8.0);
}

TEST(SeekDistance, WildcardAgainstWildcard) {
  const auto a = SeekCode::all_wildcard();
  EXPECT_NEAR(seek_distance(a, a), 0.6 * (7.0 + 0.4) / 8.0, 1e-15);
}

TEST(SeekDistance, TotalWeightNormalization) {
  SeekWeights w;
  w.normalization = Normalization::TotalWeight;
  const auto a = parse_code("F:AD:T2:U:U:N1:U:X0");
  const auto b = parse_code("M:CALF:T0:H1:H2:H3:H4:X1");
  EXPECT_NEAR(seek_distance(a, b, w), 1.0, 1e-15);
  EXPECT_NEAR(w.max_distance(), 1.0, 1e-15);
  EXPECT_NEAR(SeekWeights{}.max_distance(), 0.925, 1e-15);
}

TEST(SeekDistance, SchemaMismatch) {
  auto j = Schema::builtin().to_json();
  j["version"] = "seek-test";
  const auto other = Schema::from_json(j);
  const auto a = parse_code("F:AD:T2:U:U:N1:U:X0");
  const auto b = parse_code("F:AD:T2:U:U:N1:U:X0", other);
  EXPECT_EQ(code_of([&] { seek_distance(a, b); }), ErrorCode::SchemaMismatch);
}

TEST(SeekDistance, RandomPairProperties) {
  eval::Rng rng(5);
  const SeekWeights w;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_code(rng, 0.2);
    const auto b = random_code(rng, 0.2);
    const double d = seek_distance(a, b, w);
    EXPECT_EQ(d, seek_distance(b, a, w));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 0.925 + 1e-15);

    const auto clean = random_code(rng, 0.0);
    EXPECT_EQ(seek_distance(clean, clean, w), 0.0);

    // A matching slot pair turned into (wildcard, x) costs exactly w_i * 0.6 / 8.
    for (auto s : kAllSlots) {
      if (a.value(s) != b.value(s) || a.is_wildcard(s)) continue;
      const double widened = seek_distance(with(a, s, "*"), b, w);
      EXPECT_NEAR(widened - d, w.slot[index_of(s)] * 0.6 / 8.0, 1e-12);
      EXPECT_GT(widened, d);
    }
  }
}

TEST(SeekAgreement, Examples) {
  const auto a = parse_code("F:AD:T2:U:U:N1:U:X0");
  {
    std::vector<std::vector<SeekCode>> groups{{a, a}};
    for (double v : attribute_agreement(groups)) EXPECT_EQ(v, 1.0);
  }
  {
    std::vector<std::vector<SeekCode>> groups{{a, with(a, Slot::Age, "JUV")}};
    const auto agree = attribute_agreement(groups);
    for (auto s : kAllSlots) EXPECT_EQ(agree[index_of(s)], s == Slot::Age ? 0.0 : 1.0);
  }
  {
    // wildcard agrees with wildcard, disagrees with a value
    std::vector<std::vector<SeekCode>> groups{{with(a, Slot::Sex, "*"), with(a, Slot::Sex, "*"), a}};
    EXPECT_NEAR(attribute_agreement(groups)[index_of(Slot::Sex)], 1.0 / 3.0, 1e-15);
  }
}

TEST(SeekAgreement, ThreeCodeGroupsMatchPairEnumeration) {
  eval::Rng rng(9);
  std::vector<std::vector<SeekCode>> groups;
  for (int g = 0; g < 12; ++g) {
    const auto base = random_code(rng, 0.0);
    std::vector<SeekCode> group;
    for (int i = 0; i < 3; ++i) {
      auto c = base;
      for (auto s : kAllSlots) {
        if (rng.chance(0.3)) c = with(c, s, testing_support::random_value(Schema::builtin(), s, rng, 0.3));
      }
      group.push_back(c);
    }
    groups.push_back(group);
  }
  std::array<double, kSlotCount> agree{};
  double pairs = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        pairs += 1;
        for (auto s : kAllSlots) agree[index_of(s)] += g[i].value(s) == g[j].value(s) ? 1.0 : 0.0;
      }
    }
  }
  EXPECT_EQ(pairs, 36);
  const auto got = attribute_agreement(groups);
  for (std::size_t s = 0; s < kSlotCount; ++s) EXPECT_NEAR(got[s], agree[s] / pairs, 1e-15);
}

TEST(SeekAgreement, EmptyInput) {
  std::vector<std::vector<SeekCode>> none;
  EXPECT_EQ(code_of([&] { attribute_agreement(none); }), ErrorCode::EmptyInput);
  std::vector<std::vector<SeekCode>> single{{SeekCode::all_wildcard()}};
  EXPECT_EQ(code_of([&] { attribute_agreement(single); }), ErrorCode::EmptyInput);
}
