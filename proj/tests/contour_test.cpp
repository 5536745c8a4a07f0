#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "shapes.hpp"
#include "reid/contour/io.hpp"
#include "reid/contour/pipeline.hpp"
#include "reid/error.hpp"
#include "reid/eval/random.hpp"

using namespace reid;
using namespace reid::contour;
using Pts = Points<double>;
constexpr double kPi = std::numbers::pi;
using testing_support::arc;
using testing_support::corner;
using testing_support::line;
using testing_support::random_edge;

namespace {

Pts similarity(const Pts& p, double angle, double scale, double tx, double ty) {
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Pts out = scale * p * rot.transpose();
  out.rowwise() += Eigen::RowVector2d(tx, ty);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::StorageFault;
}

}  // namespace

TEST(Normalize, RejectsDegenerate) {
  Pts two(2, 2);
  two << 0, 0, 1, 1;
  EXPECT_EQ(code_of([&] { normalize_contour(Contour<double>{two, Side::Right, "a"}); }), ErrorCode::DegenerateContour);
  Pts same = Pts::Zero(64, 2);
  EXPECT_EQ(code_of([&] { normalize_contour(Contour<double>{same, Side::Right, "a"}); }),
            ErrorCode::DegenerateContour);
  Pts few = line(31);
  EXPECT_EQ(code_of([&] { normalize_contour(Contour<double>{few, Side::Right, "a"}); }),
            ErrorCode::DegenerateContour);
}

TEST(Normalize, UnitLengthAndCount) {
  eval::Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto c = normalize_contour(Contour<double>{random_edge(rng), Side::Right, "a"});
    EXPECT_EQ(c.points.rows(), 256);
    EXPECT_NEAR(arc_length(c.points), 1.0, 1e-9);
    EXPECT_NEAR(c.points.col(0).mean(), 0.0, 1e-12);
    EXPECT_NEAR(c.points.col(1).mean(), 0.0, 1e-12);
  }
}

TEST(Normalize, ScaleInvariant) {
  eval::Rng rng(4);
  const Pts p = random_edge(rng);
  const auto a = normalize_contour(Contour<double>{p, Side::Right, "a"});
  const auto b = normalize_contour(Contour<double>{Pts(3.7 * p), Side::Right, "a"});
  EXPECT_LT((a.points - b.points).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Normalize, LeftEarIsMirrored) {
  eval::Rng rng(5);
  const Pts p = random_edge(rng);
  Pts mirrored = p;
  mirrored.col(0) *= -1.0;
  const auto right = normalize_contour(Contour<double>{p, Side::Right, "a"});
  const auto left = normalize_contour(Contour<double>{mirrored, Side::Left, "a"});
  EXPECT_LT((right.points - left.points).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, DropsRepeatedPoints) {
  Pts p = line(40);
  Pts doubled(80, 2);
  for (int i = 0; i < 40; ++i) doubled.row(2 * i) = doubled.row(2 * i + 1) = p.row(i);
  EXPECT_EQ(drop_repeats(doubled).rows(), 40);
}

TEST(Curvature, StraightSegmentIsHalf) {
  const auto c = normalize_contour(Contour<double>{line(200), Side::Right, "a"});
  const auto prof = integral_curvature(c);
  for (Eigen::Index s = 0; s < prof.values.rows(); ++s) {
    for (Eigen::Index i = 0; i < prof.point_count(); ++i) EXPECT_NEAR(prof.values(s, i), 0.5, 0.02);
  }
}

TEST(Curvature, RightAngleCornerReflexSide) {
  const Pts p = corner(401, 1.0);
  const double r = 0.05;  // far below the arm length
  CurvatureOptions opts{{r / arc_length(p)}, InteriorSide::Right};
  const auto prof = integral_curvature(Contour<double>{p, Side::Right, "a"}, opts);
  EXPECT_NEAR(prof.values(0, 400), 0.75, 0.03);
  const double raster = 1.0 - oracle::raster_left_fraction(p, 400, r);
  EXPECT_NEAR(raster, 0.75, 0.03);
  EXPECT_NEAR(prof.values(0, 400), raster, 0.02);
}

TEST(Curvature, CircularArcConcaveSide) {
  const double R = 1.0;
  const Pts p = arc(600, R, 0.0, kPi);  // counter-clockwise: the center is on the left
  const double len = arc_length(p);
  // the outside of the circle is the concave region, on the right
  CurvatureOptions opts{{(R / 10) / len}, InteriorSide::Right};
  const auto prof = integral_curvature(Contour<double>{p, Side::Right, "a"}, opts);
  EXPECT_GT(prof.values(0, 300), 0.5);
  const double raster = 1.0 - oracle::raster_left_fraction(p, 300, R / 10);
  EXPECT_GT(raster, 0.5);
  EXPECT_NEAR(prof.values(0, 300), raster, 0.02);
}

TEST(Curvature, AutoInteriorPicksTheSideOfTheMean) {
  const Pts p = arc(200, 1.0, 0.0, kPi);
  const auto ccw = integral_curvature(Contour<double>{p, Side::Right, "a"});
  const Pts reversed = p.colwise().reverse();
  const auto cw = integral_curvature(Contour<double>{reversed, Side::Right, "a"});
  // the mean sits inside the arc either way, so both read the convex side
  EXPECT_LT(ccw.values(0, 100), 0.5);
  EXPECT_NEAR(ccw.values(0, 100), cw.values(0, 100), 1e-9);
}

TEST(Curvature, BadScale) {
  const Contour<double> c{line(64), Side::Right, "a"};
  for (double s : {0.0, -0.1, 0.5, 0.7}) {
    EXPECT_EQ(code_of([&] { integral_curvature(c, CurvatureOptions{{s}, InteriorSide::Auto}); }), ErrorCode::BadScale)
        << s;
  }
}

TEST(Curvature, MatchesRasterOracleOnRandomContours) {
  eval::Rng rng(2024);
  const CurvatureOptions defaults;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = normalize_contour(Contour<double>{random_edge(rng), Side::Right, "a"});
    const auto prof = integral_curvature(c, CurvatureOptions{defaults.scales, InteriorSide::Left});
    for (std::size_t s = 0; s < defaults.scales.size(); ++s) {
      for (int probe = 0; probe < 3; ++probe) {
        const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(c.points.rows())));
        const double expected = oracle::raster_left_fraction(c.points, i, defaults.scales[s], 256);
        ASSERT_GE(expected, 0.0);
        worst = std::max(worst, std::abs(prof.values(static_cast<Eigen::Index>(s), i) - expected));
      }
    }
  }
  EXPECT_LE(worst, 0.02);
}

TEST(Curvature, ValuesInUnitInterval) {
  eval::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = normalize_contour(Contour<double>{random_edge(rng), Side::Right, "a"});
    const auto prof = integral_curvature(c);
    EXPECT_GE(prof.values.minCoeff(), 0.0);
    EXPECT_LE(prof.values.maxCoeff(), 1.0);
    EXPECT_EQ(prof.point_count(), 256);
  }
}

TEST(Curvature, SimilarityInvariant) {
  eval::Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Pts p = random_edge(rng);
    const Pts q = similarity(p, rng.uniform(-kPi, kPi), rng.uniform(0.2, 50.0), rng.uniform(-500, 500),
                             rng.uniform(-500, 500));
    const auto a = integral_curvature(normalize_contour(Contour<double>{p, Side::Right, "a"}));
    const auto b = integral_curvature(normalize_contour(Contour<double>{q, Side::Right, "a"}));
    EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Curvature, Deterministic) {
  eval::Rng rng(13);
  const auto c = normalize_contour(Contour<double>{random_edge(rng), Side::Right, "a"});
  const auto a = integral_curvature(c);
  const auto b = integral_curvature(c);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
}

namespace {

CurvatureProfile<double> profile_of(const std::vector<double>& v) {
  CurvatureProfile<double> p;
  p.scales = {0.05};
  p.values.resize(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p.values(0, static_cast<Eigen::Index>(i)) = v[i];
  return p;
}

}  // namespace

TEST(Keypoints, ConstantSequenceGivesEndpoints) {
  const auto kp = extract_keypoints(profile_of(std::vector<double>(100, 0.5)));
  ASSERT_EQ(kp.size(), 2u);
  EXPECT_EQ(kp[0].index, 0);
  EXPECT_EQ(kp[1].index, 99);
  EXPECT_EQ(kp[0].kind, KeypointKind::Endpoint);
}

TEST(Keypoints, TriangleGivesApex) {
  std::vector<double> v(101);
  for (int i = 0; i <= 100; ++i) v[i] = 1.0 - std::abs(i - 50) / 50.0;
  const auto kp = extract_keypoints(profile_of(v));
  ASSERT_EQ(kp.size(), 3u);
  EXPECT_EQ(kp[1].index, 50);
  EXPECT_EQ(kp[1].kind, KeypointKind::Max);
}

TEST(Keypoints, ThreeBumpsMatchScan) {
  std::vector<double> v(256);
  for (int i = 0; i < 256; ++i) {
    const double x = i / 255.0;
    v[i] = 0.5 + 0.2 * std::exp(-std::pow((x - 0.2) / 0.05, 2)) + 0.15 * std::exp(-std::pow((x - 0.5) / 0.06, 2)) +
           0.25 * std::exp(-std::pow((x - 0.8) / 0.04, 2));
  }
  const auto kp = extract_keypoints(profile_of(v));
  const auto expected = oracle::extrema_scan(oracle::window_mean(v, 5), 4, 255 - 4);
  ASSERT_EQ(kp.size(), expected.size() + 2);
  int maxima = 0, minima = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(kp[i + 1].index, expected[i].first);
    EXPECT_EQ(kp[i + 1].kind, expected[i].second > 0 ? KeypointKind::Max : KeypointKind::Min);
    (expected[i].second > 0 ? maxima : minima) += 1;
  }
  EXPECT_EQ(maxima, 3);
  EXPECT_EQ(minima, 2);
  // interleaved
  for (std::size_t i = 1; i + 2 < kp.size(); ++i) {
    EXPECT_NE(kp[i].kind, kp[i + 1].kind);
  }
}

TEST(Keypoints, NoisyProfilesMatchScan) {
  eval::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(256);
    for (auto& x : v) x = rng.uniform();
    const auto kp = extract_keypoints(profile_of(v));
    const auto expected = oracle::extrema_scan(oracle::window_mean(v, 5), 4, 255 - 4);
    ASSERT_EQ(kp.size(), expected.size() + 2);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(kp[i + 1].index, expected[i].first);
  }
}

TEST(Descriptors, TwoKeypointsOneDescriptor) {
  const auto prof = profile_of(std::vector<double>(64, 0.5));
  const auto kp = extract_keypoints(prof);
  const auto d = extract_descriptors(prof, kp, {"a", Side::Right});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].vector.size(), 32);
  EXPECT_NEAR(d[0].vector.norm(), 1.0, 1e-12);
  EXPECT_EQ(d[0].begin, 0);
  EXPECT_EQ(d[0].end, 63);
}

TEST(Descriptors, PairCountAndSpans) {
  eval::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = normalize_contour(Contour<double>{random_edge(rng), Side::Right, "a"});
    const auto prof = integral_curvature(c);
    const auto kp = extract_keypoints(prof);
    const auto d = extract_descriptors(prof, kp, {"x", Side::Right});
    std::size_t expected = 0;
    for (std::size_t i = 0; i < kp.size(); ++i) {
      for (std::size_t j = i + 1; j < kp.size(); ++j) {
        if (kp[i].scale_index == kp[j].scale_index && std::abs(kp[i].index - kp[j].index) >= 8) ++expected;
      }
    }
    EXPECT_EQ(d.size(), expected);
    for (const auto& x : d) {
      EXPECT_NEAR(x.vector.norm(), 1.0, 1e-6);
      EXPECT_LT(x.begin, x.end);
      EXPECT_GE(x.end - x.begin, 8);
    }
  }
}

TEST(Descriptors, AllPairsQualify) {
  // keypoints spread far apart: k keypoints give k(k-1)/2 descriptors
  std::vector<double> v(200);
  for (int i = 0; i < 200; ++i) v[i] = 0.5 + 0.3 * std::sin(i * 2 * kPi / 50.0);
  const auto prof = profile_of(v);
  const auto kp = extract_keypoints(prof);
  const auto d = extract_descriptors(prof, kp, {"a", Side::Right});
  EXPECT_EQ(d.size(), kp.size() * (kp.size() - 1) / 2);
}

TEST(Descriptors, IdenticalContoursIdenticalDescriptors) {
  eval::Rng rng(33);
  const Pts p = random_edge(rng);
  const auto a = describe(Contour<double>{p, Side::Right, "a"}, {"a", Side::Right});
  const auto b = describe(Contour<double>{p, Side::Right, "a"}, {"a", Side::Right});
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((a[i].vector - b[i].vector).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ContourIo, RoundTripAndCrlf) {
  eval::Rng rng(40);
  std::vector<Contour<double>> cs{{random_edge(rng, 40), Side::Left, "17"}, {random_edge(rng, 50), Side::Right, "18"}};
  std::stringstream out;
  write_contours(out, cs);
  std::string text = out.str();
  std::string crlf;
  for (char ch : text) {
    if (ch == '\n') crlf += '\r';
    crlf += ch;
  }
  for (const std::string& t : {text, crlf}) {
    std::stringstream in(t);
    const auto back = read_contours(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].source, "17");
    EXPECT_EQ(back[0].side, Side::Left);
    EXPECT_TRUE((back[1].points.array() == cs[1].points.array()).all());
  }
}

TEST(ContourIo, MalformedInput) {
  std::stringstream in("5 right 3\n0 0 1 1\n");
  EXPECT_THROW(read_contours(in), Error);
  std::stringstream bad_side("5 middle 1\n0 0\n");
  EXPECT_THROW(read_contours(bad_side), Error);
}
