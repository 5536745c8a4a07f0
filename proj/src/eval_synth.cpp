#include <cmath>
#include <numbers>
#include <set>

#include "reid/eval/random.hpp"
#include "reid/eval/synth.hpp"

namespace reid::eval {

namespace {

using registry::Id;
constexpr double kPi = std::numbers::pi;

// Attribute values in a real population are far from uniform: most animals
// are adult, most ears carry few features. Each slot gets a popularity order
// (fixed per population) with Zipf weights.
class ValueSampler {
 public:
  ValueSampler(const seek::Schema& schema, Rng& rng) : schema_(schema) {
    for (auto s : seek::kAllSlots) {
      const auto& spec = schema.slot(s);
      auto& order = order_[seek::index_of(s)];
      for (const auto& t : spec.tokens) {
        if (!spec.multi || t != spec.none_token) order.push_back(t);
      }
      rng.shuffle(order);
    }
  }

  std::string draw(seek::Slot s, Rng& rng) const {
    const auto& spec = schema_.slot(s);
    const auto& order = order_[seek::index_of(s)];
    if (!spec.multi) return order[zipf(order.size(), rng)];
    if (rng.chance(0.45)) return spec.none_token;
    const std::size_t n = std::min<std::size_t>(rng.chance(0.7) ? 1 : 2, spec.max_features);
    std::set<std::string> picked;
    while (picked.size() < n) picked.insert(order[zipf(order.size(), rng)]);
    std::string joined;
    for (const auto& f : picked) joined += (joined.empty() ? "" : "+") + f;
    return schema_.canonical_value(s, joined);
  }

 private:
  static std::size_t zipf(std::size_t n, Rng& rng) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::pow(static_cast<double>(i + 1), -kZipf);
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < n; ++i) {
      u -= std::pow(static_cast<double>(i + 1), -kZipf);
      if (u < 0.0) return i;
    }
    return n - 1;
  }

  static constexpr double kZipf = 1.2;
  const seek::Schema& schema_;
  std::array<std::vector<std::string>, seek::kSlotCount> order_;
};

// A coding disagreement: another value from the population, or a wildcard.
std::string flipped_value(const ValueSampler& values, seek::Slot slot, const std::string& current, Rng& rng) {
  while (true) {
    std::string v = rng.chance(0.2) ? std::string(seek::kWildcard) : values.draw(slot, rng);
    if (v != current) return v;
  }
}

struct Notch {
  double center;
  double half_width;
  double depth;
};

struct EarShape {
  std::array<double, 4> amplitude{};
  std::array<double, 4> phase{};
  std::vector<Notch> notches;
};

constexpr double kTheta0 = -0.5 * kPi;
constexpr double kTheta1 = kPi;

EarShape random_shape(Rng& rng) {
  EarShape s;
  for (std::size_t m = 0; m < s.amplitude.size(); ++m) {
    s.amplitude[m] = rng.uniform(0.0, 0.05);
    s.phase[m] = rng.uniform(0.0, 2.0 * kPi);
  }
  const auto count = 2 + rng.below(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    s.notches.push_back({rng.uniform(kTheta0 + 0.3, kTheta1 - 0.3), rng.uniform(0.04, 0.12), rng.uniform(0.04, 0.15)});
  }
  return s;
}

contour::Points<double> trace(const EarShape& s, Eigen::Index n) {
  contour::Points<double> pts(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double theta = kTheta0 + (kTheta1 - kTheta0) * static_cast<double>(i) / static_cast<double>(n - 1);
    double r = 1.0;
    for (std::size_t m = 0; m < s.amplitude.size(); ++m) {
      r += s.amplitude[m] * std::cos(static_cast<double>(m + 2) * theta + s.phase[m]);
    }
    for (const auto& notch : s.notches) {
      r -= notch.depth * std::max(0.0, 1.0 - std::abs(theta - notch.center) / notch.half_width);
    }
    pts(i, 0) = r * std::cos(theta);
    pts(i, 1) = 1.3 * r * std::sin(theta);
  }
  return pts;
}

/// Smooth displacement along the curve normal with the requested RMS.
contour::Points<double> jitter(const contour::Points<double>& pts, double rms, Rng& rng) {
  const Eigen::Index n = pts.rows();
  std::array<double, 4> gain{};
  std::array<double, 4> phase{};
  for (std::size_t m = 0; m < gain.size(); ++m) {
    gain[m] = rng.normal();
    phase[m] = rng.uniform(0.0, 2.0 * kPi);
  }
  Eigen::VectorXd offset(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    double v = 0.0;
    for (std::size_t m = 0; m < gain.size(); ++m) v += gain[m] * std::sin(kPi * static_cast<double>(m + 1) * t + phase[m]);
    offset(i) = v;
  }
  const double current = std::sqrt(offset.squaredNorm() / static_cast<double>(n));
  if (current > 0.0) offset *= rms / current;

  contour::Points<double> out = pts;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index a = std::max<Eigen::Index>(0, i - 1);
    const Eigen::Index b = std::min<Eigen::Index>(n - 1, i + 1);
    Eigen::RowVector2d tangent = pts.row(b) - pts.row(a);
    tangent.normalize();
    out.row(i) += offset(i) * Eigen::RowVector2d(-tangent(1), tangent(0));
  }
  return out;
}

contour::Points<double> place(const contour::Points<double>& pts, Rng& rng) {
  const double angle = rng.uniform(-kPi, kPi);
  const double scale = rng.uniform(20.0, 200.0);
  const Eigen::RowVector2d shift(rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0));
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  contour::Points<double> out = (scale * pts * rot.transpose()).rowwise() + shift;
  return out;
}

}  // namespace

registry::RegistryData synth_population(const SynthOptions& opts, const seek::Schema& schema) {
  Rng rng(opts.seed);
  registry::RegistryData d;
  d.schema_version = schema.version();

  const ValueSampler values(schema, rng);
  std::set<std::string> used_codes;
  const Timestamp base = *parse_utc("2021-01-01T06:00:00Z");

  for (std::size_t i = 0; i < opts.individuals; ++i) {
    std::array<std::string, seek::kSlotCount> base_code;
    do {
      for (auto s : seek::kAllSlots) base_code[seek::index_of(s)] = values.draw(s, rng);
    } while (!used_codes.insert(seek::format_code(seek::SeekCode::from_values(base_code, schema))).second);
    const EarShape shape = random_shape(rng);
    const contour::Points<double> edge = trace(shape, opts.contour_points);
    const double length = contour::arc_length(edge);

    registry::Individual ind;
    ind.id = d.next_id++;
    ind.name = "E" + std::to_string(i + 1);

    for (std::size_t j = 0; j < opts.sightings_each; ++j) {
      registry::GroupSighting g;
      g.id = d.next_id++;
      g.event_ref = "synth-" + std::to_string(opts.seed) + "-" + std::to_string(i + 1) + "-" + std::to_string(j + 1);
      g.timestamp = base + std::chrono::days(30 * static_cast<int>(j)) + std::chrono::hours(static_cast<int>(i));
      g.location = {-1.45 + rng.uniform(-0.3, 0.3), 35.1 + rng.uniform(-0.3, 0.3)};
      g.reporter = "synth";
      g.group_size = 1;
      g.status = registry::GroupStatus::Resolved;

      auto code = base_code;
      for (auto s : seek::kAllSlots) {
        if (rng.chance(opts.code_flip_prob)) {
          code[seek::index_of(s)] = flipped_value(values, s, code[seek::index_of(s)], rng);
        }
      }
      contour::Points<double> pts = opts.contour_jitter > 0.0 ? jitter(edge, opts.contour_jitter * length, rng) : edge;

      registry::IndividualSighting s;
      s.id = d.next_id++;
      s.group_sighting = g.id;
      s.subgroup_index = 1;
      s.timestamp = g.timestamp;
      s.code = seek::SeekCode::from_values(code, schema);
      s.contours.push_back({contour::Side::Right, "synthetic", place(pts, rng)});
      s.individual = ind.id;
      ind.sightings.push_back(s.id);

      d.groups.emplace(g.id, std::move(g));
      d.sightings.emplace(s.id, std::move(s));
    }
    d.individuals.emplace(ind.id, std::move(ind));
  }
  return d;
}

}  // namespace reid::eval
