#pragma once

#include <cstdint>

#include "reid/registry/model.hpp"

namespace reid::eval {

struct SynthOptions {
  std::size_t individuals = 45;
  std::size_t sightings_each = 3;
  double code_flip_prob = 0.1;  // per slot, per sighting
  double contour_jitter = 0.02; // RMS edge displacement, as a fraction of arc length
  std::uint64_t seed = 1;
  Eigen::Index contour_points = 200;
};

/// Synthetic population, ready to import: every individual has a distinct
/// base SEEK code and a distinct ear edge (a smooth open curve with its own
/// notch pattern). Each sighting perturbs both, then places the contour with
/// a random rotation, scale and offset. One resolved group sighting per
/// individual sighting.
registry::RegistryData synth_population(const SynthOptions& opts,
                                        const seek::Schema& schema = seek::Schema::builtin());

}  // namespace reid::eval
