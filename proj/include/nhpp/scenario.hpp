#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nhpp/model.hpp"

namespace nhpp {

enum class AngleLayout { kUniformRandom, kEquallySpaced };

/// Everything needed to synthesize one dataset: constant-velocity dynamics on
/// a 4-d state [x, vx, y, vy] with positional measurements.
struct ScenarioConfig {
  int object_count = 5;
  int steps = 50;
  double dt = 1.0;
  double initial_radius = 750.0;
  double initial_speed = 30.0;
  AngleLayout angle_layout = AngleLayout::kUniformRandom;
  std::vector<double> object_rates;  // Lambda_1..Lambda_K
  double clutter_density = 1e-4;     // per unit area
  double region_side = 0.0;          // origin-centred square
  double process_noise_scale = 25.0; // Q scale
  double meas_var = 100.0;           // R_k = meas_var * I_2
  std::uint64_t seed = 1;

  double clutter_rate() const { return clutter_density * region_side * region_side; }
  TransitionModel transition_model() const;
  MeasurementModel measurement_model() const;
  RateVector rate_vector() const;
};

/// States indexed [step][object]; step 0 is the (known-prior) initial state,
/// measurement frames exist for steps 1..steps. Labels record each
/// measurement's origin (0 = clutter) for diagnostics only.
struct GroundTruth {
  std::vector<std::vector<Eigen::Vector4d>> states;
  std::vector<std::vector<int>> labels;
};

GroundTruth generate_truth(const ScenarioConfig& config, std::uint64_t seed);

std::vector<MeasurementFrame> generate_frames(GroundTruth& truth,
                                              const ScenarioConfig& config,
                                              std::uint64_t seed);

struct Dataset {
  ScenarioConfig config;
  GroundTruth truth;
  std::vector<MeasurementFrame> frames;
};

/// Named experiment presets: "moderate", "coalescence" (K in {8, 20}),
/// "rate_estimation" (K fixed at 10). Unknown name throws.
ScenarioConfig preset_config(const std::string& name, int object_count,
                             std::uint64_t seed);
Dataset preset(const std::string& name, int object_count, std::uint64_t seed);

/// Stable seed-splitting (splitmix64 over seed ^ mixed index) so dataset d of
/// a run is reproducible in isolation.
std::uint64_t child_seed(std::uint64_t base, std::uint64_t index);

/// GroundTruth CSV round-trip: rows (n, k, x, vx, y, vy).
void write_truth(const std::string& path, const GroundTruth& truth);
GroundTruth read_truth(const std::string& path);

}  // namespace nhpp
