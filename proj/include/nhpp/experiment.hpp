#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nhpp/cavi.hpp"
#include "nhpp/localisation.hpp"
#include "nhpp/metrics.hpp"
#include "nhpp/scenario.hpp"
#include "nhpp/track_management.hpp"

namespace nhpp {

struct ExperimentConfig {
  std::string preset = "moderate";
  int object_count = 5;
  std::string mode = "vb-relo";  // vb | vb-rate-learning | vb-relo
  int datasets = 1;
  std::uint64_t seed = 1;
  CaviOptions cavi;
  double p_los = 7e-4;
  double p_reloc = 0.5;
  int gap = 1;
  double init_std = 35.0;  // C = init_std^2 I_2
  double rate_prior_shape = 1.0;
  double rate_prior_scale = 5.0;
  double initial_state_var = 0.01;  // near ground-truth initial prior
  std::string out_dir;              // empty: no artifacts written
  int threads = 1;
};

/// JSON round-trip; every field optional with the defaults above.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_json(const ExperimentConfig& config);

struct DatasetResult {
  bool failed = false;
  std::string error;
  std::vector<double> ospa;
  std::vector<double> cpu_ms;
  std::vector<int> n_lost;
  std::vector<int> n_relocated;
  std::vector<GammaParams> final_rates;  // rate-learning mode only
};

/// Runs one tracker over one dataset (pure; no I/O).
DatasetResult run_dataset(const ExperimentConfig& config, const Dataset& dataset);

struct ExperimentResult {
  ExperimentSummary summary;
  std::vector<DatasetResult> datasets;
};

/// Full protocol: D seeded datasets in parallel, per-dataset CSVs, per-step
/// mean curve and summary JSON written to config.out_dir when set.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct RelocateDemoResult {
  RelocationOutcome outcome;
  GaussianBelief prior;
  Eigen::Vector2d truth_position;
  MeasurementFrame frame;
  bool success = false;  // winner within 3 posterior std of truth
};

/// Single-object localisation demonstration: object at the origin with rate 4
/// and R = 100 I_2, clutter density 1e-4, flat positional prior with a 95%
/// radius of 750.
RelocateDemoResult run_relocate_demo(std::uint64_t seed, double m_init,
                                     double init_std, int threads = 1);

/// ScenarioConfig JSON round-trip used by the simulate/track subcommands.
std::string scenario_config_json(const ScenarioConfig& config);
ScenarioConfig parse_scenario_config(const std::string& json_text);

}  // namespace nhpp
