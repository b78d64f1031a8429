#include "nhpp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "nhpp/parallel.hpp"

namespace nhpp {

namespace {

using nlohmann::json;

std::vector<Eigen::Vector2d> positions_of(const std::vector<Eigen::Vector4d>& states) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(states.size());
  for (const auto& x : states) out.emplace_back(x[0], x[2]);
  return out;
}

std::vector<Eigen::Vector2d> positions_of(const std::vector<GaussianBelief>& beliefs) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(beliefs.size());
  for (const auto& b : beliefs) out.emplace_back(b.mean[0], b.mean[2]);
  return out;
}

std::vector<GaussianBelief> initial_beliefs(const Dataset& dataset, double var) {
  std::vector<GaussianBelief> beliefs;
  beliefs.reserve(dataset.truth.states[0].size());
  for (const auto& x : dataset.truth.states[0])
    beliefs.push_back({x, var * Eigen::Matrix4d::Identity()});
  return beliefs;
}

double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   t0)
      .count();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentConfig cfg;
  cfg.preset = j.value("preset", cfg.preset);
  cfg.object_count = j.value("object_count", cfg.object_count);
  cfg.mode = j.value("mode", cfg.mode);
  cfg.datasets = j.value("datasets", cfg.datasets);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.cavi.max_sweeps = j.value("max_sweeps", cfg.cavi.max_sweeps);
  cfg.cavi.tolerance = j.value("tolerance", cfg.cavi.tolerance);
  cfg.p_los = j.value("p_los", cfg.p_los);
  cfg.p_reloc = j.value("p_reloc", cfg.p_reloc);
  cfg.gap = j.value("gap", cfg.gap);
  cfg.init_std = j.value("init_std", cfg.init_std);
  cfg.rate_prior_shape = j.value("rate_prior_shape", cfg.rate_prior_shape);
  cfg.rate_prior_scale = j.value("rate_prior_scale", cfg.rate_prior_scale);
  cfg.initial_state_var = j.value("initial_state_var", cfg.initial_state_var);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.threads = j.value("threads", cfg.threads);
  if (cfg.datasets < 1) throw std::invalid_argument("datasets must be >= 1");
  if (cfg.mode != "vb" && cfg.mode != "vb-rate-learning" && cfg.mode != "vb-relo")
    throw std::invalid_argument("unknown mode: " + cfg.mode);
  return cfg;
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  json j;
  j["preset"] = cfg.preset;
  j["object_count"] = cfg.object_count;
  j["mode"] = cfg.mode;
  j["datasets"] = cfg.datasets;
  j["seed"] = cfg.seed;
  j["max_sweeps"] = cfg.cavi.max_sweeps;
  j["tolerance"] = cfg.cavi.tolerance;
  j["p_los"] = cfg.p_los;
  j["p_reloc"] = cfg.p_reloc;
  j["gap"] = cfg.gap;
  j["init_std"] = cfg.init_std;
  j["rate_prior_shape"] = cfg.rate_prior_shape;
  j["rate_prior_scale"] = cfg.rate_prior_scale;
  j["initial_state_var"] = cfg.initial_state_var;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

DatasetResult run_dataset(const ExperimentConfig& config, const Dataset& dataset) {
  DatasetResult result;
  const ScenarioConfig& sc = dataset.config;
  const TransitionModel transition = sc.transition_model();
  const MeasurementModel model = sc.measurement_model();
  const RateVector rates = sc.rate_vector();
  std::vector<GaussianBelief> beliefs =
      initial_beliefs(dataset, config.initial_state_var);

  auto record = [&](int n, const std::vector<GaussianBelief>& current, double ms,
                    int lost, int relocated) {
    result.ospa.push_back(
        ospa(positions_of(dataset.truth.states[n]), positions_of(current)));
    result.cpu_ms.push_back(ms);
    result.n_lost.push_back(lost);
    result.n_relocated.push_back(relocated);
  };

  if (config.mode == "vb") {
    TrackerState state{beliefs, {}};
    for (const auto& frame : dataset.frames) {
      const auto t0 = std::chrono::steady_clock::now();
      known_rate_step(state, frame, rates, transition, model, config.cavi);
      record(frame.step, state.objects, elapsed_ms(t0), 0, 0);
    }
  } else if (config.mode == "vb-rate-learning") {
    TrackerState state{beliefs, {}};
    state.rate_belief.assign(rates.object_count() + 1,
                             {config.rate_prior_shape, config.rate_prior_scale});
    for (const auto& frame : dataset.frames) {
      const auto t0 = std::chrono::steady_clock::now();
      tracker_step(state, frame, transition, model,
                   forgetting_schedule(frame.step), config.cavi);
      record(frame.step, state.objects, elapsed_ms(t0), 0, 0);
    }
    result.final_rates = state.rate_belief;
  } else if (config.mode == "vb-relo") {
    const auto detector =
        LossDetectorConfig::from_rates(rates, config.p_los, config.p_reloc, config.gap);
    ReloTracker tracker(beliefs, rates, transition, model, detector,
                        config.init_std * config.init_std * Eigen::Matrix2d::Identity(),
                        config.cavi, 1);
    for (const auto& frame : dataset.frames) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto diag = tracker.step(frame);
      record(frame.step, tracker.beliefs(), elapsed_ms(t0),
             static_cast<int>(diag.newly_lost.size()),
             static_cast<int>(diag.relocated.size()));
    }
  } else {
    throw std::invalid_argument("unknown mode: " + config.mode);
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const bool persist = !config.out_dir.empty();
  if (persist) fs::create_directories(config.out_dir);
  if (persist) {
    std::ofstream out(fs::path(config.out_dir) / "config.json");
    if (!out) throw std::runtime_error("cannot write config echo");
    out << experiment_config_json(config) << '\n';
  }

  ExperimentResult result;
  result.datasets.resize(config.datasets);
  parallel_for(config.datasets, config.threads, [&](int d) {
    auto& slot = result.datasets[d];
    try {
      const Dataset dataset =
          preset(config.preset, config.object_count, child_seed(config.seed, d + 1));
      slot = run_dataset(config, dataset);
    } catch (const std::exception& e) {
      slot.failed = true;
      slot.error = e.what();
    }
  });

  std::vector<std::vector<double>> ospa_rows, cpu_rows;
  for (const auto& d : result.datasets)
    if (!d.failed) {
      ospa_rows.push_back(d.ospa);
      cpu_rows.push_back(d.cpu_ms);
    }
  if (ospa_rows.empty()) throw std::runtime_error("all datasets failed");
  result.summary = summarize(ospa_rows, cpu_rows);

  if (persist) {
    for (int d = 0; d < config.datasets; ++d) {
      const auto& ds = result.datasets[d];
      std::ofstream out(fs::path(config.out_dir) /
                        ("dataset_" + std::to_string(d + 1) + ".csv"));
      out << "dataset,step,ospa,cpu_ms,n_lost,n_relocated\n";
      if (ds.failed) continue;
      for (std::size_t n = 0; n < ds.ospa.size(); ++n)
        out << d + 1 << ',' << n + 1 << ',' << ds.ospa[n] << ',' << ds.cpu_ms[n]
            << ',' << ds.n_lost[n] << ',' << ds.n_relocated[n] << '\n';
    }
    {
      std::ofstream out(fs::path(config.out_dir) / "per_step_mean.csv");
      out << "step,mean_ospa\n";
      for (std::size_t n = 0; n < result.summary.per_step_mean.size(); ++n)
        out << n + 1 << ',' << result.summary.per_step_mean[n] << '\n';
    }
    {
      json j;
      j["mode"] = config.mode;
      j["K"] = config.object_count;
      j["D"] = config.datasets;
      j["ospa_mean"] = result.summary.ospa_mean;
      j["ospa_std"] = result.summary.ospa_std;
      j["cpu_ms_mean"] = result.summary.cpu_ms_mean;
      j["per_step"] = result.summary.per_step_mean;
      json failures = json::array();
      for (int d = 0; d < config.datasets; ++d)
        if (result.datasets[d].failed)
          failures.push_back({{"dataset", d + 1}, {"error", result.datasets[d].error}});
      if (!failures.empty()) j["failed_datasets"] = failures;
      std::ofstream out(fs::path(config.out_dir) / "summary.json");
      out << j.dump(2) << '\n';
    }
  }
  return result;
}

RelocateDemoResult run_relocate_demo(std::uint64_t seed, double m_init,
                                     double init_std, int threads) {
  RelocateDemoResult demo;
  demo.truth_position = Eigen::Vector2d::Zero();

  ScenarioConfig sc;
  sc.object_count = 1;
  sc.steps = 1;
  sc.initial_radius = 0.0;
  sc.initial_speed = 0.0;
  sc.object_rates = {4.0};
  sc.clutter_density = 1e-4;
  sc.region_side = 2000.0;
  sc.process_noise_scale = 0.0;
  const MeasurementModel model = sc.measurement_model();
  const RateVector rates = sc.rate_vector();

  // Draw the frame directly: object at the origin, uniform clutter.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-sc.region_side / 2.0,
                                                 sc.region_side / 2.0);
  demo.frame.step = 1;
  std::poisson_distribution<int> object_count(sc.object_rates[0]);
  const int m1 = object_count(rng);
  for (int j = 0; j < m1; ++j)
    demo.frame.points.emplace_back(
        std::sqrt(sc.meas_var) * Eigen::Vector2d(normal(rng), normal(rng)));
  std::poisson_distribution<int> clutter_count(sc.clutter_rate());
  const int m0 = clutter_count(rng);
  for (int j = 0; j < m0; ++j)
    demo.frame.points.emplace_back(Eigen::Vector2d(uniform(rng), uniform(rng)));

  // Flat prior with a 95% positional radius of 750.
  const double pos_var = 750.0 * 750.0 / kChi2Quantile2d;
  demo.prior.mean = Eigen::Vector4d::Zero();
  demo.prior.cov = Eigen::Vector4d(pos_var, 1600.0, pos_var, 1600.0).asDiagonal();

  std::vector<GaussianBelief> beliefs{demo.prior};
  AssociationWeights weights;
  const double m_reloc = m_init + 1.0;
  const auto outcomes = relocate_all(
      {0}, demo.frame, beliefs, {demo.prior}, weights, rates,
      [&](int) { return demo.prior; }, {{m_init, m_reloc}},
      init_std * init_std * Eigen::Matrix2d::Identity(), model, {}, threads);
  demo.outcome = outcomes.front();

  if (demo.outcome.attempted) {
    const GaussianBelief* winner = nullptr;
    for (const auto& rec : demo.outcome.inits)
      if (rec.grid_index == demo.outcome.winner) winner = &rec.belief;
    if (winner) {
      const Eigen::Vector2d mean(winner->mean[0], winner->mean[2]);
      Eigen::Matrix2d pos_cov;
      pos_cov << winner->cov(0, 0), winner->cov(0, 2), winner->cov(2, 0),
          winner->cov(2, 2);
      const Eigen::Vector2d r = mean - demo.truth_position;
      demo.success = r.dot(pos_cov.inverse() * r) <= 9.0;
    }
  }
  return demo;
}

std::string scenario_config_json(const ScenarioConfig& cfg) {
  json j;
  j["object_count"] = cfg.object_count;
  j["steps"] = cfg.steps;
  j["dt"] = cfg.dt;
  j["initial_radius"] = cfg.initial_radius;
  j["initial_speed"] = cfg.initial_speed;
  j["angle_layout"] =
      cfg.angle_layout == AngleLayout::kUniformRandom ? "uniform" : "equally_spaced";
  j["object_rates"] = cfg.object_rates;
  j["clutter_density"] = cfg.clutter_density;
  j["region_side"] = cfg.region_side;
  j["process_noise_scale"] = cfg.process_noise_scale;
  j["meas_var"] = cfg.meas_var;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

ScenarioConfig parse_scenario_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  ScenarioConfig cfg;
  cfg.object_count = j.value("object_count", cfg.object_count);
  cfg.steps = j.value("steps", cfg.steps);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.initial_radius = j.value("initial_radius", cfg.initial_radius);
  cfg.initial_speed = j.value("initial_speed", cfg.initial_speed);
  const std::string layout = j.value("angle_layout", std::string("uniform"));
  cfg.angle_layout = layout == "equally_spaced" ? AngleLayout::kEquallySpaced
                                                : AngleLayout::kUniformRandom;
  cfg.object_rates =
      j.value("object_rates", std::vector<double>(cfg.object_count, 5.0));
  cfg.clutter_density = j.value("clutter_density", cfg.clutter_density);
  cfg.region_side = j.value("region_side", cfg.region_side);
  cfg.process_noise_scale = j.value("process_noise_scale", cfg.process_noise_scale);
  cfg.meas_var = j.value("meas_var", cfg.meas_var);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

}  // namespace nhpp
