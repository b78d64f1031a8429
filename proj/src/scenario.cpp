#include "nhpp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nhpp {

namespace {

Eigen::Matrix2d axis_f(double dt) {
  Eigen::Matrix2d f;
  f << 1.0, dt, 0.0, 1.0;
  return f;
}

Eigen::Matrix2d axis_q(double dt, double scale) {
  Eigen::Matrix2d q;
  q << dt * dt * dt / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt;
  return scale * q;
}

double interp_table(const std::vector<std::pair<int, double>>& table, int k) {
  if (k <= table.front().first) return table.front().second;
  if (k >= table.back().first) return table.back().second;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (k <= table[i].first) {
      const auto [k0, v0] = table[i - 1];
      const auto [k1, v1] = table[i];
      return v0 + (v1 - v0) * (k - k0) / static_cast<double>(k1 - k0);
    }
  }
  return table.back().second;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

TransitionModel ScenarioConfig::transition_model() const {
  TransitionModel t;
  t.F = Eigen::Matrix4d::Zero();
  t.F.block<2, 2>(0, 0) = axis_f(dt);
  t.F.block<2, 2>(2, 2) = axis_f(dt);
  t.B = Eigen::Vector4d::Zero();
  t.Q = Eigen::Matrix4d::Zero();
  t.Q.block<2, 2>(0, 0) = axis_q(dt, process_noise_scale);
  t.Q.block<2, 2>(2, 2) = axis_q(dt, process_noise_scale);
  return t;
}

MeasurementModel ScenarioConfig::measurement_model() const {
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(2, 4);
  m.H(0, 0) = 1.0;
  m.H(1, 2) = 1.0;
  m.R.assign(object_count, meas_var * Eigen::Matrix2d::Identity());
  const double half = region_side / 2.0;
  m.region = {-half, half, -half, half};
  return m;
}

RateVector ScenarioConfig::rate_vector() const {
  RateVector r;
  r.rates.push_back(clutter_rate());
  r.rates.insert(r.rates.end(), object_rates.begin(), object_rates.end());
  return r;
}

GroundTruth generate_truth(const ScenarioConfig& config, std::uint64_t seed) {
  if (static_cast<int>(config.object_rates.size()) != config.object_count)
    throw std::invalid_argument("generate_truth: rate count != object count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);

  GroundTruth truth;
  truth.states.resize(config.steps + 1);
  truth.states[0].reserve(config.object_count);
  for (int k = 0; k < config.object_count; ++k) {
    const double angle = config.angle_layout == AngleLayout::kUniformRandom
                             ? angle_dist(rng)
                             : 2.0 * std::numbers::pi * k / config.object_count;
    const double c = std::cos(angle), s = std::sin(angle);
    Eigen::Vector4d x;
    x << config.initial_radius * c, -config.initial_speed * c,
        config.initial_radius * s, -config.initial_speed * s;
    truth.states[0].push_back(x);
  }

  const TransitionModel trans = config.transition_model();
  Eigen::Matrix2d chol = Eigen::Matrix2d::Zero();
  if (config.process_noise_scale > 0.0)
    chol = axis_q(config.dt, config.process_noise_scale).llt().matrixL();
  for (int n = 1; n <= config.steps; ++n) {
    truth.states[n].reserve(config.object_count);
    for (int k = 0; k < config.object_count; ++k) {
      Eigen::Vector4d x = trans.F * truth.states[n - 1][k] + trans.B;
      Eigen::Vector2d zx(normal(rng), normal(rng));
      Eigen::Vector2d zy(normal(rng), normal(rng));
      x.head<2>() += chol * zx;
      x.tail<2>() += chol * zy;
      truth.states[n].push_back(x);
    }
  }
  return truth;
}

std::vector<MeasurementFrame> generate_frames(GroundTruth& truth,
                                              const ScenarioConfig& config,
                                              std::uint64_t seed) {
  if (static_cast<int>(truth.states.size()) != config.steps + 1)
    throw std::invalid_argument("generate_frames: truth/config step mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double half = config.region_side / 2.0;
  std::uniform_real_distribution<double> uniform_pos(-half, half);
  const double meas_std = std::sqrt(config.meas_var);

  std::vector<MeasurementFrame> frames;
  frames.reserve(config.steps);
  truth.labels.assign(config.steps + 1, {});
  for (int n = 1; n <= config.steps; ++n) {
    MeasurementFrame frame;
    frame.step = n;
    std::vector<int> labels;
    for (int k = 0; k < config.object_count; ++k) {
      std::poisson_distribution<int> count(config.object_rates[k]);
      const int m = count(rng);
      const Eigen::Vector2d pos(truth.states[n][k][0], truth.states[n][k][2]);
      // Object-origin measurements follow the emission law wherever the
      // object is; the region only bounds the clutter process.
      for (int j = 0; j < m; ++j) {
        frame.points.emplace_back(
            pos + meas_std * Eigen::Vector2d(normal(rng), normal(rng)));
        labels.push_back(k + 1);
      }
    }
    std::poisson_distribution<int> clutter_count(config.clutter_rate());
    const int m0 = clutter_count(rng);
    for (int j = 0; j < m0; ++j) {
      frame.points.emplace_back(Eigen::Vector2d(uniform_pos(rng), uniform_pos(rng)));
      labels.push_back(0);
    }
    // random permutation so origin order leaks nothing
    std::vector<int> perm(frame.points.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MeasurementFrame shuffled;
    shuffled.step = n;
    std::vector<int> shuffled_labels;
    shuffled.points.reserve(perm.size());
    shuffled_labels.reserve(perm.size());
    for (int idx : perm) {
      shuffled.points.push_back(frame.points[idx]);
      shuffled_labels.push_back(labels[idx]);
    }
    truth.labels[n] = std::move(shuffled_labels);
    frames.push_back(std::move(shuffled));
  }
  return frames;
}

ScenarioConfig preset_config(const std::string& name, int object_count,
                             std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  if (name == "moderate") {
    cfg.object_count = object_count;
    cfg.steps = 50;
    cfg.initial_radius = 750.0;
    cfg.initial_speed = 30.0;
    cfg.angle_layout = AngleLayout::kUniformRandom;
    cfg.object_rates.assign(object_count, 5.0);
    cfg.clutter_density = 1e-4;
    static const std::vector<std::pair<int, double>> clutter_table = {
        {5, 775.0}, {10, 1175.0}, {20, 1761.0}, {30, 1967.0}, {50, 2521.0}};
    cfg.region_side = std::sqrt(interp_table(clutter_table, object_count) /
                                cfg.clutter_density);
  } else if (name == "coalescence") {
    if (object_count != 8 && object_count != 20)
      throw std::invalid_argument("coalescence preset requires K in {8, 20}");
    cfg.object_count = object_count;
    cfg.steps = 50;
    cfg.initial_radius = 750.0;
    cfg.initial_speed = 50.0;
    cfg.angle_layout = AngleLayout::kEquallySpaced;
    cfg.object_rates.assign(object_count, 6.0);
    cfg.clutter_density = 3e-4;
    const double clutter_rate = object_count == 8 ? 3038.0 : 6916.0;
    cfg.region_side = std::sqrt(clutter_rate / cfg.clutter_density);
  } else if (name == "rate_estimation") {
    if (object_count > 0 && object_count != 10)
      throw std::invalid_argument("rate_estimation preset is fixed at K=10");
    cfg.object_count = 10;
    cfg.steps = 200;
    cfg.initial_radius = 750.0;
    cfg.initial_speed = 30.0;
    cfg.angle_layout = AngleLayout::kUniformRandom;
    std::mt19937_64 rng(splitmix64(seed ^ 0x7261746573ULL));
    std::uniform_real_distribution<double> rate_dist(1.5, 10.0);
    cfg.object_rates.resize(cfg.object_count);
    for (double& r : cfg.object_rates) r = rate_dist(rng);
    cfg.clutter_density = 1e-5;
    cfg.region_side = std::sqrt(5240.0 / cfg.clutter_density);
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return cfg;
}

Dataset preset(const std::string& name, int object_count, std::uint64_t seed) {
  Dataset d;
  d.config = preset_config(name, object_count, seed);
  d.truth = generate_truth(d.config, child_seed(seed, 1));
  d.frames = generate_frames(d.truth, d.config, child_seed(seed, 2));
  return d;
}

std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index));
}

void write_truth(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "n,k,x,vx,y,vy\n";
  out.precision(17);
  for (std::size_t n = 0; n < truth.states.size(); ++n)
    for (std::size_t k = 0; k < truth.states[n].size(); ++k) {
      const auto& x = truth.states[n][k];
      out << n << ',' << k + 1 << ',' << x[0] << ',' << x[1] << ',' << x[2]
          << ',' << x[3] << '\n';
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

GroundTruth read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  GroundTruth truth;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    double vals[6];
    for (double& v : vals) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("bad truth row: " + line);
      v = std::stod(tok);
    }
    const auto n = static_cast<std::size_t>(vals[0]);
    if (truth.states.size() <= n) truth.states.resize(n + 1);
    truth.states[n].push_back(Eigen::Vector4d(vals[2], vals[3], vals[4], vals[5]));
  }
  return truth;
}

}  // namespace nhpp
