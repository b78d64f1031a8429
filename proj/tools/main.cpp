// Command-line harness: dataset synthesis, single-run tracking, Monte-Carlo
// experiments, the single-object relocation demo, and threshold selection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhpp/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_simulate(const std::string& preset_name, int k, std::uint64_t seed,
                 const std::string& out_dir) {
  const nhpp::Dataset dataset = nhpp::preset(preset_name, k, seed);
  fs::create_directories(out_dir);
  nhpp::write_frames((fs::path(out_dir) / "frames.jsonl").string(), dataset.frames);
  nhpp::write_truth((fs::path(out_dir) / "truth.csv").string(), dataset.truth);
  std::ofstream cfg(fs::path(out_dir) / "scenario.json");
  cfg << nhpp::scenario_config_json(dataset.config) << '\n';
  std::cout << "wrote " << dataset.frames.size() << " frames to " << out_dir << '\n';
  return 0;
}

int cmd_track(const std::string& dir, const std::string& mode, std::uint64_t seed,
              const std::string& out_path, int threads) {
  nhpp::ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.threads = threads;
  nhpp::Dataset dataset;
  dataset.config =
      nhpp::parse_scenario_config(slurp((fs::path(dir) / "scenario.json").string()));
  dataset.truth = nhpp::read_truth((fs::path(dir) / "truth.csv").string());
  dataset.frames = nhpp::read_frames((fs::path(dir) / "frames.jsonl").string());
  cfg.object_count = dataset.config.object_count;
  const nhpp::DatasetResult result = nhpp::run_dataset(cfg, dataset);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write: " + out_path);
    out = &file;
  }
  *out << "step,ospa,cpu_ms,n_lost,n_relocated\n";
  for (std::size_t n = 0; n < result.ospa.size(); ++n)
    *out << n + 1 << ',' << result.ospa[n] << ',' << result.cpu_ms[n] << ','
         << result.n_lost[n] << ',' << result.n_relocated[n] << '\n';
  if (!result.final_rates.empty()) {
    json rates = json::array();
    for (const auto& g : result.final_rates) rates.push_back(g.mean());
    std::cerr << "posterior rate means: " << rates.dump() << '\n';
  }
  return 0;
}

int cmd_experiment(const std::string& config_path, std::uint64_t seed,
                   const std::string& out_dir, const std::string& mode,
                   int threads) {
  nhpp::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = nhpp::parse_experiment_config(slurp(config_path));
  if (seed) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!mode.empty()) cfg.mode = mode;
  if (threads) cfg.threads = threads;
  const auto result = nhpp::run_experiment(cfg);
  json j;
  j["mode"] = cfg.mode;
  j["K"] = cfg.object_count;
  j["D"] = cfg.datasets;
  j["ospa_mean"] = result.summary.ospa_mean;
  j["ospa_std"] = result.summary.ospa_std;
  j["cpu_ms_mean"] = result.summary.cpu_ms_mean;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_relocate_demo(std::uint64_t seed, double m_init, double init_std,
                      const std::string& out_dir, int threads) {
  const auto demo = nhpp::run_relocate_demo(seed, m_init, init_std, threads);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "inits.csv");
    out << "s,m_x,m_y,elbo,mean_x,mean_y,var_x,var_y,iterations,converged\n";
    for (const auto& rec : demo.outcome.inits)
      out << rec.grid_index << ',' << rec.center.x() << ',' << rec.center.y() << ','
          << rec.elbo << ',' << rec.belief.mean[0] << ',' << rec.belief.mean[2]
          << ',' << rec.belief.cov(0, 0) << ',' << rec.belief.cov(2, 2) << ','
          << rec.iterations << ',' << rec.converged << '\n';
  }
  json j;
  j["grid_size"] = demo.outcome.grid_size;
  j["eligible"] = demo.outcome.inits.size();
  j["winner"] = demo.outcome.winner;
  j["elbo"] = demo.outcome.elbo;
  j["evidence"] = demo.outcome.evidence;
  j["success"] = demo.success;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_params(double lambda, double p_los, double p_reloc, int gap) {
  const auto loss = nhpp::select_loss_params(lambda, p_los);
  const auto reloc = nhpp::select_reloc_thresholds(lambda, p_reloc, gap);
  json j;
  j["lambda"] = lambda;
  j["p_los"] = p_los;
  j["tau"] = loss.window;
  j["m_los"] = loss.m_los;
  j["p_reloc"] = p_reloc;
  j["m_reloc"] = reloc.m_reloc;
  j["m_init"] = reloc.m_init;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational NHPP multi-object tracking harness"};
  app.require_subcommand(1);

  std::string preset_name = "moderate", mode, out, config_path, dir;
  std::uint64_t seed = 0;
  int k = 5, threads = 0, gap = 1;
  double lambda = 5.0, p_los = 7e-4, p_reloc = 0.5, m_init = 0.0, init_std = 35.0;

  auto* simulate = app.add_subcommand("simulate", "emit a dataset to disk");
  simulate->add_option("--preset", preset_name, "moderate|coalescence|rate_estimation");
  simulate->add_option("--k", k, "object count");
  simulate->add_option("--seed", seed, "dataset seed");
  simulate->add_option("--out", out, "output directory")->required();

  auto* track = app.add_subcommand("track", "run one tracker over a dataset dir");
  track->add_option("--dir", dir, "directory produced by simulate")->required();
  track->add_option("--mode", mode, "vb|vb-rate-learning|vb-relo");
  track->add_option("--seed", seed, "tracker seed");
  track->add_option("--out", out, "per-step CSV path (default stdout)");
  track->add_option("--threads", threads, "worker threads");

  auto* experiment = app.add_subcommand("experiment", "run a JSON-config experiment");
  experiment->add_option("--config", config_path, "experiment config JSON");
  experiment->add_option("--seed", seed, "base seed override");
  experiment->add_option("--out", out, "output directory override");
  experiment->add_option("--mode", mode, "tracker mode override");
  experiment->add_option("--threads", threads, "worker threads");

  auto* demo = app.add_subcommand("relocate-demo", "single-object localisation demo");
  demo->add_option("--seed", seed, "demo seed");
  demo->add_option("--m-init", m_init, "eligible-init threshold");
  demo->add_option("--init-std", init_std, "init covariance std (C = std^2 I)");
  demo->add_option("--out", out, "directory for the per-init CSV");
  demo->add_option("--threads", threads, "worker threads");

  auto* params = app.add_subcommand("params", "threshold selection table");
  params->add_option("--lambda", lambda, "object rate");
  params->add_option("--p-los", p_los, "loss probability threshold");
  params->add_option("--p-reloc", p_reloc, "relocation probability threshold");
  params->add_option("--gap", gap, "m_reloc - m_init gap");

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cmd_simulate(preset_name, k, seed, out);
    if (track->parsed())
      return cmd_track(dir, mode.empty() ? "vb-relo" : mode, seed, out,
                       threads ? threads : 1);
    if (experiment->parsed())
      return cmd_experiment(config_path, seed, out, mode, threads);
    if (demo->parsed())
      return cmd_relocate_demo(seed, m_init, init_std, out, threads ? threads : 1);
    if (params->parsed()) return cmd_params(lambda, p_los, p_reloc, gap);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
