#include "nhpp/track_management.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace nhpp {

LossThresholds select_loss_params(double lambda, double p_los) {
  if (!(lambda > 0.0) || !(p_los > 0.0 && p_los < 1.0))
    throw std::invalid_argument("select_loss_params: lambda > 0 and p in (0,1)");
  LossThresholds out;
  out.window = static_cast<int>(std::ceil(std::log(1.0 / p_los) / lambda));
  out.window = std::max(out.window, 1);
  const InterpolatedPoissonCdf cdf(out.window * lambda);
  out.m_los = cdf.invert(p_los);
  return out;
}

RelocationThresholds select_reloc_thresholds(double lambda, double p_reloc, int gap) {
  if (!(lambda > 0.0) || !(p_reloc > 0.0 && p_reloc < 1.0))
    throw std::invalid_argument("select_reloc_thresholds: lambda > 0 and p in (0,1)");
  const InterpolatedPoissonCdf cdf(lambda);
  RelocationThresholds out;
  out.m_reloc = cdf.invert(1.0 - p_reloc);
  out.m_init = std::max(out.m_reloc - gap, 0.0);
  return out;
}

LossDetectorConfig LossDetectorConfig::from_rates(const RateVector& rates,
                                                  double p_los, double p_reloc,
                                                  int gap) {
  LossDetectorConfig cfg;
  cfg.p_los = p_los;
  cfg.p_reloc = p_reloc;
  cfg.gap = gap;
  for (int k = 1; k <= rates.object_count(); ++k) {
    cfg.loss.push_back(select_loss_params(rates.rates[k], p_los));
    cfg.reloc.push_back(select_reloc_thresholds(rates.rates[k], p_reloc, gap));
  }
  return cfg;
}

TrackHealth TrackHealth::fresh(const RateVector& rates, const LossDetectorConfig& cfg) {
  TrackHealth health;
  const int K = rates.object_count();
  health.history.resize(K);
  health.missed.assign(K, false);
  for (int k = 0; k < K; ++k)
    health.history[k].assign(cfg.loss[k].window, rates.rates[k + 1]);
  return health;
}

void TrackHealth::push(int k, double count, int window) {
  history[k].push_back(count);
  while (static_cast<int>(history[k].size()) > window) history[k].pop_front();
}

double TrackHealth::window_sum(int k) const {
  double s = 0.0;
  for (double v : history[k]) s += v;
  return s;
}

std::vector<double> estimate_counts(const AssociationWeights& weights) {
  std::vector<double> counts;
  const int K = weights.component_count() - 1;
  counts.reserve(K);
  for (int k = 1; k <= K; ++k) counts.push_back(weights.column_sum(k));
  return counts;
}

std::vector<int> detect_loss(TrackHealth& health, const LossDetectorConfig& config) {
  std::vector<int> newly_lost;
  for (std::size_t k = 0; k < health.history.size(); ++k) {
    if (health.missed[k]) continue;
    if (health.window_sum(static_cast<int>(k)) <= config.loss[k].m_los) {
      health.missed[k] = true;
      newly_lost.push_back(static_cast<int>(k));
    }
  }
  return newly_lost;
}

ReloTracker::ReloTracker(std::vector<GaussianBelief> initial_beliefs,
                         RateVector rates, TransitionModel transition,
                         MeasurementModel model, LossDetectorConfig config,
                         Eigen::Matrix2d init_cov, CaviOptions options, int threads)
    : rates_(std::move(rates)),
      transition_(std::move(transition)),
      model_(std::move(model)),
      config_(std::move(config)),
      init_cov_(std::move(init_cov)),
      options_(options),
      threads_(threads) {
  state_.objects = std::move(initial_beliefs);
  if (static_cast<int>(state_.objects.size()) != rates_.object_count())
    throw std::invalid_argument("ReloTracker: belief/rate count mismatch");
  health_ = TrackHealth::fresh(rates_, config_);
}

GaussianBelief ReloTracker::build_prior(int k, bool freshly_lost) const {
  const double pos_std = freshly_lost ? 200.0 : 700.0;
  const double pos_var = pos_std * pos_std;
  // Recentre so the 95% positional region stays inside the surveillance
  // rectangle.
  const double radius = std::sqrt(kChi2Quantile2d * pos_var);
  const Region& region = model_.region;
  auto clamp_center = [&](double v, double lo, double hi) {
    if (hi - lo <= 2.0 * radius) return 0.5 * (lo + hi);
    return std::clamp(v, lo + radius, hi - radius);
  };
  const Eigen::VectorXd& mean = state_.objects[k].mean;
  GaussianBelief prior;
  prior.mean = Eigen::Vector4d(
      clamp_center(mean[0], region.x_min, region.x_max), 0.0,
      clamp_center(mean[2], region.y_min, region.y_max), 0.0);
  prior.cov = Eigen::Vector4d(pos_var, 1600.0, pos_var, 1600.0).asDiagonal();
  return prior;
}

ReloStepDiagnostics ReloTracker::step(const MeasurementFrame& frame) {
  ++step_index_;
  ReloStepDiagnostics diag;
  StepResult result =
      known_rate_step(state_, frame, rates_, transition_, model_, options_);
  weights_ = std::move(result.weights);
  diag.cavi = result.diagnostics;
  diag.pre_relocation = state_.objects;

  std::vector<double> counts = estimate_counts(weights_);
  for (std::size_t k = 0; k < counts.size(); ++k)
    health_.push(static_cast<int>(k), counts[k], config_.loss[k].window);
  diag.newly_lost = detect_loss(health_, config_);

  std::vector<int> missed;
  for (std::size_t k = 0; k < health_.missed.size(); ++k)
    if (health_.missed[k]) missed.push_back(static_cast<int>(k));
  if (missed.empty()) return diag;

  auto prior_builder = [&](int k) {
    const bool fresh = std::find(diag.newly_lost.begin(), diag.newly_lost.end(),
                                 k) != diag.newly_lost.end();
    return build_prior(k, fresh);
  };
  diag.outcomes = relocate_all(missed, frame, state_.objects, result.predicted,
                               weights_, rates_, prior_builder, config_.reloc,
                               init_cov_, model_, options_, threads_);

  counts = estimate_counts(weights_);
  for (const auto& outcome : diag.outcomes) {
    if (!outcome.accepted) continue;
    const int k = outcome.object;
    health_.missed[k] = false;
    // Backfill the window with Lambda_k so the recovered track is not
    // immediately re-flagged; the current slot keeps the refreshed count.
    health_.history[k].assign(config_.loss[k].window, rates_.rates[k + 1]);
    health_.history[k].back() = counts[k];
    diag.relocated.push_back(k);
  }
  return diag;
}

}  // namespace nhpp
