#pragma once

#include <deque>
#include <vector>

#include "nhpp/cavi.hpp"
#include "nhpp/localisation.hpp"
#include "nhpp/model.hpp"

namespace nhpp {

struct LossThresholds {
  int window = 1;      // tau_k
  double m_los = 0.0;  // loss threshold on the windowed count sum
};

/// tau = ceil(ln(1/p) / lambda); m_los solves F~_{tau*lambda}(m) = p on the
/// interpolated Poisson CDF.
LossThresholds select_loss_params(double lambda, double p_los);

/// m_reloc solves F~_lambda(m) = 1 - p_reloc; m_init = max(m_reloc - gap, 0).
RelocationThresholds select_reloc_thresholds(double lambda, double p_reloc,
                                             int gap = 1);

struct LossDetectorConfig {
  std::vector<LossThresholds> loss;          // per object
  std::vector<RelocationThresholds> reloc;   // per object
  double p_los = 7e-4;
  double p_reloc = 0.5;
  int gap = 1;
  static LossDetectorConfig from_rates(const RateVector& rates, double p_los,
                                       double p_reloc, int gap = 1);
};

/// Per-object ring buffers of estimated counts plus the missed set.
struct TrackHealth {
  std::vector<std::deque<double>> history;
  std::vector<bool> missed;
  /// Buffers seeded with Lambda_k so detection is well defined from step 1.
  static TrackHealth fresh(const RateVector& rates, const LossDetectorConfig& cfg);
  void push(int k, double count, int window);
  double window_sum(int k) const;
};

/// M_hat_{n,k} = sum_j q(theta_j = k), k = 1..K.
std::vector<double> estimate_counts(const AssociationWeights& weights);

/// Flags tracked objects whose windowed count sum is <= m_los (inclusive);
/// returns the newly lost indices and updates health.missed.
std::vector<int> detect_loss(TrackHealth& health, const LossDetectorConfig& config);

struct ReloStepDiagnostics {
  StepDiagnostics cavi;
  std::vector<GaussianBelief> pre_relocation;  // posterior before any relocation
  std::vector<int> newly_lost;
  std::vector<int> relocated;
  std::vector<RelocationOutcome> outcomes;
};

/// Full per-step tracker with known rates, track-loss detection and
/// relocation (one instance owns one track session).
class ReloTracker {
 public:
  ReloTracker(std::vector<GaussianBelief> initial_beliefs, RateVector rates,
              TransitionModel transition, MeasurementModel model,
              LossDetectorConfig config, Eigen::Matrix2d init_cov,
              CaviOptions options = {}, int threads = 1);

  ReloStepDiagnostics step(const MeasurementFrame& frame);

  const std::vector<GaussianBelief>& beliefs() const { return state_.objects; }
  const std::vector<bool>& missed() const { return health_.missed; }
  const AssociationWeights& weights() const { return weights_; }

 private:
  GaussianBelief build_prior(int k, bool freshly_lost) const;

  TrackerState state_;
  RateVector rates_;
  TransitionModel transition_;
  MeasurementModel model_;
  LossDetectorConfig config_;
  Eigen::Matrix2d init_cov_;
  CaviOptions options_;
  int threads_ = 1;
  TrackHealth health_;
  AssociationWeights weights_;
  int step_index_ = 0;
};

}  // namespace nhpp
