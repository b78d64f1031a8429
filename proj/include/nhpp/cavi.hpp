#pragma once

#include <vector>

#include "nhpp/model.hpp"
#include "nhpp/numerics.hpp"

namespace nhpp {

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct CaviOptions {
  int max_sweeps = 100;    // I
  double tolerance = 0.01; // epsilon on the ELBO increment
};

struct StepDiagnostics {
  int iterations = 0;
  std::vector<double> elbo_trace;
  bool converged = false;
  double wall_ms = 0.0;
};

/// Joint filter state; rate_belief is used only in rate-learning mode
/// (one Gamma per component, clutter first).
struct TrackerState {
  std::vector<GaussianBelief> objects;
  std::vector<GammaParams> rate_belief;
};

/// mu* = F mu + B, Sigma* = F Sigma F' + Q.
GaussianBelief predict_belief(const GaussianBelief& belief, const TransitionModel& t);

/// Forgetting-factor flattening: eta* = eta*gamma - gamma + 1, rho* = rho/gamma.
GammaParams predict_rate(const GammaParams& posterior, double gamma);

/// gamma_n = 1 - 0.1 * max(1, n - 10)^(-0.9); the default schedule for
/// static-rate learning.
double forgetting_schedule(int n);

struct PseudoMeasurement {
  bool has_evidence = false;
  double weight = 0.0;     // W_k
  Eigen::VectorXd mean;    // Ybar
  Eigen::MatrixXd cov;     // Rbar = R_k / W_k
};

/// Association-weighted measurement for object k (1-based component k,
/// weights column k).
PseudoMeasurement pseudo_measurement(const MeasurementFrame& frame,
                                     const AssociationWeights& weights, int k,
                                     const MeasurementModel& model);

struct KalmanByproducts {
  bool updated = false;
  Eigen::VectorXd pseudo_mean;     // Ybar
  Eigen::MatrixXd pseudo_cov;      // Rbar
  Eigen::VectorXd innovation;      // T = Ybar - H mu*
  Eigen::MatrixXd innovation_cov;  // S = H Sigma* H' + Rbar
};

/// Kalman update of one predictive belief against its pseudo-measurement;
/// a no-evidence pseudo-measurement returns the predictive belief unchanged.
GaussianBelief update_state(const GaussianBelief& predicted,
                            const PseudoMeasurement& pseudo,
                            const MeasurementModel& model,
                            KalmanByproducts* byproducts = nullptr);

/// eta = eta* + W_k, rho = rho* / (rho* + 1).
GammaParams update_rate(const GammaParams& predicted, double weight_sum);

/// Empirical-Bayes initial associations: row j proportional to
/// rate_estimate_0 / V for clutter and
/// rate_estimate_k * N(Y_j; H mu*, H Sigma* H' + R_k) for objects.
AssociationWeights init_associations(const MeasurementFrame& frame,
                                     const std::vector<GaussianBelief>& predicted,
                                     const std::vector<double>& rate_estimates,
                                     const MeasurementModel& model);

/// CAVI association update: row j proportional to exp(log_rate_weight_0)/V
/// for clutter and exp(log_rate_weight_k) * N(Y_j; H mu_k, R_k) *
/// exp(-1/2 tr(R_k^{-1} H Sigma_k H')) for objects. log_rate_weight is
/// psi(eta) + log(rho) in rate-learning mode and log(Lambda_k) otherwise.
AssociationWeights update_associations(const MeasurementFrame& frame,
                                       const std::vector<GaussianBelief>& posteriors,
                                       const std::vector<double>& log_rate_weights,
                                       const MeasurementModel& model);

std::vector<double> log_rate_weights(const std::vector<GammaParams>& posterior_rates);
std::vector<double> log_rate_weights(const RateVector& rates);

/// Efficient ELBO in rate-learning mode; valid only when the Gaussian
/// posteriors are the most recently updated factor.
double compute_elbo(const MeasurementFrame& frame, const AssociationWeights& weights,
                    const std::vector<GammaParams>& posterior_rates,
                    const std::vector<GammaParams>& predicted_rates,
                    const std::vector<KalmanByproducts>& byproducts,
                    const MeasurementModel& model);

/// Known-rate ELBO (rate terms replaced by their fixed-Lambda counterparts);
/// same validity caveat.
double compute_elbo_known_rate(const MeasurementFrame& frame,
                               const AssociationWeights& weights,
                               const RateVector& rates,
                               const std::vector<KalmanByproducts>& byproducts,
                               const MeasurementModel& model);

struct StepResult {
  StepDiagnostics diagnostics;
  AssociationWeights weights;
  std::vector<GaussianBelief> predicted;
};

/// One filtering step with online rate learning (prediction, initialisation,
/// CAVI loop). Mutates state in place and returns the converged associations.
StepResult tracker_step(TrackerState& state, const MeasurementFrame& frame,
                        const TransitionModel& transition,
                        const MeasurementModel& model, double gamma,
                        const CaviOptions& options = {});

/// Known-rate variant: no rate prediction/update, Lambda used exactly.
StepResult known_rate_step(TrackerState& state, const MeasurementFrame& frame,
                           const RateVector& rates,
                           const TransitionModel& transition,
                           const MeasurementModel& model,
                           const CaviOptions& options = {});

}  // namespace nhpp
