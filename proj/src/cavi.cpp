#include "nhpp/cavi.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace nhpp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEvidenceFloor = 1e-12;

// Precomputed SPD inverse + log determinant for repeated Gaussian evaluation.
struct GaussSpec {
  Eigen::MatrixXd inv;
  double logdet = 0.0;
};

GaussSpec make_spec(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("association covariance not SPD");
  GaussSpec spec;
  spec.inv = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    spec.logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return spec;
}

double log_gauss(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                 const GaussSpec& spec) {
  const Eigen::VectorXd r = y - mu;
  return -0.5 * (y.size() * kLog2Pi + spec.logdet + r.dot(spec.inv * r));
}

// Normalises logits row-wise into probabilities; a fully impossible row gets
// clutter probability 1 with a warning.
AssociationWeights normalise_rows(Eigen::MatrixXd logits) {
  AssociationWeights weights;
  weights.w = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    const double mx = logits.row(j).maxCoeff();
    if (!std::isfinite(mx)) {
      std::fprintf(stderr,
                   "nhpp: association row %ld has no feasible component; "
                   "assigning clutter\n",
                   static_cast<long>(j));
      weights.w(j, 0) = 1.0;
      continue;
    }
    double total = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      const double e = std::exp(logits(j, k) - mx);
      weights.w(j, k) = e;
      total += e;
    }
    weights.w.row(j) /= total;
  }
  return weights;
}

}  // namespace

GaussianBelief predict_belief(const GaussianBelief& belief, const TransitionModel& t) {
  GaussianBelief out;
  out.mean = t.F * belief.mean + t.B;
  out.cov = t.F * belief.cov * t.F.transpose() + t.Q;
  return out;
}

GammaParams predict_rate(const GammaParams& posterior, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::domain_error("forgetting factor must lie in (0, 1]");
  return {posterior.shape * gamma - gamma + 1.0, posterior.scale / gamma};
}

double forgetting_schedule(int n) {
  return 1.0 - 0.1 * std::pow(std::max(1.0, n - 10.0), -0.9);
}

PseudoMeasurement pseudo_measurement(const MeasurementFrame& frame,
                                     const AssociationWeights& weights, int k,
                                     const MeasurementModel& model) {
  if (k < 1 || k > model.object_count())
    throw std::invalid_argument("pseudo_measurement: object component index");
  PseudoMeasurement pm;
  pm.weight = weights.column_sum(k);
  if (pm.weight < kEvidenceFloor) return pm;
  pm.has_evidence = true;
  pm.mean = Eigen::VectorXd::Zero(model.meas_dim());
  for (int j = 0; j < frame.count(); ++j)
    pm.mean += weights.w(j, k) * frame.points[j];
  pm.mean /= pm.weight;
  pm.cov = model.R[k - 1] / pm.weight;
  return pm;
}

GaussianBelief update_state(const GaussianBelief& predicted,
                            const PseudoMeasurement& pseudo,
                            const MeasurementModel& model,
                            KalmanByproducts* byproducts) {
  if (byproducts) *byproducts = {};
  if (!pseudo.has_evidence) return predicted;
  const Eigen::MatrixXd& H = model.H;
  const Eigen::VectorXd innovation = pseudo.mean - H * predicted.mean;
  const Eigen::MatrixXd S = H * predicted.cov * H.transpose() + pseudo.cov;
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("update_state: innovation covariance not SPD");
  const Eigen::MatrixXd gain = llt.solve(H * predicted.cov).transpose();
  GaussianBelief out;
  out.mean = predicted.mean + gain * innovation;
  out.cov = predicted.cov - gain * H * predicted.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  if (byproducts) {
    byproducts->updated = true;
    byproducts->pseudo_mean = pseudo.mean;
    byproducts->pseudo_cov = pseudo.cov;
    byproducts->innovation = innovation;
    byproducts->innovation_cov = S;
  }
  return out;
}

GammaParams update_rate(const GammaParams& predicted, double weight_sum) {
  return {predicted.shape + weight_sum, predicted.scale / (predicted.scale + 1.0)};
}

AssociationWeights init_associations(const MeasurementFrame& frame,
                                     const std::vector<GaussianBelief>& predicted,
                                     const std::vector<double>& rate_estimates,
                                     const MeasurementModel& model) {
  const int K = model.object_count();
  if (static_cast<int>(predicted.size()) != K ||
      static_cast<int>(rate_estimates.size()) != K + 1)
    throw std::invalid_argument("init_associations: inconsistent inputs");
  Eigen::MatrixXd logits(frame.count(), K + 1);
  const double clutter_logit = rate_estimates[0] > 0.0
                                   ? std::log(rate_estimates[0]) - std::log(model.volume())
                                   : kNegInf;
  std::vector<GaussSpec> specs;
  std::vector<Eigen::VectorXd> centers;
  specs.reserve(K);
  centers.reserve(K);
  for (int k = 1; k <= K; ++k) {
    specs.push_back(make_spec(model.H * predicted[k - 1].cov * model.H.transpose() +
                              model.R[k - 1]));
    centers.push_back(model.H * predicted[k - 1].mean);
  }
  for (int j = 0; j < frame.count(); ++j) {
    logits(j, 0) = clutter_logit;
    for (int k = 1; k <= K; ++k)
      logits(j, k) = rate_estimates[k] > 0.0
                         ? std::log(rate_estimates[k]) +
                               log_gauss(frame.points[j], centers[k - 1], specs[k - 1])
                         : kNegInf;
  }
  return normalise_rows(std::move(logits));
}

AssociationWeights update_associations(const MeasurementFrame& frame,
                                       const std::vector<GaussianBelief>& posteriors,
                                       const std::vector<double>& log_weights,
                                       const MeasurementModel& model) {
  const int K = model.object_count();
  if (static_cast<int>(posteriors.size()) != K ||
      static_cast<int>(log_weights.size()) != K + 1)
    throw std::invalid_argument("update_associations: inconsistent inputs");
  Eigen::MatrixXd logits(frame.count(), K + 1);
  const double clutter_logit = log_weights[0] - std::log(model.volume());
  std::vector<GaussSpec> specs;
  std::vector<Eigen::VectorXd> centers;
  std::vector<double> trace_corr(K);
  specs.reserve(K);
  centers.reserve(K);
  for (int k = 1; k <= K; ++k) {
    specs.push_back(make_spec(model.R[k - 1]));
    centers.push_back(model.H * posteriors[k - 1].mean);
    trace_corr[k - 1] =
        -0.5 * (specs.back().inv *
                (model.H * posteriors[k - 1].cov * model.H.transpose()))
                   .trace();
  }
  for (int j = 0; j < frame.count(); ++j) {
    logits(j, 0) = clutter_logit;
    for (int k = 1; k <= K; ++k)
      logits(j, k) = log_weights[k] +
                     log_gauss(frame.points[j], centers[k - 1], specs[k - 1]) +
                     trace_corr[k - 1];
  }
  return normalise_rows(std::move(logits));
}

std::vector<double> log_rate_weights(const std::vector<GammaParams>& posterior_rates) {
  std::vector<double> lw;
  lw.reserve(posterior_rates.size());
  for (const auto& g : posterior_rates)
    lw.push_back(digamma(g.shape) + std::log(g.scale));
  return lw;
}

std::vector<double> log_rate_weights(const RateVector& rates) {
  std::vector<double> lw;
  lw.reserve(rates.rates.size());
  for (double r : rates.rates) lw.push_back(r > 0.0 ? std::log(r) : kNegInf);
  return lw;
}

namespace {

// Measurement-dependent ELBO lines shared by both modes: the quadratic data
// terms, the pseudo-measurement/Kalman line, the clutter-volume line, and the
// -DM/2 log 2pi - log M! constants.
double elbo_measurement_terms(const MeasurementFrame& frame,
                              const AssociationWeights& weights,
                              const std::vector<KalmanByproducts>& byproducts,
                              const MeasurementModel& model) {
  const int K = model.object_count();
  const int M = frame.count();
  const auto D = static_cast<double>(model.meas_dim());
  double elbo = 0.0;
  for (int k = 1; k <= K; ++k) {
    const GaussSpec spec = make_spec(model.R[k - 1]);
    double quad = 0.0, wsum = 0.0;
    for (int j = 0; j < M; ++j) {
      const double q = weights.w(j, k);
      if (q <= 0.0) continue;
      quad += q * frame.points[j].dot(spec.inv * frame.points[j]);
      wsum += q;
    }
    elbo -= 0.5 * (quad + wsum * spec.logdet);
    const auto& b = byproducts[k - 1];
    if (b.updated) {
      const GaussSpec rbar = make_spec(b.pseudo_cov);
      const GaussSpec s = make_spec(b.innovation_cov);
      elbo += 0.5 * (b.pseudo_mean.dot(rbar.inv * b.pseudo_mean) -
                     b.innovation.dot(s.inv * b.innovation) + rbar.logdet - s.logdet);
    }
  }
  elbo += (0.5 * D * kLog2Pi - std::log(model.volume())) * weights.column_sum(0);
  elbo += -0.5 * D * M * kLog2Pi - log_gamma(M + 1.0);
  return elbo;
}

}  // namespace

double compute_elbo(const MeasurementFrame& frame, const AssociationWeights& weights,
                    const std::vector<GammaParams>& posterior_rates,
                    const std::vector<GammaParams>& predicted_rates,
                    const std::vector<KalmanByproducts>& byproducts,
                    const MeasurementModel& model) {
  const int K = model.object_count();
  if (static_cast<int>(posterior_rates.size()) != K + 1 ||
      static_cast<int>(predicted_rates.size()) != K + 1 ||
      static_cast<int>(byproducts.size()) != K)
    throw std::invalid_argument("compute_elbo: inconsistent inputs");
  double elbo = elbo_measurement_terms(frame, weights, byproducts, model);
  std::vector<double> psi_log(K + 1);
  for (int k = 0; k <= K; ++k)
    psi_log[k] = digamma(posterior_rates[k].shape) + std::log(posterior_rates[k].scale);
  for (int j = 0; j < frame.count(); ++j)
    for (int k = 0; k <= K; ++k) {
      const double q = weights.w(j, k);
      if (q > 0.0) elbo += q * (psi_log[k] - std::log(q));
    }
  for (int k = 0; k <= K; ++k) {
    elbo -= posterior_rates[k].mean();
    elbo -= kl_gamma(posterior_rates[k], predicted_rates[k]);
  }
  return elbo;
}

double compute_elbo_known_rate(const MeasurementFrame& frame,
                               const AssociationWeights& weights,
                               const RateVector& rates,
                               const std::vector<KalmanByproducts>& byproducts,
                               const MeasurementModel& model) {
  const int K = model.object_count();
  if (rates.object_count() != K || static_cast<int>(byproducts.size()) != K)
    throw std::invalid_argument("compute_elbo_known_rate: inconsistent inputs");
  double elbo = elbo_measurement_terms(frame, weights, byproducts, model);
  for (int j = 0; j < frame.count(); ++j)
    for (int k = 0; k <= K; ++k) {
      const double q = weights.w(j, k);
      if (q > 0.0) elbo += q * (std::log(rates.rates[k]) - std::log(q));
    }
  elbo -= rates.sum();
  return elbo;
}

namespace {

// Shared Algorithm-1 loop; rate-learning behaviour is toggled by whether
// predicted_rates is non-empty.
StepResult run_cavi(TrackerState& state, const MeasurementFrame& frame,
                    const TransitionModel& transition, const MeasurementModel& model,
                    const std::vector<GammaParams>& predicted_rates,
                    const RateVector* known_rates, const CaviOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const int K = static_cast<int>(state.objects.size());
  const bool learn_rates = known_rates == nullptr;

  StepResult result;
  result.predicted.reserve(K);
  for (const auto& belief : state.objects)
    result.predicted.push_back(predict_belief(belief, transition));

  std::vector<double> rate_estimates;
  if (learn_rates) {
    rate_estimates.reserve(K + 1);
    for (const auto& g : predicted_rates) rate_estimates.push_back(g.mean());
  } else {
    rate_estimates = known_rates->rates;
  }
  AssociationWeights weights =
      init_associations(frame, result.predicted, rate_estimates, model);

  std::vector<GaussianBelief> posteriors = result.predicted;
  std::vector<GammaParams> posterior_rates = predicted_rates;
  std::vector<KalmanByproducts> byproducts(K);
  auto& diag = result.diagnostics;
  for (int i = 1; i <= options.max_sweeps; ++i) {
    if (learn_rates)
      for (int k = 0; k <= K; ++k)
        posterior_rates[k] = update_rate(predicted_rates[k], weights.column_sum(k));
    for (int k = 1; k <= K; ++k)
      posteriors[k - 1] = update_state(result.predicted[k - 1],
                                       pseudo_measurement(frame, weights, k, model),
                                       model, &byproducts[k - 1]);
    const double elbo =
        learn_rates
            ? compute_elbo(frame, weights, posterior_rates, predicted_rates,
                           byproducts, model)
            : compute_elbo_known_rate(frame, weights, *known_rates, byproducts, model);
    diag.elbo_trace.push_back(elbo);
    diag.iterations = i;
    if (i >= 2 && elbo - diag.elbo_trace[i - 2] < options.tolerance) {
      diag.converged = true;
      break;
    }
    weights = update_associations(
        frame, posteriors,
        learn_rates ? log_rate_weights(posterior_rates) : log_rate_weights(*known_rates),
        model);
  }

  state.objects = std::move(posteriors);
  if (learn_rates) state.rate_belief = std::move(posterior_rates);
  result.weights = std::move(weights);
  diag.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return result;
}

}  // namespace

StepResult tracker_step(TrackerState& state, const MeasurementFrame& frame,
                        const TransitionModel& transition,
                        const MeasurementModel& model, double gamma,
                        const CaviOptions& options) {
  if (state.rate_belief.size() != state.objects.size() + 1)
    throw std::invalid_argument("tracker_step: rate belief must cover clutter + objects");
  std::vector<GammaParams> predicted_rates;
  predicted_rates.reserve(state.rate_belief.size());
  for (const auto& g : state.rate_belief)
    predicted_rates.push_back(predict_rate(g, gamma));
  return run_cavi(state, frame, transition, model, predicted_rates, nullptr, options);
}

StepResult known_rate_step(TrackerState& state, const MeasurementFrame& frame,
                           const RateVector& rates,
                           const TransitionModel& transition,
                           const MeasurementModel& model,
                           const CaviOptions& options) {
  if (rates.object_count() != static_cast<int>(state.objects.size()))
    throw std::invalid_argument("known_rate_step: rate count mismatch");
  return run_cavi(state, frame, transition, model, {}, &rates, options);
}

}  // namespace nhpp
