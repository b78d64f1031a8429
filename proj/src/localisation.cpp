#include "nhpp/localisation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nhpp/parallel.hpp"

namespace nhpp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEvidenceFloor = 1e-12;

struct GaussSpec {
  Eigen::MatrixXd inv;
  double logdet = 0.0;
};

GaussSpec make_spec(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("localisation covariance not SPD");
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

void normalise_rows_inplace(const Eigen::MatrixXd& logits, Eigen::MatrixXd& out) {
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    const double mx = logits.row(j).maxCoeff();
    if (!std::isfinite(mx)) {
      out.row(j).setZero();
      out(j, 0) = 1.0;
      continue;
    }
    double total = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      const double e = std::exp(logits(j, k) - mx);
      out(j, k) = e;
      total += e;
    }
    out.row(j) /= total;
  }
}

}  // namespace

InitGrid build_init_grid(const GaussianParams& positional_prior,
                         const Eigen::Matrix2d& C) {
  if (positional_prior.dim() != 2)
    throw std::invalid_argument("build_init_grid: positional prior must be 2-d");
  InitGrid grid;
  grid.init_cov = C;
  grid.prior_mean = positional_prior.mean;
  grid.prior_cov = positional_prior.cov;

  // Whiten by chol(C): init ellipses become circles of radius r.
  const Eigen::Matrix2d L = Eigen::LLT<Eigen::Matrix2d>(C).matrixL();
  const Eigen::Matrix2d Linv = L.inverse();
  const Eigen::Matrix2d prior_w =
      Linv * positional_prior.cov * Linv.transpose();
  const double r = std::sqrt(kChi2Quantile2d);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(prior_w);
  const double max_eval = eig.eigenvalues().maxCoeff();
  if (max_eval * kChi2Quantile2d <= r * r) {
    grid.centers.push_back(grid.prior_mean);  // one init circle suffices
    return grid;
  }

  // Dense boundary of the whitened prior ellipse for intersection tests.
  const Eigen::Matrix2d A = Eigen::LLT<Eigen::Matrix2d>(prior_w).matrixL();
  const int boundary_n = 512;
  std::vector<Eigen::Vector2d> boundary(boundary_n);
  for (int i = 0; i < boundary_n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / boundary_n;
    boundary[i] = std::sqrt(kChi2Quantile2d) * (A * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  const GaussSpec prior_spec = make_spec(prior_w);
  auto keep = [&](const Eigen::Vector2d& u) {
    if (u.dot(prior_spec.inv * u) <= kChi2Quantile2d) return true;
    for (const auto& b : boundary)
      if ((u - b).squaredNorm() <= r * r) return true;
    return false;
  };

  // Hexagonal covering lattice: circles of radius r cover the plane at
  // spacing r*sqrt(3), rows 1.5*r apart with alternate rows offset by half.
  const double spacing = r * std::sqrt(3.0);
  const double row_height = 1.5 * r;
  const double extent = std::sqrt(kChi2Quantile2d * max_eval) + spacing;
  const int rows = static_cast<int>(std::ceil(extent / row_height));
  const int cols = static_cast<int>(std::ceil(extent / spacing));
  for (int iy = -rows; iy <= rows; ++iy)
    for (int ix = -cols; ix <= cols; ++ix) {
      Eigen::Vector2d u(ix * spacing + (iy & 1 ? spacing / 2.0 : 0.0),
                        iy * row_height);
      if (keep(u)) grid.centers.push_back(grid.prior_mean + L * u);
    }
  if (grid.centers.empty()) grid.centers.push_back(grid.prior_mean);
  return grid;
}

std::vector<int> filter_eligible_inits(const InitGrid& grid,
                                       const MeasurementFrame& frame,
                                       double m_init) {
  const GaussSpec spec = make_spec(grid.init_cov);
  std::vector<int> eligible;
  for (std::size_t s = 0; s < grid.centers.size(); ++s) {
    int count = 0;
    for (const auto& y : frame.points) {
      const Eigen::Vector2d r = y.head<2>() - grid.centers[s];
      if (r.dot(spec.inv * r) <= kChi2Quantile2d) ++count;
    }
    if (count >= m_init) eligible.push_back(static_cast<int>(s));
  }
  return eligible;
}

double reloc_elbo(int h, const MeasurementFrame& frame,
                  const AssociationWeights& weights, const GaussianBelief& belief,
                  const std::vector<GaussianBelief>& posteriors,
                  const GaussianBelief& prior, const RateVector& rates,
                  const MeasurementModel& model) {
  const int K = model.object_count();
  const double log_sum = std::log(rates.sum());
  double elbo = 0.0;
  // -KL(q(theta) || p(theta|M,Lambda))
  for (int j = 0; j < frame.count(); ++j)
    for (int k = 0; k <= K; ++k) {
      const double q = weights.w(j, k);
      if (q > 0.0) elbo += q * (std::log(rates.rates[k]) - log_sum - std::log(q));
    }
  // -KL(q(X_h) || prior)
  elbo -= kl_gaussian({belief.mean, belief.cov}, {prior.mean, prior.cov});
  // E log p(Y | theta, X) with fixed posteriors for k != h
  elbo -= std::log(model.volume()) * weights.column_sum(0);
  for (int k = 1; k <= K; ++k) {
    const GaussianBelief& b = (k - 1 == h) ? belief : posteriors[k - 1];
    const GaussSpec spec = make_spec(model.R[k - 1]);
    const Eigen::VectorXd center = model.H * b.mean;
    const double trace_corr =
        -0.5 * (spec.inv * (model.H * b.cov * model.H.transpose())).trace();
    for (int j = 0; j < frame.count(); ++j) {
      const double q = weights.w(j, k);
      if (q > 0.0)
        elbo += q * (log_gauss(frame.points[j], center, spec) + trace_corr);
    }
  }
  return elbo;
}

LocalisationResult localise_single(int h, const MeasurementFrame& frame,
                                   const std::vector<GaussianBelief>& posteriors,
                                   const std::vector<GaussianBelief>& predicted,
                                   const GaussianBelief& prior,
                                   const RateVector& rates,
                                   const MeasurementModel& model,
                                   const Eigen::Vector2d& init_center,
                                   const Eigen::Matrix2d& C,
                                   const CaviOptions& options) {
  const int K = model.object_count();
  if (h < 0 || h >= K) throw std::invalid_argument("localise_single: object index");
  const int M = frame.count();

  // Initial association law: predictive form for k != h, N(m_s, C + R_h) for h.
  Eigen::MatrixXd logits(M, K + 1);
  const double log_v = std::log(model.volume());
  auto log_rate = [&](int k) {
    return rates.rates[k] > 0.0 ? std::log(rates.rates[k]) : kNegInf;
  };
  for (int k = 1; k <= K; ++k) {
    GaussSpec spec;
    Eigen::VectorXd center;
    if (k - 1 == h) {
      spec = make_spec(C + model.R[k - 1]);
      center = init_center;
    } else {
      spec = make_spec(model.H * predicted[k - 1].cov * model.H.transpose() +
                       model.R[k - 1]);
      center = model.H * predicted[k - 1].mean;
    }
    for (int j = 0; j < M; ++j)
      logits(j, k) = log_rate(k) + log_gauss(frame.points[j], center, spec);
  }
  for (int j = 0; j < M; ++j) logits(j, 0) = log_rate(0) - log_v;

  const GaussSpec spec_h = make_spec(model.R[h]);

  LocalisationResult result;
  result.weights.w = Eigen::MatrixXd::Zero(M, K + 1);
  normalise_rows_inplace(logits, result.weights.w);
  result.belief = prior;

  // Fixed association logits for the theta update (k != h and clutter).
  Eigen::MatrixXd update_logits(M, K + 1);
  for (int j = 0; j < M; ++j) update_logits(j, 0) = log_rate(0) - log_v;
  for (int k = 1; k <= K; ++k) {
    if (k - 1 == h) continue;
    const GaussSpec spec = make_spec(model.R[k - 1]);
    const Eigen::VectorXd center = model.H * posteriors[k - 1].mean;
    const double trace_corr =
        -0.5 * (spec.inv * (model.H * posteriors[k - 1].cov * model.H.transpose()))
                   .trace();
    for (int j = 0; j < M; ++j)
      update_logits(j, k) =
          log_rate(k) + log_gauss(frame.points[j], center, spec) + trace_corr;
  }

  for (int i = 1; i <= options.max_sweeps; ++i) {
    result.belief = update_state(
        prior, pseudo_measurement(frame, result.weights, h + 1, model), model);
    const double elbo = reloc_elbo(h, frame, result.weights, result.belief,
                                   posteriors, prior, rates, model);
    result.elbo_trace.push_back(elbo);
    result.iterations = i;
    if (i >= 2 && elbo - result.elbo_trace[i - 2] < options.tolerance) {
      result.converged = true;
      break;
    }
    const Eigen::VectorXd center = model.H * result.belief.mean;
    const double trace_corr =
        -0.5 *
        (spec_h.inv * (model.H * result.belief.cov * model.H.transpose())).trace();
    for (int j = 0; j < M; ++j)
      update_logits(j, h + 1) =
          log_rate(h + 1) + log_gauss(frame.points[j], center, spec_h) + trace_corr;
    normalise_rows_inplace(update_logits, result.weights.w);
  }
  result.elbo = result.elbo_trace.empty() ? kNegInf : result.elbo_trace.back();
  return result;
}

std::vector<RelocationOutcome> relocate_all(
    const std::vector<int>& missed, const MeasurementFrame& frame,
    std::vector<GaussianBelief>& beliefs,
    const std::vector<GaussianBelief>& predicted, AssociationWeights& weights,
    const RateVector& rates,
    const std::function<GaussianBelief(int)>& prior_builder,
    const std::vector<RelocationThresholds>& thresholds, const Eigen::Matrix2d& C,
    const MeasurementModel& model, const CaviOptions& options, int threads) {
  std::vector<int> order = missed;
  std::sort(order.begin(), order.end());
  std::vector<GaussianBelief> predicted_local = predicted;
  std::vector<RelocationOutcome> outcomes;
  outcomes.reserve(order.size());

  for (int h : order) {
    RelocationOutcome outcome;
    outcome.object = h;
    const GaussianBelief prior = prior_builder(h);
    GaussianParams positional{model.H * prior.mean,
                              model.H * prior.cov * model.H.transpose()};
    const InitGrid grid = build_init_grid(positional, C);
    outcome.grid_size = static_cast<int>(grid.centers.size());
    const std::vector<int> eligible =
        filter_eligible_inits(grid, frame, thresholds[h].m_init);

    if (eligible.empty()) {
      beliefs[h] = prior;
      predicted_local[h] = prior;
      outcomes.push_back(std::move(outcome));
      continue;
    }
    outcome.attempted = true;

    std::vector<LocalisationResult> results(eligible.size());
    parallel_for(static_cast<int>(eligible.size()), threads, [&](int i) {
      results[i] =
          localise_single(h, frame, beliefs, predicted_local, prior, rates, model,
                          grid.centers[eligible[i]], C, options);
    });

    int best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
      if (results[i].elbo > results[best].elbo) best = static_cast<int>(i);
    outcome.winner = eligible[best];
    outcome.elbo = results[best].elbo;
    outcome.evidence = results[best].weights.column_sum(h + 1);
    outcome.accepted = outcome.evidence >= thresholds[h].m_reloc;
    outcome.inits.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i)
      outcome.inits.push_back({eligible[i], grid.centers[eligible[i]],
                               results[i].elbo, results[i].belief,
                               results[i].iterations, results[i].converged});

    if (outcome.accepted) {
      beliefs[h] = results[best].belief;
      predicted_local[h] = results[best].belief;
    } else {
      beliefs[h] = prior;
      predicted_local[h] = prior;
    }
    outcomes.push_back(std::move(outcome));
  }

  weights = update_associations(frame, beliefs, log_rate_weights(rates), model);
  return outcomes;
}

}  // namespace nhpp
