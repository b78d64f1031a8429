// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nhpp/experiment.hpp"

using namespace nhpp;
using Clock = std::chrono::steady_clock;

namespace {

int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 4 : std::min(8, static_cast<int>(n));
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool report(int id, bool pass, const std::string& detail, double secs) {
  std::printf("criterion %2d: %s — %s (%.1f s)\n", id, pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  std::fflush(stdout);
  return pass;
}

MeasurementModel square_model(int objects, double side, double meas_var = 100.0) {
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(2, 4);
  m.H(0, 0) = 1.0;
  m.H(1, 2) = 1.0;
  m.R.assign(objects, meas_var * Eigen::Matrix2d::Identity());
  m.region = {-side / 2.0, side / 2.0, -side / 2.0, side / 2.0};
  return m;
}

TransitionModel cv_model() {
  TransitionModel t;
  t.F = Eigen::Matrix4d::Identity();
  t.F(0, 1) = 1.0;
  t.F(2, 3) = 1.0;
  t.B = Eigen::Vector4d::Zero();
  Eigen::Matrix2d q;
  q << 1.0 / 3.0, 0.5, 0.5, 1.0;
  t.Q = Eigen::Matrix4d::Zero();
  t.Q.block<2, 2>(0, 0) = 25.0 * q;
  t.Q.block<2, 2>(2, 2) = 25.0 * q;
  return t;
}

struct RandomInstance {
  MeasurementModel model;
  MeasurementFrame frame;
  std::vector<GaussianBelief> predicted;
  std::vector<GammaParams> predicted_rates;  // clutter first
  RateVector rates;
};

RandomInstance random_instance(std::mt19937_64& rng, int max_k, int max_m) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> k_dist(1, max_k), m_dist(1, max_m);
  std::uniform_real_distribution<double> rate_dist(1.0, 8.0);
  RandomInstance inst;
  const int K = k_dist(rng), M = m_dist(rng);
  inst.model = square_model(K, 400.0);
  inst.rates.rates.push_back(rate_dist(rng));
  inst.predicted_rates.push_back({2.0 + 3.0 * std::abs(normal(rng)), 1.0});
  for (int k = 0; k < K; ++k) {
    inst.rates.rates.push_back(rate_dist(rng));
    inst.predicted_rates.push_back({2.0 + 3.0 * std::abs(normal(rng)), 0.8});
    GaussianBelief b;
    b.mean = Eigen::Vector4d(60.0 * normal(rng), normal(rng), 60.0 * normal(rng),
                             normal(rng));
    Eigen::Matrix4d a;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) a(r, c) = normal(rng);
    b.cov = 4.0 * a * a.transpose() + Eigen::Matrix4d::Identity();
    inst.predicted.push_back(b);
  }
  for (int j = 0; j < M; ++j)
    inst.frame.points.emplace_back(
        Eigen::Vector2d(80.0 * normal(rng), 80.0 * normal(rng)));
  return inst;
}

// --- fast Gaussian machinery for the Monte-Carlo oracles -------------------

struct PdfSpec {
  Eigen::MatrixXd inv;
  double lognorm = 0.0;  // -0.5 logdet - d/2 log(2 pi)
};

PdfSpec make_pdf(const Eigen::MatrixXd& cov) {
  PdfSpec s;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  s.inv = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  s.lognorm = -0.5 * logdet - 0.5 * cov.rows() * std::log(2.0 * M_PI);
  return s;
}

double log_pdf(const PdfSpec& s, const Eigen::VectorXd& r) {
  return s.lognorm - 0.5 * r.dot(s.inv * r);
}

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

double log_gamma_pdf(const GammaParams& g, double x) {
  return (g.shape - 1.0) * std::log(x) - x / g.scale - std::lgamma(g.shape) -
         g.shape * std::log(g.scale);
}

// MC estimate of the defining ELBO expectation: averages
// log p-hat(Lambda) + log p-hat(X) + log p(Y, M, theta | X, Lambda)
//   - log q(Lambda) - log q(X) - log q(theta)
// over Lambda ~ q(Lambda) (skipped in known-rate mode), X ~ q(X),
// theta ~ q(theta).
McEstimate mc_elbo(const RandomInstance& inst, const AssociationWeights& weights,
                   const std::vector<GaussianBelief>& posteriors,
                   const std::vector<GammaParams>* posterior_rates,
                   bool known_rates, int samples, std::mt19937_64& rng) {
  const int K = inst.model.object_count();
  const int M = inst.frame.count();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Eigen::Matrix4d> chol;
  std::vector<PdfSpec> post_pdf, pred_pdf, meas_pdf;
  std::vector<std::gamma_distribution<double>> gammas;
  for (int k = 0; k < K; ++k) {
    chol.push_back(
        Eigen::LLT<Eigen::Matrix4d>(Eigen::Matrix4d(posteriors[k].cov)).matrixL());
    post_pdf.push_back(make_pdf(posteriors[k].cov));
    pred_pdf.push_back(make_pdf(inst.predicted[k].cov));
    meas_pdf.push_back(make_pdf(inst.model.R[k]));
  }
  if (!known_rates)
    for (int k = 0; k <= K; ++k)
      gammas.emplace_back((*posterior_rates)[k].shape, (*posterior_rates)[k].scale);
  // Per-row cumulative association weights for categorical sampling.
  Eigen::MatrixXd cum(M, K + 1);
  for (int j = 0; j < M; ++j) {
    double acc = 0.0;
    for (int k = 0; k <= K; ++k) cum(j, k) = (acc += weights.w(j, k));
  }
  double log_mfac = 0.0;
  for (int i = 2; i <= M; ++i) log_mfac += std::log(static_cast<double>(i));
  const double log_v = std::log(inst.model.volume());

  // Accumulate deviations from the first sample: a raw sum of 1e6 terms of
  // size |F| carries ~sqrt(n)*eps*|F| rounding error, which dominates the
  // genuine MC error on near-degenerate instances.
  double sum = 0.0, sum2 = 0.0, center = 0.0;
  std::vector<double> lambda(K + 1);
  std::vector<Eigen::Vector4d> x(K);
  for (int s = 0; s < samples; ++s) {
    double v = -log_mfac;
    if (known_rates) {
      for (int k = 0; k <= K; ++k) lambda[k] = inst.rates.rates[k];
    } else {
      for (int k = 0; k <= K; ++k) {
        lambda[k] = gammas[k](rng);
        v += log_gamma_pdf(inst.predicted_rates[k], lambda[k]) -
             log_gamma_pdf((*posterior_rates)[k], lambda[k]);
      }
    }
    for (int k = 0; k <= K; ++k) v -= lambda[k];
    for (int k = 0; k < K; ++k) {
      const Eigen::Vector4d z(normal(rng), normal(rng), normal(rng), normal(rng));
      x[k] = Eigen::Vector4d(posteriors[k].mean) + chol[k] * z;
      v += log_pdf(pred_pdf[k], x[k] - inst.predicted[k].mean) -
           log_pdf(post_pdf[k], x[k] - posteriors[k].mean);
    }
    for (int j = 0; j < M; ++j) {
      const double u = uni(rng) * cum(j, K);
      int k = 0;
      while (k < K && u > cum(j, k)) ++k;
      v += std::log(lambda[k]) - std::log(weights.w(j, k));
      if (k == 0) {
        v -= log_v;
      } else {
        const Eigen::Vector2d mu(x[k - 1](0), x[k - 1](2));
        v += log_pdf(meas_pdf[k - 1], inst.frame.points[j] - mu);
      }
    }
    if (s == 0) center = v;
    const double d = v - center;
    sum += d;
    sum2 += d * d;
  }
  McEstimate out;
  const double dev_mean = sum / samples;
  out.mean = center + dev_mean;
  out.se = std::sqrt(std::max(0.0, sum2 / samples - dev_mean * dev_mean) / samples);
  return out;
}

// --- criteria ---------------------------------------------------------------

bool criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4001);
  CaviOptions opts;
  opts.tolerance = 0.0;
  opts.max_sweeps = 12;
  int violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    RandomInstance inst = random_instance(rng, 3, 30);
    TrackerState learn{inst.predicted, inst.predicted_rates};
    const StepResult a = tracker_step(learn, inst.frame, cv_model(), inst.model,
                                      0.95, opts);
    TrackerState fixed{inst.predicted, {}};
    const StepResult b =
        known_rate_step(fixed, inst.frame, inst.rates, cv_model(), inst.model, opts);
    for (const auto* trace : {&a.diagnostics.elbo_trace, &b.diagnostics.elbo_trace})
      for (std::size_t i = 1; i < trace->size(); ++i)
        if ((*trace)[i] < (*trace)[i - 1] - 1e-8 * std::abs((*trace)[i - 1]))
          ++violations;
  }
  const double secs = seconds_since(t0);
  return report(1, violations == 0 && secs < 10.0,
                "ELBO ascent on 1000 instances, both modes, " +
                    std::to_string(violations) + " violations",
                secs);
}

bool criterion_2() {
  const auto t0 = Clock::now();
  const int samples = 1000000;
  std::vector<std::future<int>> jobs;
  std::atomic<int> next{0};
  const int instances = 50;
  for (int w = 0; w < hardware_threads(); ++w)
    jobs.push_back(std::async(std::launch::async, [&]() {
      int fails = 0;
      for (int i; (i = next.fetch_add(1)) < instances;) {
        std::mt19937_64 rng(child_seed(5000, i + 1));
        RandomInstance inst = random_instance(rng, 2, 5);
        const int K = inst.model.object_count();
        std::normal_distribution<double> normal(0.0, 1.0);

        // CAVI-consistent state: init, rate update, state update.
        std::vector<double> est;
        for (const auto& g : inst.predicted_rates) est.push_back(g.mean());
        AssociationWeights weights =
            init_associations(inst.frame, inst.predicted, est, inst.model);
        std::vector<GammaParams> post_rates(K + 1);
        for (int k = 0; k <= K; ++k)
          post_rates[k] =
              update_rate(inst.predicted_rates[k], weights.column_sum(k));
        std::vector<GaussianBelief> posteriors(K);
        std::vector<KalmanByproducts> byproducts(K);
        for (int k = 1; k <= K; ++k)
          posteriors[k - 1] = update_state(
              inst.predicted[k - 1],
              pseudo_measurement(inst.frame, weights, k, inst.model), inst.model,
              &byproducts[k - 1]);

        // Efficient ELBO vs the defining expectation, both modes.
        const double learn = compute_elbo(inst.frame, weights, post_rates,
                                          inst.predicted_rates, byproducts,
                                          inst.model);
        McEstimate mc = mc_elbo(inst, weights, posteriors, &post_rates, false,
                                samples, rng);
        // The 1e-6 relative floor absorbs rounding in the closed form's
        // cancellation-heavy terms on weight-degenerate instances, where the
        // MC standard error collapses below double precision.
        if (std::abs(learn - mc.mean) > 3.0 * mc.se + 1e-6 * (1.0 + std::abs(learn)))
          ++fails;
        const double fixed = compute_elbo_known_rate(inst.frame, weights,
                                                     inst.rates, byproducts,
                                                     inst.model);
        mc = mc_elbo(inst, weights, posteriors, nullptr, true, samples, rng);
        if (std::abs(fixed - mc.mean) > 3.0 * mc.se + 1e-6 * (1.0 + std::abs(fixed)))
          ++fails;

        // Association update logits, measurement 0, each object column.
        const AssociationWeights wu = update_associations(
            inst.frame, posteriors, log_rate_weights(post_rates), inst.model);
        for (int k = 1; k <= K; ++k) {
          const Eigen::Matrix4d chol = Eigen::LLT<Eigen::Matrix4d>(
                                           Eigen::Matrix4d(posteriors[k - 1].cov))
                                           .matrixL();
          const PdfSpec meas = make_pdf(inst.model.R[k - 1]);
          std::gamma_distribution<double> gk(post_rates[k].shape,
                                             post_rates[k].scale);
          std::gamma_distribution<double> g0(post_rates[0].shape,
                                             post_rates[0].scale);
          double sum = 0.0, sum2 = 0.0;
          for (int s = 0; s < samples; ++s) {
            const Eigen::Vector4d z(normal(rng), normal(rng), normal(rng),
                                    normal(rng));
            const Eigen::Vector4d x =
                Eigen::Vector4d(posteriors[k - 1].mean) + chol * z;
            const double v =
                std::log(gk(rng)) +
                log_pdf(meas, inst.frame.points[0] - Eigen::Vector2d(x(0), x(2))) -
                (std::log(g0(rng)) - std::log(inst.model.volume()));
            sum += v;
            sum2 += v * v;
          }
          const double mean = sum / samples;
          const double se =
              std::sqrt(std::max(0.0, sum2 / samples - mean * mean) / samples);
          const double logit = std::log(wu.w(0, k)) - std::log(wu.w(0, 0));
          if (std::abs(logit - mean) > 3.0 * se) ++fails;
        }

        // Initialisation law: the object weight carries the predictive
        // marginal E_X N(Y; HX, R).
        const AssociationWeights wi =
            init_associations(inst.frame, inst.predicted, est, inst.model);
        for (int k = 1; k <= K; ++k) {
          const double marginal = (wi.w(0, k) / wi.w(0, 0)) *
                                  (est[0] / inst.model.volume()) / est[k];
          if (marginal < 1e-12) continue;  // spike-dominated MC regime
          const Eigen::Matrix4d chol = Eigen::LLT<Eigen::Matrix4d>(
                                           Eigen::Matrix4d(inst.predicted[k - 1].cov))
                                           .matrixL();
          const PdfSpec meas = make_pdf(inst.model.R[k - 1]);
          double sum = 0.0, sum2 = 0.0;
          for (int s = 0; s < samples; ++s) {
            const Eigen::Vector4d z(normal(rng), normal(rng), normal(rng),
                                    normal(rng));
            const Eigen::Vector4d x =
                Eigen::Vector4d(inst.predicted[k - 1].mean) + chol * z;
            const double v = std::exp(
                log_pdf(meas, inst.frame.points[0] - Eigen::Vector2d(x(0), x(2))));
            sum += v;
            sum2 += v * v;
          }
          const double mean = sum / samples;
          const double se =
              std::sqrt(std::max(0.0, sum2 / samples - mean * mean) / samples);
          if (std::abs(marginal - mean) > 3.0 * se) ++fails;
        }
      }
      return fails;
    }));
  int fails = 0;
  for (auto& j : jobs) fails += j.get();
  const double secs = seconds_since(t0);
  return report(2, fails == 0 && secs < 300.0,
                "ELBO/association/init MC oracles on 50 instances, " +
                    std::to_string(fails) + " mismatches",
                secs);
}

bool criterion_3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> m_dist(0, 6), k_dist(0, 2);
  std::uniform_real_distribution<double> rate_dist(0.5, 6.0);
  int fails = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int M = m_dist(rng), K = k_dist(rng);
    const MeasurementModel model = square_model(K, 200.0);
    RateVector rates;
    rates.rates.push_back(rate_dist(rng));
    for (int k = 0; k < K; ++k) rates.rates.push_back(rate_dist(rng));
    std::vector<Eigen::VectorXd> states;
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd x(4);
      x << 40.0 * normal(rng), 0.0, 40.0 * normal(rng), 0.0;
      states.push_back(x);
    }
    MeasurementFrame frame;
    for (int j = 0; j < M; ++j)
      frame.points.emplace_back(
          Eigen::Vector2d(30.0 * normal(rng), 30.0 * normal(rng)));
    const double direct = joint_nhpp_log_likelihood(frame, states, rates, model);
    // Enumeration over all association maps.
    const double log_sum_rate = std::log(rates.sum());
    double log_mfac = 0.0;
    for (int i = 2; i <= M; ++i) log_mfac += std::log(static_cast<double>(i));
    std::vector<int> theta(M, 0);
    std::vector<double> terms;
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
      double lp = -rates.sum() - log_mfac;
      for (int j = 0; j < M; ++j) {
        const int k = theta[j];
        lp += std::log(rates.rates[k]) - log_sum_rate;
        lp += emission_log_likelihood(frame.points[j], k,
                                      k == 0 ? Eigen::VectorXd() : states[k - 1],
                                      model);
      }
      lp += M * log_sum_rate;  // Poisson cardinality factor
      terms.push_back(lp);
      best = std::max(best, lp);
      int j = 0;
      while (j < M && ++theta[j] > K) theta[j++] = 0;
      if (j == M) break;
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    const double enumerated = best + std::log(acc);
    if (std::abs(direct - enumerated) > 1e-10 * std::max(1.0, std::abs(direct)))
      ++fails;
  }
  return report(3, fails == 0,
                "marginalisation identity by enumeration on 100 instances, " +
                    std::to_string(fails) + " mismatches",
                seconds_since(t0));
}

bool criterion_4() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> n_dist(1, 8), d_dist(1, 6);
  int fails = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int N = n_dist(rng), D = d_dist(rng);
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
    for (int i = 0; i < N; ++i) {
      Eigen::VectorXd m(D);
      for (int d = 0; d < D; ++d) m(d) = 5.0 * normal(rng);
      Eigen::MatrixXd a(D, D);
      for (int r = 0; r < D; ++r)
        for (int c = 0; c < D; ++c) a(r, c) = normal(rng);
      means.push_back(m);
      covs.push_back(a * a.transpose() + Eigen::MatrixXd::Identity(D, D));
    }
    const QuadraticSum s = sum_quadratic_forms(means, covs);
    const Eigen::MatrixXd sum_inv =
        Eigen::LLT<Eigen::MatrixXd>(s.cov).solve(Eigen::MatrixXd::Identity(D, D));
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd x(D);
      for (int d = 0; d < D; ++d) x(d) = 8.0 * normal(rng);
      double lhs = 0.0;
      for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd r = x - means[i];
        lhs -= 0.5 * r.dot(Eigen::LLT<Eigen::MatrixXd>(covs[i]).solve(r));
      }
      const Eigen::VectorXd r = x - s.mean;
      const double rhs = -0.5 * r.dot(sum_inv * r) + s.constant;
      if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(lhs))) ++fails;
    }
  }
  return report(4, fails == 0,
                "quadratic-form collapse pointwise on 100 instances, " +
                    std::to_string(fails) + " residuals over 1e-10",
                seconds_since(t0));
}

long double poisson_cdf_exact(double lambda, int m) {
  long double term = std::exp((long double)(-lambda));
  long double acc = term;
  for (int i = 1; i <= m; ++i) {
    term *= (long double)lambda / i;
    acc += term;
  }
  return acc;
}

bool criterion_5() {
  const auto t0 = Clock::now();
  bool ok = true;
  const LossThresholds loss = select_loss_params(5.0, 7e-4);
  ok = ok && loss.window == 2 && loss.m_los > 1.0 && loss.m_los < 2.0;
  // Bracketing integers by direct pmf summation.
  ok = ok && poisson_cdf_exact(10.0, 1) < 7e-4 && 7e-4 < poisson_cdf_exact(10.0, 2);
  const RelocationThresholds r5 = select_reloc_thresholds(5.0, 0.5);
  const RelocationThresholds r6 = select_reloc_thresholds(6.0, 0.5);
  ok = ok && r5.m_reloc > 4.0 && r5.m_reloc < 5.0;
  ok = ok && r6.m_reloc > 5.0 && r6.m_reloc < 6.0;
  ok = ok && poisson_cdf_exact(5.0, 4) < 0.5 && 0.5 < poisson_cdf_exact(5.0, 5);
  ok = ok && poisson_cdf_exact(6.0, 5) < 0.5 && 0.5 < poisson_cdf_exact(6.0, 6);
  // Interpolant hits the exact CDF at every integer knot.
  for (double lambda : {5.0, 10.0, 12.0}) {
    const InterpolatedPoissonCdf cdf(lambda);
    for (int m = 0; m < cdf.knot_count(); ++m) {
      const long double exact = poisson_cdf_exact(lambda, m);
      if (std::abs((double)(cdf.evaluate(m) - exact)) >
          1e-12 * std::max(1.0, (double)exact))
        ok = false;
    }
  }
  return report(5, ok, "loss/relocation threshold recipes and CDF knots",
                seconds_since(t0));
}

bool criterion_6() {
  const auto t0 = Clock::now();
  std::atomic<int> next{0}, good{0};
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < hardware_threads(); ++w)
    jobs.push_back(std::async(std::launch::async, [&]() {
      for (int i; (i = next.fetch_add(1)) < 100;) {
        const RelocateDemoResult res = run_relocate_demo(1000 + i, 2.0, 35.0);
        if (res.success) good.fetch_add(1);
      }
    }));
  for (auto& j : jobs) j.get();
  const double secs = seconds_since(t0);
  return report(6, good >= 80 && secs < 300.0,
                "relocation demo success " + std::to_string(good.load()) + "/100",
                secs);
}

bool criterion_7() {
  const auto t0 = Clock::now();
  ExperimentConfig base;
  base.preset = "moderate";
  base.threads = hardware_threads();

  ExperimentConfig k5 = base;
  k5.object_count = 5;
  k5.datasets = 20;
  k5.mode = "vb-relo";
  k5.seed = 7;
  const double mean5 = run_experiment(k5).summary.ospa_mean;
  const bool in_band = mean5 >= 5.0 && mean5 <= 7.0;

  int wins = 0;
  for (std::uint64_t seed = 101; seed <= 110; ++seed) {
    ExperimentConfig relo = base;
    relo.object_count = 10;
    relo.datasets = 12;
    relo.seed = seed;
    relo.mode = "vb-relo";
    ExperimentConfig vb = relo;
    vb.mode = "vb";
    if (run_experiment(vb).summary.ospa_mean >
        run_experiment(relo).summary.ospa_mean)
      ++wins;
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "K=5 grand-mean OSPA %.3f in [5.0, 7.0]; K=10 paired-seed "
                "strict wins %d/10",
                mean5, wins);
  return report(7, in_band && wins >= 8 && secs < 1200.0, buf, secs);
}

bool criterion_8() {
  const auto t0 = Clock::now();
  ExperimentConfig relo;
  relo.preset = "coalescence";
  relo.object_count = 8;
  relo.datasets = 10;
  relo.seed = 29;
  relo.threads = hardware_threads();
  relo.mode = "vb-relo";
  ExperimentConfig vb = relo;
  vb.mode = "vb";
  const ExperimentResult a = run_experiment(relo);
  const ExperimentResult b = run_experiment(vb);
  auto final10 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = v.size() - 10; i < v.size(); ++i) s += v[i];
    return s / 10.0;
  };
  int wins = 0;
  for (int d = 0; d < 10; ++d)
    if (final10(a.datasets[d].ospa) <= final10(b.datasets[d].ospa)) ++wins;
  return report(8, wins >= 8,
                "coalescence final-10-step OSPA: vb-relo <= vb in " +
                    std::to_string(wins) + "/10 paired datasets",
                seconds_since(t0));
}

bool criterion_9() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.preset = "rate_estimation";
  cfg.object_count = 10;
  cfg.mode = "vb-rate-learning";
  cfg.datasets = 5;
  cfg.seed = 17;
  cfg.threads = hardware_threads();
  const ExperimentResult res = run_experiment(cfg);
  int good_datasets = 0;
  for (int d = 0; d < 5; ++d) {
    const ScenarioConfig truth =
        preset_config("rate_estimation", 10, child_seed(cfg.seed, d + 1));
    const auto& rates = res.datasets[d].final_rates;
    if (rates.size() != 11) continue;
    int good = 0;
    for (int k = 0; k < 10; ++k) {
      const double target = truth.object_rates[k];
      if (std::abs(rates[k + 1].mean() - target) <=
          std::max(0.5, 0.15 * target))
        ++good;
    }
    const bool clutter_ok = std::abs(rates[0].mean() - 5240.0) <= 52.4;
    if (good >= 9 && clutter_ok) ++good_datasets;
  }
  const double secs = seconds_since(t0);
  return report(9, good_datasets >= 4 && secs < 600.0,
                "rate estimation converged in " + std::to_string(good_datasets) +
                    "/5 datasets",
                secs);
}

bool criterion_10() {
  const auto t0 = Clock::now();
  const Dataset data = preset("moderate", 10, child_seed(4242, 1));
  const MeasurementModel model = data.config.measurement_model();
  const TransitionModel trans = data.config.transition_model();
  const RateVector rates = data.config.rate_vector();
  TrackerState state;
  for (const auto& x : data.truth.states[0])
    state.objects.push_back(
        {x, 0.01 * Eigen::Matrix4d::Identity()});
  double total_ms = 0.0;
  int steps = 0;
  double avg_m = 0.0;
  for (int n = 0; n < 20; ++n) {
    const auto s0 = Clock::now();
    known_rate_step(state, data.frames[n], rates, trans, model);
    total_ms += 1e3 * seconds_since(s0);
    avg_m += data.frames[n].count();
    ++steps;
  }
  const double per_step = total_ms / steps;
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "known-rate step K=10, M~%.0f: %.1f ms single-threaded",
                avg_m / steps, per_step);
  return report(10, per_step < 50.0, buf, seconds_since(t0));
}

bool criterion_11() {
  const auto t0 = Clock::now();
  // Loss-free regime: 5 well-separated slow objects, moderate clutter.
  // 80 datasets x 25 steps x 5 objects = 1e4 object-steps.
  std::atomic<int> next{0}, alarms{0}, object_steps{0};
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < hardware_threads(); ++w)
    jobs.push_back(std::async(std::launch::async, [&]() {
      for (int d; (d = next.fetch_add(1)) < 80;) {
        ScenarioConfig cfg;
        cfg.object_count = 5;
        cfg.steps = 25;
        cfg.initial_radius = 750.0;
        cfg.initial_speed = 0.0;
        cfg.angle_layout = AngleLayout::kEquallySpaced;
        cfg.object_rates.assign(5, 5.0);
        cfg.clutter_density = 1e-4;
        cfg.region_side = 2788.0;
        cfg.process_noise_scale = 1.0;
        Dataset data;
        data.config = cfg;
        data.truth = generate_truth(cfg, child_seed(6000, 2 * d + 1));
        data.frames = generate_frames(data.truth, cfg, child_seed(6000, 2 * d + 2));
        ExperimentConfig exp;
        exp.mode = "vb-relo";
        const DatasetResult res = run_dataset(exp, data);
        int a = 0;
        for (int n : res.n_lost) a += n;
        alarms.fetch_add(a);
        object_steps.fetch_add(5 * 25);
      }
    }));
  for (auto& j : jobs) j.get();
  const double rate = static_cast<double>(alarms) / object_steps;
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "false-alarm rate %.2e over %d object-steps (bound 3.5e-3)",
                rate, object_steps.load());
  return report(11, rate <= 5.0 * 7e-4, buf, seconds_since(t0));
}

}  // namespace

int main() {
  int failed = 0;
  failed += !criterion_1();
  failed += !criterion_2();
  failed += !criterion_3();
  failed += !criterion_4();
  failed += !criterion_5();
  failed += !criterion_6();
  failed += !criterion_7();
  failed += !criterion_8();
  failed += !criterion_9();
  failed += !criterion_10();
  failed += !criterion_11();
  if (failed == 0)
    std::printf("all 11 acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", failed);
  return failed == 0 ? 0 : 1;
}
