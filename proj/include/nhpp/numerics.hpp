#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nhpp {

/// Gamma distribution in shape/scale form: mean = shape * scale.
struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;
  double mean() const { return shape * scale; }
};

/// Gaussian with explicit mean and covariance.
struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::Index dim() const { return mean.size(); }
};

/// Digamma psi(x) for x > 0. Upward recurrence to x >= 10, then the
/// asymptotic (Bernoulli) series. Throws std::domain_error otherwise.
double digamma(double x);

/// log Gamma(x) for x > 0, same recurrence + Stirling series scheme.
double log_gamma(double x);

/// Continuous, strictly increasing interpolant of the Poisson(lambda) CDF.
/// Monotone piecewise cubic (Fritsch-Carlson) through the exact CDF values
/// at integer knots 0..ceil(lambda + 12*sqrt(lambda) + 20). Internally the
/// survival function is interpolated so the deep upper tail keeps full
/// relative precision.
class InterpolatedPoissonCdf {
 public:
  explicit InterpolatedPoissonCdf(double lambda);

  double rate() const { return lambda_; }
  /// F~(m) for m >= 0; equals the exact CDF at integer knots.
  double evaluate(double m) const;
  /// Complement 1 - F~(m), accurate in the upper tail.
  double survival(double m) const;
  /// Unique x with F~(x) = p. Throws std::range_error if p <= F~(0) or p >= 1.
  double invert(double p) const;
  /// Number of interpolation knots (0..knot_count()-1).
  int knot_count() const { return static_cast<int>(surv_.size()); }

 private:
  double survival_interp(double m) const;
  double lambda_ = 1.0;
  double f0_ = 0.0;                // exp(-lambda)
  std::vector<double> surv_;       // survival at integer knots
  std::vector<double> slope_;      // interpolant derivatives at knots
  double tail_ratio_ = 0.5;        // geometric extension beyond the last knot
};

/// Result of collapsing a sum of Gaussian quadratic forms into one:
/// sum_i -1/2 (x - m_i)' C_i^{-1} (x - m_i)
///   = -1/2 (x - mean)' cov^{-1} (x - mean) + constant.
struct QuadraticSum {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double constant = 0.0;
};

QuadraticSum sum_quadratic_forms(const std::vector<Eigen::VectorXd>& means,
                                 const std::vector<Eigen::MatrixXd>& covs);

/// Common covariance with per-term positive weights: C_i = common_cov / w_i.
QuadraticSum sum_quadratic_forms(const std::vector<Eigen::VectorXd>& means,
                                 const Eigen::MatrixXd& common_cov,
                                 const std::vector<double>& weights);

/// KL(q || p) between Gamma distributions (shape/scale form), closed form.
double kl_gamma(const GammaParams& q, const GammaParams& p);

/// KL(q || p) between multivariate Gaussians, closed form.
double kl_gaussian(const GaussianParams& q, const GaussianParams& p);

/// log N(y; mu, cov) with SPD cov.
double gaussian_log_pdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                        const Eigen::MatrixXd& cov);

}  // namespace nhpp
