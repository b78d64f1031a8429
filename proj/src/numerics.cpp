#include "nhpp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nhpp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_positive(double x, const char* what) {
  if (!std::isfinite(x) || x <= 0.0)
    throw std::domain_error(std::string(what) + " must be positive and finite");
}
}  // namespace

double digamma(double x) {
  check_positive(x, "digamma argument");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
  const double series =
      std::log(x) - 0.5 * inv -
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0))))));
  return acc + series;
}

double log_gamma(double x) {
  check_positive(x, "log_gamma argument");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling series: sum B_{2n} / (2n(2n-1) x^{2n-1})
  const double series =
      inv * (1.0 / 12.0 -
             inv2 * (1.0 / 360.0 -
                     inv2 * (1.0 / 1260.0 -
                             inv2 * (1.0 / 1680.0 -
                                     inv2 * (1.0 / 1188.0 -
                                             inv2 * (691.0 / 360360.0))))));
  return shift + 0.5 * kLog2Pi + (x - 0.5) * std::log(x) - x + series;
}

InterpolatedPoissonCdf::InterpolatedPoissonCdf(double lambda) : lambda_(lambda) {
  check_positive(lambda, "Poisson rate");
  f0_ = std::exp(-lambda);
  const int n = static_cast<int>(std::ceil(lambda + 12.0 * std::sqrt(lambda) + 20.0));
  const int tail = n + static_cast<int>(std::ceil(10.0 * std::sqrt(lambda) + 40.0));
  const double log_lambda = std::log(lambda);
  auto log_pmf = [&](int i) {
    return -lambda + i * log_lambda - log_gamma(i + 1.0);
  };
  // Survival S(m) = P(X > m), accumulated from the far tail downward so the
  // upper tail keeps full relative precision.
  surv_.assign(n + 1, 0.0);
  double s = 0.0;
  for (int i = tail; i > n; --i) s += std::exp(log_pmf(i));
  surv_[n] = s;
  for (int m = n - 1; m >= 0; --m) surv_[m] = surv_[m + 1] + std::exp(log_pmf(m + 1));

  // Fritsch-Carlson monotone slopes on the (decreasing) survival values.
  slope_.assign(n + 1, 0.0);
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = surv_[i + 1] - surv_[i];
  for (int i = 1; i < n; ++i) {
    if (d[i - 1] == 0.0 || d[i] == 0.0 || (d[i - 1] < 0.0) != (d[i] < 0.0))
      slope_[i] = 0.0;
    else
      slope_[i] = 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]);
  }
  auto endpoint = [](double d0, double d1) {
    double m = 1.5 * d0 - 0.5 * d1;  // one-sided three-point estimate
    if ((m < 0.0) != (d0 < 0.0)) return 0.0;
    if (std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return m;
  };
  slope_[0] = n > 1 ? endpoint(d[0], d[1]) : d[0];
  slope_[n] = n > 1 ? endpoint(d[n - 1], d[n - 2]) : d[n - 1];

  tail_ratio_ = surv_[n - 1] > 0.0 ? std::min(surv_[n] / surv_[n - 1], 0.999) : 0.5;
  if (tail_ratio_ <= 0.0) tail_ratio_ = 0.5;
}

double InterpolatedPoissonCdf::survival_interp(double m) const {
  const int n = static_cast<int>(surv_.size()) - 1;
  if (m >= n) return surv_[n] * std::pow(tail_ratio_, m - n);
  const int i = static_cast<int>(std::floor(m));
  const double t = m - i;
  const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
  const double h10 = t * (1.0 - t) * (1.0 - t);
  const double h01 = t * t * (3.0 - 2.0 * t);
  const double h11 = t * t * (t - 1.0);
  return h00 * surv_[i] + h10 * slope_[i] + h01 * surv_[i + 1] + h11 * slope_[i + 1];
}

double InterpolatedPoissonCdf::survival(double m) const {
  if (m < 0.0) throw std::domain_error("evaluate requires m >= 0");
  return survival_interp(m);
}

double InterpolatedPoissonCdf::evaluate(double m) const {
  return 1.0 - survival(m);
}

double InterpolatedPoissonCdf::invert(double p) const {
  if (!std::isfinite(p) || p <= 1.0 - surv_[0] || p >= 1.0)
    throw std::range_error("invert requires p in (F(0), 1)");
  const double target = 1.0 - p;  // survival target, decreasing in x
  const int n = static_cast<int>(surv_.size()) - 1;
  if (target < surv_[n])
    return n + std::log(target / surv_[n]) / std::log(tail_ratio_);
  // locate the knot interval: surv_ is non-increasing
  int lo = 0, hi = n;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (surv_[mid] >= target)
      lo = mid;
    else
      hi = mid;
  }
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const double mid = 0.5 * (a + b);
    if (survival_interp(mid) >= target)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

QuadraticSum sum_quadratic_forms(const std::vector<Eigen::VectorXd>& means,
                                 const std::vector<Eigen::MatrixXd>& covs) {
  if (means.empty() || means.size() != covs.size())
    throw std::invalid_argument("sum_quadratic_forms: inconsistent inputs");
  const Eigen::Index d = means.front().size();
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(d);
  double offset = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (means[i].size() != d || covs[i].rows() != d || covs[i].cols() != d)
      throw std::invalid_argument("sum_quadratic_forms: dimension mismatch");
    Eigen::MatrixXd ci = covs[i].ldlt().solve(Eigen::MatrixXd::Identity(d, d));
    precision += ci;
    weighted += ci * means[i];
    offset += means[i].dot(ci * means[i]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(precision);
  if (!lu.isInvertible())
    throw std::runtime_error("sum_quadratic_forms: degenerate precision sum");
  QuadraticSum out;
  out.cov = lu.inverse();
  out.mean = out.cov * weighted;
  out.constant = 0.5 * out.mean.dot(weighted) - 0.5 * offset;
  return out;
}

QuadraticSum sum_quadratic_forms(const std::vector<Eigen::VectorXd>& means,
                                 const Eigen::MatrixXd& common_cov,
                                 const std::vector<double>& weights) {
  if (means.size() != weights.size())
    throw std::invalid_argument("sum_quadratic_forms: inconsistent inputs");
  std::vector<Eigen::MatrixXd> covs;
  covs.reserve(means.size());
  for (double w : weights) {
    if (!(w > 0.0))
      throw std::invalid_argument("sum_quadratic_forms: weights must be > 0");
    covs.push_back(common_cov / w);
  }
  return sum_quadratic_forms(means, covs);
}

double kl_gamma(const GammaParams& q, const GammaParams& p) {
  check_positive(q.shape, "gamma shape");
  check_positive(q.scale, "gamma scale");
  check_positive(p.shape, "gamma shape");
  check_positive(p.scale, "gamma scale");
  return (q.shape - p.shape) * digamma(q.shape) - log_gamma(q.shape) +
         log_gamma(p.shape) + p.shape * std::log(p.scale / q.scale) +
         q.shape * (q.scale - p.scale) / p.scale;
}

double kl_gaussian(const GaussianParams& q, const GaussianParams& p) {
  const Eigen::Index d = q.dim();
  if (p.dim() != d) throw std::invalid_argument("kl_gaussian: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> lp(p.cov);
  if (lp.info() != Eigen::Success)
    throw std::runtime_error("kl_gaussian: p covariance not SPD");
  Eigen::LLT<Eigen::MatrixXd> lq(q.cov);
  if (lq.info() != Eigen::Success)
    throw std::runtime_error("kl_gaussian: q covariance not SPD");
  double logdet_p = 0.0, logdet_q = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    logdet_p += 2.0 * std::log(lp.matrixL()(i, i));
    logdet_q += 2.0 * std::log(lq.matrixL()(i, i));
  }
  const Eigen::VectorXd dm = q.mean - p.mean;
  const double trace = lp.solve(q.cov).trace();
  const double maha = dm.dot(lp.solve(dm));
  return 0.5 * (logdet_p - logdet_q - d + trace + maha);
}

double gaussian_log_pdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                        const Eigen::MatrixXd& cov) {
  const Eigen::Index d = y.size();
  if (mu.size() != d || cov.rows() != d || cov.cols() != d)
    throw std::invalid_argument("gaussian_log_pdf: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gaussian_log_pdf: covariance not SPD");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const Eigen::VectorXd r = y - mu;
  return -0.5 * (d * kLog2Pi + logdet + r.dot(llt.solve(r)));
}

}  // namespace nhpp
