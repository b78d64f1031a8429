#pragma once

#include <functional>
#include <vector>

#include "nhpp/cavi.hpp"
#include "nhpp/model.hpp"

namespace nhpp {

/// 95% quantile of chi-square with 2 degrees of freedom; all confidence
/// ellipses below are 95% regions.
inline constexpr double kChi2Quantile2d = 5.991464547107979;

/// Hexagonal covering of the positional prior's 95% ellipse by the 95%
/// ellipses of N(m_s, C).
struct InitGrid {
  std::vector<Eigen::Vector2d> centers;
  Eigen::Matrix2d init_cov;    // C
  Eigen::Vector2d prior_mean;  // positional prior
  Eigen::Matrix2d prior_cov;
};

InitGrid build_init_grid(const GaussianParams& positional_prior,
                         const Eigen::Matrix2d& C);

/// Indices s whose 95% ellipse of N(m_s, C) contains at least m_init
/// measurements.
std::vector<int> filter_eligible_inits(const InitGrid& grid,
                                       const MeasurementFrame& frame,
                                       double m_init);

struct LocalisationResult {
  GaussianBelief belief;  // converged q(X_h)
  AssociationWeights weights;
  double elbo = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> elbo_trace;
};

/// One CAVI run localising object h (0-based) from init center m_s with
/// init covariance C. Other objects are held fixed: `posteriors` supplies
/// their converged beliefs for the association update, `predicted` their
/// predictive beliefs for the initial association law. Entry h of both is
/// ignored; `prior` is the non-informative prior for X_h.
LocalisationResult localise_single(int h, const MeasurementFrame& frame,
                                   const std::vector<GaussianBelief>& posteriors,
                                   const std::vector<GaussianBelief>& predicted,
                                   const GaussianBelief& prior,
                                   const RateVector& rates,
                                   const MeasurementModel& model,
                                   const Eigen::Vector2d& init_center,
                                   const Eigen::Matrix2d& C,
                                   const CaviOptions& options = {});

/// Relocation ELBO (up to the additive constant shared by all inits of one
/// object): -KL(q(theta)||p(theta|M,Lambda)) - KL(q(X_h)||prior)
/// + E log p(Y|theta,X) with fixed posteriors for k != h.
double reloc_elbo(int h, const MeasurementFrame& frame,
                  const AssociationWeights& weights, const GaussianBelief& belief,
                  const std::vector<GaussianBelief>& posteriors,
                  const GaussianBelief& prior, const RateVector& rates,
                  const MeasurementModel& model);

struct RelocationThresholds {
  double m_init = 0.0;
  double m_reloc = 0.0;
};

struct InitRecord {
  int grid_index = -1;
  Eigen::Vector2d center;
  double elbo = 0.0;
  GaussianBelief belief;
  int iterations = 0;
  bool converged = false;
};

struct RelocationOutcome {
  int object = -1;       // 0-based index h
  bool attempted = false;
  int winner = -1;       // grid index of the highest-ELBO init
  double elbo = 0.0;
  double evidence = 0.0; // sum_j q^w(theta_j = h)
  bool accepted = false;
  int grid_size = 0;
  std::vector<InitRecord> inits;  // one per eligible init
};

/// Algorithm-2 relocation over the missed set (processed in ascending object
/// order, with accepted relocations visible to later objects). `beliefs` and
/// `weights` are updated in place; the final weights are refreshed against
/// the refined beliefs.
std::vector<RelocationOutcome> relocate_all(
    const std::vector<int>& missed, const MeasurementFrame& frame,
    std::vector<GaussianBelief>& beliefs,
    const std::vector<GaussianBelief>& predicted, AssociationWeights& weights,
    const RateVector& rates,
    const std::function<GaussianBelief(int)>& prior_builder,
    const std::vector<RelocationThresholds>& thresholds, const Eigen::Matrix2d& C,
    const MeasurementModel& model, const CaviOptions& options = {},
    int threads = 1);

}  // namespace nhpp
