#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nhpp/numerics.hpp"

namespace nhpp {

/// Linear Gaussian transition x' = F x + B + w, w ~ N(0, Q), shared by all
/// objects (independent noise per object).
struct TransitionModel {
  Eigen::MatrixXd F;
  Eigen::VectorXd B;
  Eigen::MatrixXd Q;
  Eigen::Index state_dim() const { return F.rows(); }
};

/// Axis-aligned surveillance rectangle.
struct Region {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

/// y = H x + v, v ~ N(0, R_k); clutter uniform over the region.
struct MeasurementModel {
  Eigen::MatrixXd H;                // D x state_dim
  std::vector<Eigen::MatrixXd> R;   // per object (index k-1), D x D SPD
  Region region;
  Eigen::Index meas_dim() const { return H.rows(); }
  int object_count() const { return static_cast<int>(R.size()); }
  double volume() const { return region.area(); }
};

struct MeasurementFrame {
  int step = 0;
  std::vector<Eigen::VectorXd> points;
  int count() const { return static_cast<int>(points.size()); }
};

/// Poisson rates for clutter (index 0) and objects 1..K.
struct RateVector {
  std::vector<double> rates;
  double sum() const {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
  }
  int object_count() const { return static_cast<int>(rates.size()) - 1; }
};

/// Row-stochastic M x (K+1) association weights; column 0 is clutter.
struct AssociationWeights {
  Eigen::MatrixXd w;
  int measurement_count() const { return static_cast<int>(w.rows()); }
  int component_count() const { return static_cast<int>(w.cols()); }
  /// Sum of column k, i.e. the expected measurement count of component k.
  double column_sum(int k) const { return w.rows() ? w.col(k).sum() : 0.0; }
};

/// log density of measurement y under component k given a state sample/mean x:
/// -log V for clutter, log N(y; Hx, R_k) otherwise.
double emission_log_likelihood(const Eigen::VectorXd& y, int k,
                               const Eigen::VectorXd& x,
                               const MeasurementModel& model);

/// Exact NHPP frame log likelihood log h(Y, M | X, Lambda): test oracle for
/// the association marginalisation identity.
double joint_nhpp_log_likelihood(const MeasurementFrame& frame,
                                 const std::vector<Eigen::VectorXd>& states,
                                 const RateVector& rates,
                                 const MeasurementModel& model);

/// JSON-lines serialization: one {"n": int, "y": [[f64; D]; M]} per line.
void write_frames(const std::string& path, const std::vector<MeasurementFrame>& frames);
std::vector<MeasurementFrame> read_frames(const std::string& path);

}  // namespace nhpp
