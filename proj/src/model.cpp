#include "nhpp/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace nhpp {

double emission_log_likelihood(const Eigen::VectorXd& y, int k,
                               const Eigen::VectorXd& x,
                               const MeasurementModel& model) {
  if (y.size() != model.meas_dim())
    throw std::invalid_argument("emission_log_likelihood: measurement dimension");
  if (k < 0 || k > model.object_count())
    throw std::invalid_argument("emission_log_likelihood: component index");
  if (k == 0) return -std::log(model.volume());
  return gaussian_log_pdf(y, model.H * x, model.R[k - 1]);
}

double joint_nhpp_log_likelihood(const MeasurementFrame& frame,
                                 const std::vector<Eigen::VectorXd>& states,
                                 const RateVector& rates,
                                 const MeasurementModel& model) {
  const int K = model.object_count();
  if (static_cast<int>(states.size()) != K)
    throw std::invalid_argument("joint_nhpp_log_likelihood: state count");
  const double total = rates.sum();
  if (total <= 0.0 && frame.count() > 0)
    throw std::runtime_error("joint_nhpp_log_likelihood: impossible evidence");
  double log_lik = -total - log_gamma(frame.count() + 1.0);
  for (const auto& y : frame.points) {
    // log sum_k Lambda_k l(y | x_k) via log-sum-exp
    std::vector<double> terms;
    terms.reserve(K + 1);
    for (int k = 0; k <= K; ++k) {
      if (rates.rates[k] <= 0.0) continue;
      const Eigen::VectorXd& x = k == 0 ? Eigen::VectorXd() : states[k - 1];
      terms.push_back(std::log(rates.rates[k]) +
                      emission_log_likelihood(y, k, x, model));
    }
    if (terms.empty())
      throw std::runtime_error("joint_nhpp_log_likelihood: impossible evidence");
    double mx = terms.front();
    for (double t : terms) mx = std::max(mx, t);
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    log_lik += mx + std::log(s);
  }
  return log_lik;
}

void write_frames(const std::string& path, const std::vector<MeasurementFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& frame : frames) {
    nlohmann::json j;
    j["n"] = frame.step;
    auto& y = j["y"] = nlohmann::json::array();
    for (const auto& p : frame.points) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p[i]);
      y.push_back(std::move(row));
    }
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MeasurementFrame> read_frames(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<MeasurementFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    MeasurementFrame frame;
    frame.step = j.at("n").get<int>();
    for (const auto& row : j.at("y")) {
      Eigen::VectorXd p(row.size());
      for (std::size_t i = 0; i < row.size(); ++i) p[static_cast<Eigen::Index>(i)] = row[i].get<double>();
      frame.points.push_back(std::move(p));
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace nhpp
