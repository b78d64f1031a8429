#include "nhpp/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nhpp {

// Hungarian algorithm with row/column potentials (Jonker-style O(n^3)).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: square matrix required");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double ospa(const std::vector<Eigen::Vector2d>& truth,
            const std::vector<Eigen::Vector2d>& estimates,
            const OspaConfig& config) {
  if (truth.size() != estimates.size())
    throw std::invalid_argument("ospa: cardinality mismatch");
  if (truth.empty()) return 0.0;
  const int n = static_cast<int>(truth.size());
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = std::pow(
          std::min((truth[i] - estimates[j]).norm(), config.cutoff), config.order);
  const auto assignment = solve_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, assignment[i]);
  return std::pow(total / n, 1.0 / config.order);
}

ExperimentSummary summarize(const std::vector<std::vector<double>>& per_step_ospa,
                            const std::vector<std::vector<double>>& per_step_cpu_ms) {
  if (per_step_ospa.empty() || per_step_ospa.front().empty())
    throw std::invalid_argument("summarize: empty input");
  const std::size_t datasets = per_step_ospa.size();
  const std::size_t steps = per_step_ospa.front().size();
  ExperimentSummary s;
  s.per_step_mean.assign(steps, 0.0);
  double cpu_total = 0.0;
  std::size_t cpu_count = 0;
  for (std::size_t d = 0; d < datasets; ++d) {
    if (per_step_ospa[d].size() != steps)
      throw std::invalid_argument("summarize: ragged input");
    double mean = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      mean += per_step_ospa[d][n];
      s.per_step_mean[n] += per_step_ospa[d][n];
    }
    s.dataset_means.push_back(mean / steps);
    if (d < per_step_cpu_ms.size())
      for (double t : per_step_cpu_ms[d]) {
        cpu_total += t;
        ++cpu_count;
      }
  }
  for (double& m : s.per_step_mean) m /= datasets;
  for (double m : s.dataset_means) s.ospa_mean += m;
  s.ospa_mean /= datasets;
  if (datasets > 1) {
    double ss = 0.0;
    for (double m : s.dataset_means) ss += (m - s.ospa_mean) * (m - s.ospa_mean);
    s.ospa_std = std::sqrt(ss / (datasets - 1));
  }
  s.cpu_ms_mean = cpu_count ? cpu_total / cpu_count : 0.0;
  return s;
}

}  // namespace nhpp
