#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nhpp {

struct OspaConfig {
  double order = 1.0;   // p
  double cutoff = 50.0; // c
};

/// OSPA distance between equal-cardinality position sets: the exact optimal
/// assignment (Hungarian, O(K^3)) on cutoff-capped distances.
double ospa(const std::vector<Eigen::Vector2d>& truth,
            const std::vector<Eigen::Vector2d>& estimates,
            const OspaConfig& config = {});

/// Exact rectangular-free assignment: minimises sum_i cost(i, perm(i)) over
/// permutations of an n x n cost matrix; returns the permutation.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct ExperimentSummary {
  std::vector<double> dataset_means;  // time-averaged OSPA per dataset
  double ospa_mean = 0.0;
  double ospa_std = 0.0;              // sample (n-1) std across datasets
  double cpu_ms_mean = 0.0;
  std::vector<double> per_step_mean;  // mean OSPA curve over datasets
};

/// per_step_ospa[d][n], per_step_cpu_ms[d][n]: rectangular over datasets.
ExperimentSummary summarize(const std::vector<std::vector<double>>& per_step_ospa,
                            const std::vector<std::vector<double>>& per_step_cpu_ms);

}  // namespace nhpp
