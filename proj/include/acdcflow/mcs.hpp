#pragma once

#include "acdcflow/solver.hpp"
#include "acdcflow/stochastics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace acdcflow::mcs {

struct McsOptions {
  int samples = 10000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: hardware concurrency
  int order = 8;    // sample-cumulant order reported
  solver::SolverOptions solver;
  double max_failure_fraction = 0.05;  // beyond this the oracle is unreliable
};

struct McsResult {
  bool ok = false;
  std::string error;
  int requested = 0;
  int failures = 0;
  bool reliable = true;
  std::vector<solver::MonitoredVariable> monitored;
  // Successful samples in sample-index order, one column per sample.
  Eigen::MatrixXd values;
  Eigen::VectorXd mean, sd;    // population statistics over successes
  Eigen::MatrixXd cumulants;   // monitored x order
};

// Seed-deterministic Monte Carlo: one derived sub-stream per sample index, so
// results are identical for any worker count.
McsResult run_mcs(const grid::NetworkCase& net, const McsOptions& opt,
                  const std::vector<solver::MonitoredVariable>& monitored);

// Right-continuous empirical CDF of ascending samples at the grid points.
Eigen::VectorXd ecdf_on_grid(const Eigen::VectorXd& sorted, const Eigen::VectorXd& grid);

// Cell-centered histogram density on a uniform grid (cells of one grid step
// centered on each point; samples outside the outermost cells are dropped).
Eigen::VectorXd histogram_on_grid(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid);

}  // namespace acdcflow::mcs
