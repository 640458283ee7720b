#pragma once

#include "acdcflow/gram_charlier.hpp"
#include "acdcflow/solver.hpp"
#include "acdcflow/stochastics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace acdcflow::plf {

struct PlfOptions {
  int order = 8;       // cumulant order, [2, 8]
  int grid_points = 513;
  std::uint64_t seed = 1;      // Nataf sampling for non-Gaussian groups
  int group_samples = 100000;  // sample count for those groups
  solver::SolverOptions solver;
};

struct PlfVariable {
  solver::MonitoredVariable monitored;
  Eigen::VectorXd cumulants;  // gamma_1..gamma_K; gamma_1 is the base value
  gc::Curve curve;
};

struct PlfResult {
  bool ok = false;
  std::string stage;  // failing pipeline stage when !ok
  std::string error;
  solver::Problem::Solution base;
  solver::SensitivityModel sens;
  std::vector<PlfVariable> variables;
  int sampled_groups = 0;             // groups that needed Nataf sampling
  bool correlation_repaired = false;  // PSD repair fired during adjustment
};

// Mean shifts of every stochastic source, as solver deltas: the base solve
// runs at expected injections.
std::vector<solver::InjectionDelta> mean_injection_deltas(const solver::Problem& p);

// Cumulant-propagation probabilistic flow: base solve at expected injections,
// linearized sensitivities, per-source cumulants (grouped sources rewritten
// through a decorrelating factor), order-wise propagation, series curves.
PlfResult run_plf_cm(const grid::NetworkCase& net, const PlfOptions& opt,
                     const std::vector<solver::MonitoredVariable>& monitored);

}  // namespace acdcflow::plf
