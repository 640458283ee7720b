#include "acdcflow/plf.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace acdcflow::plf {

namespace {

solver::InjectionDelta::Kind delta_kind(stoch::InjectionKind k) {
  switch (k) {
    case stoch::InjectionKind::AcP: return solver::InjectionDelta::Kind::AcP;
    case stoch::InjectionKind::AcQ: return solver::InjectionDelta::Kind::AcQ;
    case stoch::InjectionKind::DcP:
    default: return solver::InjectionDelta::Kind::DcP;
  }
}

int source_bus_index(const solver::Problem& p, const stoch::Source& s) {
  return s.kind == stoch::InjectionKind::DcP ? p.dc_bus_index(s.node)
                                             : p.ac_bus_index(s.node);
}

bool identity_correlation(const Eigen::MatrixXd& rho) {
  return (rho - Eigen::MatrixXd::Identity(rho.rows(), rho.cols()))
             .cwiseAbs()
             .maxCoeff() < 1e-12;
}

// One propagation variable: a monitored-space coefficient column plus the
// centered cumulants of the underlying injection variable.
struct Var {
  Eigen::VectorXd t_col;
  Eigen::VectorXd gamma;  // gamma_1 forced to 0 (means live in the base solve)
};

}  // namespace

std::vector<solver::InjectionDelta> mean_injection_deltas(const solver::Problem& p) {
  std::vector<solver::InjectionDelta> deltas;
  for (const auto& s : p.net().stochastic.sources) {
    const stoch::PreparedMarginal m(s.model);
    deltas.push_back({delta_kind(s.kind), source_bus_index(p, s), s.sign * m.mean()});
  }
  return deltas;
}

PlfResult run_plf_cm(const grid::NetworkCase& net, const PlfOptions& opt,
                     const std::vector<solver::MonitoredVariable>& monitored) {
  PlfResult res;
  if (opt.order < 2 || opt.order > 8) {
    res.stage = "options";
    res.error = "cumulant order must be in [2, 8]";
    return res;
  }

  const solver::Problem p(net);

  res.stage = "base-solve";
  std::vector<solver::InjectionDelta> mean_deltas;
  try {
    mean_deltas = mean_injection_deltas(p);
    res.base = p.solve(opt.solver, &mean_deltas);
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }
  if (!res.base.converged) {
    res.error = res.base.failure.empty() ? "base solve did not converge" : res.base.failure;
    return res;
  }

  res.stage = "sensitivity";
  try {
    res.sens = solver::sensitivity_matrices(p, res.base.state, monitored);
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }

  res.stage = "injection-cumulants";
  std::vector<Var> vars;
  try {
    const auto& spec = net.stochastic;
    auto t_col_of = [&](const stoch::Source& s) -> Eigen::VectorXd {
      const int col = res.sens.column_of(delta_kind(s.kind), source_bus_index(p, s));
      if (col < 0) {
        throw std::invalid_argument("source '" + s.name +
                                    "' targets a quantity that is not a free injection");
      }
      return res.sens.t0.col(col);
    };

    auto add_independent = [&](const stoch::Source& s) {
      Var v;
      v.t_col = t_col_of(s);
      v.gamma = stoch::scale_cumulants(stoch::marginal_cumulants(s.model, opt.order), s.sign, 0.0);
      v.gamma[0] = 0.0;
      vars.push_back(std::move(v));
    };

    // Group members in declaration order, keyed by group name.
    std::map<std::string, std::vector<int>> members;
    for (std::size_t i = 0; i < spec.sources.size(); ++i) {
      if (!spec.sources[i].group.empty()) {
        members[spec.sources[i].group].push_back(static_cast<int>(i));
      }
    }

    for (const auto& s : spec.sources) {
      if (s.group.empty()) add_independent(s);
    }

    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
      const auto& grp = spec.groups[gi];
      const auto it = members.find(grp.name);
      if (it == members.end()) continue;  // empty group: validation warns
      const std::vector<int>& idx = it->second;

      if (identity_correlation(grp.rho)) {
        for (int i : idx) add_independent(spec.sources[i]);
        continue;
      }

      // Same-injection members are summed into one variable; columns keyed by
      // (kind, bus) in first-appearance order.
      const int nm = static_cast<int>(idx.size());
      std::vector<std::pair<solver::InjectionDelta::Kind, int>> keys;
      std::vector<int> member_slot(nm);
      for (int j = 0; j < nm; ++j) {
        const auto& s = spec.sources[idx[j]];
        const std::pair<solver::InjectionDelta::Kind, int> key{delta_kind(s.kind),
                                                               source_bus_index(p, s)};
        int slot = -1;
        for (std::size_t k = 0; k < keys.size(); ++k) {
          if (keys[k] == key) slot = static_cast<int>(k);
        }
        if (slot < 0) {
          slot = static_cast<int>(keys.size());
          keys.push_back(key);
        }
        member_slot[j] = slot;
      }
      const int ns = static_cast<int>(keys.size());
      Eigen::MatrixXd t_cols(res.sens.t0.rows(), ns);
      for (int j = 0; j < nm; ++j) {
        t_cols.col(member_slot[j]) = t_col_of(spec.sources[idx[j]]);
      }

      bool all_gaussian = true;
      std::vector<stoch::PreparedMarginal> prepared;
      prepared.reserve(nm);
      for (int j = 0; j < nm; ++j) {
        prepared.emplace_back(spec.sources[idx[j]].model);
        if (!prepared.back().gaussian()) all_gaussian = false;
      }

      Eigen::MatrixXd l;                  // decorrelating factor: cov = l l^T
      Eigen::MatrixXd y_gamma(ns, opt.order);  // per new variable, row-wise
      if (all_gaussian) {
        // Summed members are jointly Gaussian: the decorrelated variables are
        // exactly unit normals and the covariance is analytic.
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(ns, ns);
        for (int a = 0; a < nm; ++a) {
          for (int b = 0; b < nm; ++b) {
            cov(member_slot[a], member_slot[b]) += spec.sources[idx[a]].sign *
                                                   spec.sources[idx[b]].sign * grp.rho(a, b) *
                                                   prepared[a].sd() * prepared[b].sd();
          }
        }
        l = stoch::decorrelation_transform(cov).g;
        y_gamma.setZero();
        y_gamma.col(1).setOnes();
      } else {
        ++res.sampled_groups;
        rng::Stream stream(opt.seed, rng::kSaltPlfGroup, gi);
        bool repaired = false;
        const Eigen::MatrixXd q = stoch::nataf_adjusted_matrix(prepared, grp.rho, &repaired);
        res.correlation_repaired = res.correlation_repaired || repaired;
        const Eigen::MatrixXd g = stoch::decorrelation_transform(q).g;
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ns, opt.group_samples);
        Eigen::VectorXd e(nm);
        for (int s = 0; s < opt.group_samples; ++s) {
          for (int j = 0; j < nm; ++j) e[j] = stream.normal01();
          const Eigen::VectorXd w = stoch::nataf_transform(prepared, g, e);
          for (int j = 0; j < nm; ++j) {
            v(member_slot[j], s) += spec.sources[idx[j]].sign * w[j];
          }
        }
        // Empirical-covariance factor so the transformed rows are exactly
        // sample-uncorrelated; their cumulants feed the propagation.
        const Eigen::MatrixXd cov = stoch::covariance_from_samples(v);
        const auto dec = stoch::decorrelation_transform(cov);
        l = dec.g;
        const Eigen::MatrixXd y = dec.b * (v.colwise() - v.rowwise().mean().eval());
        for (int r = 0; r < ns; ++r) {
          Eigen::VectorXd gam =
              stoch::sample_cumulants(y.row(r).data(), static_cast<std::size_t>(y.cols()),
                                      opt.order);
          gam[0] = 0.0;
          y_gamma.row(r) = gam.transpose();
        }
      }

      // Rewrite: the decorrelated variable r acts through column sum_m col_m l(m, r).
      for (int r = 0; r < ns; ++r) {
        Var v;
        v.t_col = t_cols * l.col(r);
        v.gamma = y_gamma.row(r).transpose();
        vars.push_back(std::move(v));
      }
    }
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }

  res.stage = "propagate";
  const int nmon = static_cast<int>(monitored.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nmon, opt.order);
  for (const auto& v : vars) {
    for (int k = 2; k <= opt.order; ++k) {
      out.col(k - 1) += v.t_col.array().pow(k).matrix() * v.gamma[k - 1];
    }
  }
  out.col(0) = res.sens.base_monitored;

  res.stage = "curves";
  res.variables.resize(nmon);
  try {
    for (int i = 0; i < nmon; ++i) {
      res.variables[i].monitored = monitored[i];
      res.variables[i].cumulants = out.row(i).transpose();
      res.variables[i].curve = gc::build_curve(res.variables[i].cumulants, opt.order,
                                               opt.grid_points);
    }
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }

  res.ok = true;
  res.stage.clear();
  return res;
}

}  // namespace acdcflow::plf
