#include "acdcflow/mcs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace acdcflow::mcs {

namespace {

solver::InjectionDelta::Kind delta_kind(stoch::InjectionKind k) {
  switch (k) {
    case stoch::InjectionKind::AcP: return solver::InjectionDelta::Kind::AcP;
    case stoch::InjectionKind::AcQ: return solver::InjectionDelta::Kind::AcQ;
    case stoch::InjectionKind::DcP:
    default: return solver::InjectionDelta::Kind::DcP;
  }
}

// Frozen draw plan: sources in declaration order; a correlation group draws
// all member normals when its first member is reached, so stream consumption
// per sample never depends on anything but the case itself.
struct DrawPlan {
  struct GroupPlan {
    std::vector<int> source_index;  // member order
    std::vector<stoch::PreparedMarginal> marginals;
    Eigen::MatrixXd g;  // decorrelating factor of the copula correlation
  };
  struct Step {
    int source = 0;
    int group = -1;   // >= 0: value comes from that group's cached draw
    int member = 0;   // index within the group
    stoch::PreparedMarginal marginal{stoch::GaussianModel{0.0, 0.0}};
    solver::InjectionDelta::Kind kind = solver::InjectionDelta::Kind::AcP;
    int bus = 0;
    double sign = 1.0;
  };
  std::vector<Step> steps;
  std::vector<GroupPlan> groups;
};

DrawPlan build_plan(const solver::Problem& p) {
  const auto& spec = p.net().stochastic;
  DrawPlan plan;

  std::map<std::string, int> group_of;
  for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
    const auto& grp = spec.groups[gi];
    std::vector<int> idx;
    for (std::size_t i = 0; i < spec.sources.size(); ++i) {
      if (spec.sources[i].group == grp.name) idx.push_back(static_cast<int>(i));
    }
    if (idx.empty()) continue;
    DrawPlan::GroupPlan gp;
    gp.source_index = idx;
    for (int i : idx) gp.marginals.emplace_back(spec.sources[i].model);
    gp.g = stoch::decorrelation_transform(stoch::nataf_adjusted_matrix(gp.marginals, grp.rho)).g;
    group_of[grp.name] = static_cast<int>(plan.groups.size());
    plan.groups.push_back(std::move(gp));
  }

  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    const auto& s = spec.sources[i];
    DrawPlan::Step st;
    st.source = static_cast<int>(i);
    st.kind = delta_kind(s.kind);
    st.bus = s.kind == stoch::InjectionKind::DcP ? p.dc_bus_index(s.node)
                                                 : p.ac_bus_index(s.node);
    st.sign = s.sign;
    if (!s.group.empty() && group_of.count(s.group)) {
      st.group = group_of[s.group];
      const auto& gp = plan.groups[st.group];
      st.member = static_cast<int>(std::find(gp.source_index.begin(), gp.source_index.end(),
                                             static_cast<int>(i)) -
                                   gp.source_index.begin());
    } else {
      st.marginal = stoch::PreparedMarginal(s.model);
    }
    plan.steps.push_back(std::move(st));
  }
  return plan;
}

std::vector<solver::InjectionDelta> draw_sample(const DrawPlan& plan, rng::Stream& stream) {
  std::vector<solver::InjectionDelta> deltas;
  deltas.reserve(plan.steps.size());
  std::vector<Eigen::VectorXd> group_draw(plan.groups.size());
  for (const auto& st : plan.steps) {
    double w;
    if (st.group >= 0) {
      Eigen::VectorXd& cached = group_draw[st.group];
      if (cached.size() == 0) {
        const auto& gp = plan.groups[st.group];
        Eigen::VectorXd e(gp.marginals.size());
        for (int j = 0; j < e.size(); ++j) e[j] = stream.normal01();
        cached = stoch::nataf_transform(gp.marginals, gp.g, e);
      }
      w = cached[st.member];
    } else {
      w = st.marginal.quantile(stream.uniform01());
    }
    deltas.push_back({st.kind, st.bus, st.sign * w});
  }
  return deltas;
}

}  // namespace

McsResult run_mcs(const grid::NetworkCase& net, const McsOptions& opt,
                  const std::vector<solver::MonitoredVariable>& monitored) {
  McsResult res;
  res.requested = opt.samples;
  res.monitored = monitored;
  if (opt.samples < 1) {
    res.error = "sample count must be >= 1";
    return res;
  }

  const solver::Problem p(net);
  DrawPlan plan;
  try {
    plan = build_plan(p);
  } catch (const std::exception& e) {
    res.error = e.what();
    return res;
  }

  const int nmon = static_cast<int>(monitored.size());
  Eigen::MatrixXd all(nmon, opt.samples);
  std::vector<char> good(opt.samples, 0);

  int workers = opt.workers > 0 ? opt.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, opt.samples);

  auto run_range = [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      rng::Stream stream(opt.seed, rng::kSaltMcsSample, static_cast<std::uint64_t>(s));
      const auto deltas = draw_sample(plan, stream);
      try {
        const auto sol = p.solve(opt.solver, &deltas);
        if (!sol.converged) continue;
        all.col(s) = solver::monitored_values(p, sol.state, monitored);
        good[s] = 1;
      } catch (const std::exception&) {
        // counted as a failed sample
      }
    }
  };

  if (workers == 1) {
    run_range(0, opt.samples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opt.samples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(opt.samples, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  int successes = 0;
  for (char g : good) successes += g;
  res.failures = opt.samples - successes;

  if (successes < 2) {
    res.reliable = false;
    res.error = "too few successful solves (" + std::to_string(successes) + ")";
    return res;
  }

  res.values.resize(nmon, successes);
  int col = 0;
  for (int s = 0; s < opt.samples; ++s) {
    if (good[s]) res.values.col(col++) = all.col(s);
  }

  res.mean.resize(nmon);
  res.sd.resize(nmon);
  res.cumulants.resize(nmon, opt.order);
  for (int i = 0; i < nmon; ++i) {
    const Eigen::VectorXd row = res.values.row(i).transpose();
    const Eigen::VectorXd gam = stoch::sample_cumulants(row.data(), row.size(), opt.order);
    res.cumulants.row(i) = gam.transpose();
    res.mean[i] = gam[0];
    res.sd[i] = std::sqrt(std::max(0.0, gam[1]));
  }

  res.reliable =
      res.failures <= opt.max_failure_fraction * static_cast<double>(opt.samples);
  if (!res.reliable) {
    std::ostringstream os;
    os << res.failures << " of " << opt.samples
       << " samples failed to solve; oracle statistics unreliable";
    res.error = os.str();
    return res;
  }

  res.ok = true;
  return res;
}

Eigen::VectorXd ecdf_on_grid(const Eigen::VectorXd& sorted, const Eigen::VectorXd& grid) {
  const double n = static_cast<double>(sorted.size());
  Eigen::VectorXd f(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const auto it = std::upper_bound(sorted.data(), sorted.data() + sorted.size(), grid[i]);
    f[i] = static_cast<double>(it - sorted.data()) / n;
  }
  return f;
}

Eigen::VectorXd histogram_on_grid(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid) {
  const int g = static_cast<int>(grid.size());
  if (g < 2) throw std::invalid_argument("histogram needs at least 2 grid points");
  const double h = grid[1] - grid[0];
  const double lo = grid[0] - h / 2.0;
  Eigen::VectorXd pdf = Eigen::VectorXd::Zero(g);
  for (int i = 0; i < samples.size(); ++i) {
    const int cell = static_cast<int>(std::floor((samples[i] - lo) / h));
    if (cell >= 0 && cell < g) pdf[cell] += 1.0;
  }
  pdf /= static_cast<double>(samples.size()) * h;
  return pdf;
}

}  // namespace acdcflow::mcs
