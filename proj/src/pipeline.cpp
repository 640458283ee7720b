#include "acdcflow/pipeline.hpp"

#include "acdcflow/case_io.hpp"
#include "acdcflow/mcs.hpp"
#include "acdcflow/metrics.hpp"
#include "acdcflow/plf.hpp"
#include "acdcflow/solver.hpp"
#include "acdcflow/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace acdcflow::pipeline {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8e", v);
  return buf;
}

const char* ac_kind_name(grid::AcBusKind k) {
  switch (k) {
    case grid::AcBusKind::Slack: return "slack";
    case grid::AcBusKind::PV: return "pv";
    case grid::AcBusKind::PQ: return "pq";
  }
  return "?";
}

const char* dc_kind_name(grid::DcBusKind k) {
  switch (k) {
    case grid::DcBusKind::ConstantV: return "constant_v";
    case grid::DcBusKind::ConstantP: return "constant_p";
    case grid::DcBusKind::Droop: return "droop";
    case grid::DcBusKind::Pure: return "pure";
  }
  return "?";
}

const char* mode_name(grid::ControlMode m) {
  switch (m) {
    case grid::ControlMode::PQ: return "p_q";
    case grid::ControlMode::PUs: return "p_us";
    case grid::ControlMode::UdcQ: return "udc_q";
    case grid::ControlMode::UdcUs: return "udc_us";
    case grid::ControlMode::DroopQ: return "droop_q";
    case grid::ControlMode::DroopUs: return "droop_us";
  }
  return "?";
}

class Emitter {
 public:
  Emitter(const RunConfig& cfg, const std::string& case_name, int grid_points)
      : cfg_(cfg), case_name_(case_name), grid_points_(grid_points) {}

  // Opens out_dir/name and writes the self-describing header. The worker
  // count is deliberately absent: reports are identical for any worker count.
  bool open(const std::string& name, std::ofstream& os, RunOutcome& out) {
    const auto path = std::filesystem::path(cfg_.out_dir) / name;
    os.open(path, std::ios::binary);
    if (!os) {
      out.status = Status::IoFailed;
      out.message = "cannot write " + path.string();
      return false;
    }
    os << "# case: " << case_name_ << "\n";
    os << "# version: " << kVersion << "\n";
    os << "# method: " << method_name(cfg_.method) << "\n";
    os << "# seed: " << cfg_.seed << "\n";
    os << "# samples: " << cfg_.samples << "\n";
    os << "# order: " << cfg_.order << "\n";
    os << "# grid_points: " << grid_points_ << "\n";
    os << "# monitor: " << (cfg_.monitor.empty() ? "(all)" : cfg_.monitor) << "\n";
    out.files_written.push_back(path.string());
    return true;
  }

 private:
  const RunConfig& cfg_;
  std::string case_name_;
  int grid_points_;
};

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

bool write_flow_files(const solver::Problem& prob, const solver::Problem::Solution& sol,
                      const std::vector<solver::InjectionDelta>* deltas, Emitter& em,
                      RunOutcome& out) {
  const auto& net = prob.net();
  const auto& s = sol.state;

  Eigen::VectorXd p_calc, q_calc;
  prob.calc_bus_powers(s, p_calc, q_calc);

  {
    std::ofstream os;
    if (!em.open("buses.csv", os, out)) return false;
    os << "id,kind,u,angle_deg,p_net,q_net\n";
    for (int i = 0; i < prob.n_ac(); ++i) {
      const auto& b = net.ac_buses[i];
      os << b.id << "," << ac_kind_name(b.kind) << "," << fmt(s.ac_u[i]) << ","
         << fmt(s.ac_delta[i] * 180.0 / kPi) << "," << fmt(p_calc[i]) << ","
         << fmt(q_calc[i]) << "\n";
    }
  }
  {
    std::ofstream os;
    if (!em.open("dc_buses.csv", os, out)) return false;
    os << "id,kind,u,p_net\n";
    for (int i = 0; i < prob.n_dc(); ++i) {
      const auto& b = net.dc_buses[i];
      os << b.id << "," << dc_kind_name(b.kind) << "," << fmt(s.dc_u[i]) << ","
         << fmt(prob.dc_flow(s, i)) << "\n";
    }
  }
  {
    std::ofstream os;
    if (!em.open("converters.csv", os, out)) return false;
    os << "id,pcc_bus,dc_bus,mode,p_s,q_s,p_c,q_c,p_dc,u_c,delta_c_deg,loss_p\n";
    for (size_t k = 0; k < sol.converters.size(); ++k) {
      const auto& c = sol.converters[k];
      const auto& def = net.converters[k];
      os << c.converter_id << "," << def.pcc_bus << "," << def.dc_bus << ","
         << mode_name(def.mode) << "," << fmt(c.p_s) << "," << fmt(c.q_s) << ","
         << fmt(c.p_c) << "," << fmt(c.q_c) << "," << fmt(c.p_dc) << "," << fmt(c.u_c)
         << "," << fmt(c.delta_c * 180.0 / kPi) << "," << fmt(c.loss_p) << "\n";
    }
  }

  const auto flows = solver::branch_flows(prob, s);
  {
    std::ofstream os;
    if (!em.open("ac_flows.csv", os, out)) return false;
    os << "from,to,p_from,q_from,p_to,q_to,loss_p,loss_q\n";
    for (const auto& f : flows.ac) {
      const auto& l = net.ac_lines[f.line_index];
      os << l.from << "," << l.to << "," << fmt(f.p_from) << "," << fmt(f.q_from) << ","
         << fmt(f.p_to) << "," << fmt(f.q_to) << "," << fmt(f.loss_p) << ","
         << fmt(f.loss_q) << "\n";
    }
  }
  {
    std::ofstream os;
    if (!em.open("dc_flows.csv", os, out)) return false;
    os << "from,to,p_from,p_to,loss_p\n";
    for (const auto& f : flows.dc) {
      const auto& l = net.dc_lines[f.line_index];
      os << l.from << "," << l.to << "," << fmt(f.p_from) << "," << fmt(f.p_to) << ","
         << fmt(f.loss_p) << "\n";
    }
  }
  {
    const auto bal = solver::balance_report(prob, s, deltas);
    std::ofstream os;
    if (!em.open("balance.csv", os, out)) return false;
    os << "ac_net_injection,dc_net_injection,converter_ac_draw,converter_dc_feed,"
          "converter_loss,ac_line_loss,dc_line_loss,residual\n";
    os << fmt(bal.ac_net_injection) << "," << fmt(bal.dc_net_injection) << ","
       << fmt(bal.converter_ac_draw) << "," << fmt(bal.converter_dc_feed) << ","
       << fmt(bal.converter_loss) << "," << fmt(bal.ac_line_loss) << ","
       << fmt(bal.dc_line_loss) << "," << fmt(bal.residual) << "\n";
  }
  {
    std::ofstream os;
    if (!em.open("iterations.csv", os, out)) return false;
    os << "iteration,max_mismatch\n";
    for (const auto& r : sol.trace) {
      os << r.iteration << "," << fmt(r.max_mismatch) << "\n";
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// shared emitters for cm / mcs
// ---------------------------------------------------------------------------

void write_band_comment(std::ofstream& os) {
  os << "# bands: ovp = 1 - F(1.05), lvp_hi = F(1.10), lvp_lo = F(0.90)\n";
}

std::string normalized_g(double gamma_k, double sigma, int k) {
  if (sigma <= 0.0) return "";
  return fmt(gamma_k / std::pow(sigma, k));
}

std::string band_cell(double v, bool defined) { return defined ? fmt(v) : ""; }

bool write_cm_files(const plf::PlfResult& res, Emitter& em, RunOutcome& out,
                    const std::string& prefix) {
  {
    std::ofstream os;
    if (!em.open(prefix + "summary.csv", os, out)) return false;
    write_band_comment(os);
    os << "variable,mean,std,g3,g4,ovp,lvp_hi,lvp_lo\n";
    for (const auto& v : res.variables) {
      const double mean = v.cumulants[0];
      const double sd = std::sqrt(std::max(0.0, v.cumulants[1]));
      const auto b = metrics::band_probabilities(v.curve);
      os << v.monitored.id << "," << fmt(mean) << "," << fmt(sd) << ","
         << (v.cumulants.size() > 2 ? normalized_g(v.cumulants[2], sd, 3) : "") << ","
         << (v.cumulants.size() > 3 ? normalized_g(v.cumulants[3], sd, 4) : "") << ","
         << band_cell(b.ovp, b.defined) << "," << band_cell(b.lvp_hi, b.defined) << ","
         << band_cell(b.lvp_lo, b.defined) << "\n";
    }
  }
  {
    std::ofstream os;
    if (!em.open(prefix + "curves.csv", os, out)) return false;
    os << "variable,x,pdf,cdf\n";
    for (const auto& v : res.variables) {
      for (Eigen::Index i = 0; i < v.curve.x.size(); ++i) {
        os << v.monitored.id << "," << fmt(v.curve.x[i]) << "," << fmt(v.curve.pdf[i])
           << "," << fmt(v.curve.cdf[i]) << "\n";
      }
    }
  }
  {
    std::ofstream os;
    if (!em.open(prefix + "cumulants.csv", os, out)) return false;
    os << "variable,order,value\n";
    for (const auto& v : res.variables) {
      for (Eigen::Index k = 0; k < v.cumulants.size(); ++k) {
        os << v.monitored.id << "," << (k + 1) << "," << fmt(v.cumulants[k]) << "\n";
      }
    }
  }
  return true;
}

bool write_mcs_files(const mcs::McsResult& res, int grid_points, Emitter& em,
                     RunOutcome& out, const std::string& prefix) {
  const Eigen::Index n = static_cast<Eigen::Index>(res.monitored.size());
  {
    std::ofstream os;
    if (!em.open(prefix + "summary.csv", os, out)) return false;
    write_band_comment(os);
    os << "variable,mean,std,g3,g4,ovp,lvp_hi,lvp_lo\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd sorted = res.values.row(i).transpose();
      std::sort(sorted.data(), sorted.data() + sorted.size());
      const auto b = metrics::band_probabilities_from_samples(sorted);
      const double sd = res.sd[i];
      os << res.monitored[i].id << "," << fmt(res.mean[i]) << "," << fmt(sd) << ","
         << (res.cumulants.cols() > 2 ? normalized_g(res.cumulants(i, 2), sd, 3) : "")
         << ","
         << (res.cumulants.cols() > 3 ? normalized_g(res.cumulants(i, 3), sd, 4) : "")
         << "," << fmt(b.ovp) << "," << fmt(b.lvp_hi) << "," << fmt(b.lvp_lo) << "\n";
    }
  }
  {
    std::ofstream os;
    if (!em.open(prefix + "curves.csv", os, out)) return false;
    os << "variable,x,pdf,cdf\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd sorted = res.values.row(i).transpose();
      std::sort(sorted.data(), sorted.data() + sorted.size());
      const double mean = res.mean[i];
      const double sd = res.sd[i];
      if (sd <= 0.0) {
        os << res.monitored[i].id << "," << fmt(mean) << "," << fmt(0.0) << ","
           << fmt(1.0) << "\n";
        continue;
      }
      Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_points, mean - 6.0 * sd,
                                                        mean + 6.0 * sd);
      const Eigen::VectorXd pdf = mcs::histogram_on_grid(sorted, grid);
      const Eigen::VectorXd cdf = mcs::ecdf_on_grid(sorted, grid);
      for (Eigen::Index g = 0; g < grid.size(); ++g) {
        os << res.monitored[i].id << "," << fmt(grid[g]) << "," << fmt(pdf[g]) << ","
           << fmt(cdf[g]) << "\n";
      }
    }
  }
  return true;
}

bool write_compare_files(const metrics::CompareReport& rep, Emitter& em, RunOutcome& out) {
  {
    std::ofstream os;
    if (!em.open("metrics.csv", os, out)) return false;
    os << "# eps_mu, eps_sigma, arms in percent; status 'undefined-baseline' marks a\n";
    os << "# zero oracle value whose relative error has no meaning (cell left empty)\n";
    write_band_comment(os);
    os << "variable,class,mean_cm,mean_mcs,eps_mu,std_cm,std_mcs,eps_sigma,arms,tic,"
          "ovp_cm,ovp_mcs,lvp_hi_cm,lvp_hi_mcs,lvp_lo_cm,lvp_lo_mcs,status\n";
    for (const auto& r : rep.rows) {
      const bool undef = !r.eps_mu.defined || !r.eps_sigma.defined;
      os << r.id << "," << r.cls << "," << fmt(r.mean_cm) << "," << fmt(r.mean_mcs) << ","
         << (r.eps_mu.defined ? fmt(r.eps_mu.percent) : "") << "," << fmt(r.sd_cm) << ","
         << fmt(r.sd_mcs) << "," << (r.eps_sigma.defined ? fmt(r.eps_sigma.percent) : "")
         << "," << fmt(r.arms_pct) << "," << fmt(r.tic_val) << ","
         << band_cell(r.bands_cm.ovp, r.bands_cm.defined) << "," << fmt(r.bands_mcs.ovp)
         << "," << band_cell(r.bands_cm.lvp_hi, r.bands_cm.defined) << ","
         << fmt(r.bands_mcs.lvp_hi) << ","
         << band_cell(r.bands_cm.lvp_lo, r.bands_cm.defined) << ","
         << fmt(r.bands_mcs.lvp_lo) << "," << (undef ? "undefined-baseline" : "ok")
         << "\n";
    }
  }
  {
    std::ofstream os;
    if (!em.open("aggregates.csv", os, out)) return false;
    os << "# means skip undefined-baseline rows; tic is the class mean\n";
    os << "class,count,eps_mu_mean,eps_mu_max,eps_sigma_mean,eps_sigma_max,arms_mean,"
          "arms_max,tic,tic_max\n";
    for (const auto& a : rep.classes) {
      os << a.cls << "," << a.count << "," << fmt(a.eps_mu_mean) << ","
         << fmt(a.eps_mu_max) << "," << fmt(a.eps_sigma_mean) << ","
         << fmt(a.eps_sigma_max) << "," << fmt(a.arms_mean) << "," << fmt(a.arms_max)
         << "," << fmt(a.tic_mean) << "," << fmt(a.tic_max) << "\n";
    }
  }
  return true;
}

struct StageClock {
  using clock = std::chrono::steady_clock;
  std::vector<std::pair<std::string, double>> stages;
  clock::time_point t0 = clock::now();
  clock::time_point last = t0;

  void mark(const std::string& name) {
    const auto now = clock::now();
    stages.emplace_back(name, std::chrono::duration<double>(now - last).count());
    last = now;
  }
  double total() const {
    return std::chrono::duration<double>(clock::now() - t0).count();
  }
};

// timings.csv is informational and excluded from the determinism contract.
void write_timings(const RunConfig& cfg, const StageClock& clk, RunOutcome& out) {
  const auto path = std::filesystem::path(cfg.out_dir) / "timings.csv";
  std::ofstream os(path, std::ios::binary);
  if (!os) return;
  os << "stage,seconds\n";
  for (const auto& [name, sec] : clk.stages) {
    os << name << "," << fmt(sec) << "\n";
  }
  os << "total," << fmt(clk.total()) << "\n";
  out.files_written.push_back(path.string());
}

Status map_plf_failure(const plf::PlfResult& res) {
  if (res.stage == "options") return Status::InvalidArgs;
  if (res.stage == "base-solve") return Status::Diverged;
  return Status::Internal;
}

}  // namespace

std::optional<Method> method_from_string(const std::string& s) {
  if (s == "flow") return Method::Flow;
  if (s == "cm") return Method::Cm;
  if (s == "mcs") return Method::Mcs;
  if (s == "compare") return Method::Compare;
  return std::nullopt;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::Flow: return "flow";
    case Method::Cm: return "cm";
    case Method::Mcs: return "mcs";
    case Method::Compare: return "compare";
  }
  return "?";
}

RunOutcome run_pipeline(const RunConfig& cfg) {
  RunOutcome out;

  if (cfg.case_path.empty()) {
    out.status = Status::InvalidArgs;
    out.message = "no case file given";
    return out;
  }
  if ((cfg.method == Method::Mcs || cfg.method == Method::Compare) && cfg.samples < 1) {
    out.status = Status::InvalidArgs;
    out.message = "samples must be >= 1";
    return out;
  }
  if (cfg.order < 2 || cfg.order > 8) {
    out.status = Status::InvalidArgs;
    out.message = "order must be in [2, 8]";
    return out;
  }
  if (cfg.grid_points != 0 && cfg.grid_points < 33) {
    out.status = Status::InvalidArgs;
    out.message = "grid points must be >= 33";
    return out;
  }
  const int grid_points =
      cfg.grid_points != 0 ? cfg.grid_points
                           : (cfg.method == Method::Compare ? 65 : 513);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    out.status = Status::IoFailed;
    out.message = "cannot create output directory " + cfg.out_dir;
    return out;
  }

  StageClock clk;
  io::LoadResult loaded = io::load_case_file(cfg.case_path);
  if (!loaded.parse_ok) {
    out.status = Status::ParseFailed;
    out.message = loaded.diagnostics.joined();
    return out;
  }
  if (!loaded.diagnostics.ok()) {
    out.status = Status::ValidationFailed;
    out.message = loaded.diagnostics.joined();
    return out;
  }
  clk.mark("load");

  try {
    const grid::NetworkCase& net = loaded.net;
    solver::Problem prob(net);
    Emitter em(cfg, net.name, grid_points);

    const auto monitored = solver::default_monitors(net, cfg.monitor);
    if (cfg.method != Method::Flow && monitored.empty()) {
      out.status = Status::InvalidArgs;
      out.message = "monitor filter matches no variables";
      return out;
    }

    switch (cfg.method) {
      case Method::Flow: {
        // A case with stochastic sources solves at expected injections, so
        // the deterministic table matches the probabilistic base point.
        std::vector<solver::InjectionDelta> deltas;
        if (!net.stochastic.empty()) {
          deltas = plf::mean_injection_deltas(prob);
        }
        const auto sol = prob.solve({}, deltas.empty() ? nullptr : &deltas);
        clk.mark("solve");
        if (!sol.converged) {
          out.status = Status::Diverged;
          out.message = sol.failure.empty() ? "solve did not converge" : sol.failure;
          return out;
        }
        if (!write_flow_files(prob, sol, deltas.empty() ? nullptr : &deltas, em,
                              out))
          return out;
        out.message = "converged in " + std::to_string(sol.iterations) +
                      " iterations, max mismatch " + fmt(sol.max_mismatch);
        break;
      }
      case Method::Cm: {
        plf::PlfOptions opt;
        opt.order = cfg.order;
        opt.grid_points = grid_points;
        opt.seed = cfg.seed;
        const auto res = plf::run_plf_cm(net, opt, monitored);
        clk.mark("cm");
        if (!res.ok) {
          out.status = map_plf_failure(res);
          out.message = res.stage + ": " + res.error;
          return out;
        }
        if (!write_cm_files(res, em, out, "")) return out;
        out.message = "propagated " + std::to_string(res.variables.size()) + " variables";
        break;
      }
      case Method::Mcs: {
        mcs::McsOptions opt;
        opt.samples = cfg.samples;
        opt.seed = cfg.seed;
        opt.workers = cfg.workers;
        opt.order = cfg.order;
        const auto res = mcs::run_mcs(net, opt, monitored);
        clk.mark("mcs");
        if (res.values.cols() >= 2) {
          if (!write_mcs_files(res, grid_points, em, out, "")) return out;
        }
        if (!res.ok) {
          out.status = Status::OracleUnreliable;
          out.message = res.error;
          return out;
        }
        out.message = std::to_string(res.requested - res.failures) + " of " +
                      std::to_string(res.requested) + " samples solved";
        break;
      }
      case Method::Compare: {
        plf::PlfOptions popt;
        popt.order = cfg.order;
        popt.grid_points = grid_points;
        popt.seed = cfg.seed;
        const auto cm = plf::run_plf_cm(net, popt, monitored);
        clk.mark("cm");
        if (!cm.ok) {
          out.status = map_plf_failure(cm);
          out.message = cm.stage + ": " + cm.error;
          return out;
        }
        mcs::McsOptions mopt;
        mopt.samples = cfg.samples;
        mopt.seed = cfg.seed;
        mopt.workers = cfg.workers;
        mopt.order = cfg.order;
        const auto oracle = mcs::run_mcs(net, mopt, monitored);
        clk.mark("mcs");
        if (!oracle.ok) {
          out.status = Status::OracleUnreliable;
          out.message = oracle.error;
          return out;
        }
        if (!write_cm_files(cm, em, out, "cm_")) return out;
        if (!write_mcs_files(oracle, grid_points, em, out, "mcs_")) return out;
        const auto rep = metrics::compare(cm, oracle);
        clk.mark("metrics");
        if (!write_compare_files(rep, em, out)) return out;
        out.message = "compared " + std::to_string(rep.rows.size()) + " variables";
        break;
      }
    }
    write_timings(cfg, clk, out);
  } catch (const std::exception& e) {
    out.status = Status::Internal;
    out.message = e.what();
    return out;
  }
  return out;
}

}  // namespace acdcflow::pipeline
