#include "acdcflow/solver.hpp"

#include <cmath>

namespace acdcflow::solver {

namespace {

// Partials of the monitored quantities with respect to the normalized state
// (delta, dU/U, dU_dc/U_dc), columns aligned with the mismatch rows.
Eigen::MatrixXd monitored_partials(const Problem& p, const State& s,
                                   const std::vector<MonitoredVariable>& monitored) {
  const auto& net = p.net();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(monitored.size(), p.n_unknowns());

  for (size_t r = 0; r < monitored.size(); ++r) {
    const auto& mv = monitored[r];
    switch (mv.kind) {
      case MonitoredVariable::Kind::AcBusU: {
        const int col = p.row_of_ac_q(mv.index);
        if (col >= 0) g(r, col) = s.ac_u[mv.index];
        break;
      }
      case MonitoredVariable::Kind::DcBusU: {
        const int col = p.row_of_dc_p(mv.index);
        if (col >= 0) g(r, col) = s.dc_u[mv.index];
        break;
      }
      case MonitoredVariable::Kind::AcLineP:
      case MonitoredVariable::Kind::AcLineQ: {
        const auto& l = net.ac_lines[mv.index];
        const int f = p.ac_bus_index(l.from);
        const int t = p.ac_bus_index(l.to);
        const std::complex<double> y = 1.0 / std::complex<double>(l.r, l.x);
        const double gl = y.real(), bl = y.imag();
        const double uf = s.ac_u[f], ut = s.ac_u[t];
        const double d = s.ac_delta[f] - s.ac_delta[t];
        const double tt = uf * ut * (gl * std::cos(d) + bl * std::sin(d));
        const double uu = uf * ut * (gl * std::sin(d) - bl * std::cos(d));
        const int cdf = p.row_of_ac_p(f), cdt = p.row_of_ac_p(t);
        const int cvf = p.row_of_ac_q(f), cvt = p.row_of_ac_q(t);
        if (mv.kind == MonitoredVariable::Kind::AcLineP) {
          if (cdf >= 0) g(r, cdf) = uu;
          if (cdt >= 0) g(r, cdt) = -uu;
          if (cvf >= 0) g(r, cvf) = 2.0 * uf * uf * gl - tt;
          if (cvt >= 0) g(r, cvt) = -tt;
        } else {
          const double bsh = bl + l.b_shunt / 2.0;
          if (cdf >= 0) g(r, cdf) = -tt;
          if (cdt >= 0) g(r, cdt) = tt;
          if (cvf >= 0) g(r, cvf) = -2.0 * uf * uf * bsh - uu;
          if (cvt >= 0) g(r, cvt) = -uu;
        }
        break;
      }
      case MonitoredVariable::Kind::DcLineP: {
        const auto& l = net.dc_lines[mv.index];
        const int f = p.dc_bus_index(l.from);
        const int t = p.dc_bus_index(l.to);
        const double gc = grid::dc_line_conductance(l.r);
        const int cf = p.row_of_dc_p(f), ct = p.row_of_dc_p(t);
        if (cf >= 0) g(r, cf) = gc * (2.0 * s.dc_u[f] - s.dc_u[t]) * s.dc_u[f];
        if (ct >= 0) g(r, ct) = -s.dc_u[f] * gc * s.dc_u[t];
        break;
      }
    }
  }
  return g;
}

}  // namespace

int SensitivityModel::column_of(InjectionDelta::Kind kind, int bus) const {
  for (size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].kind == kind && columns[c].bus == bus) return static_cast<int>(c);
  }
  return -1;
}

SensitivityModel sensitivity_matrices(const Problem& p, const State& base,
                                      const std::vector<MonitoredVariable>& monitored) {
  const auto& net = p.net();
  const int n = p.n_unknowns();

  SensitivityModel sm;
  sm.monitored = monitored;

  // One injection column per mismatch row: each scheduled injection enters
  // its own row with coefficient +1, so d(state)/d(injection) = -M^-1.
  sm.columns.resize(n);
  sm.state_labels.resize(n);
  sm.base_state.resize(n);
  Eigen::VectorXd scale(n);
  for (int i = 0; i < p.n_ac(); ++i) {
    const std::string id = std::to_string(net.ac_buses[i].id);
    if (const int r = p.row_of_ac_p(i); r >= 0) {
      sm.columns[r] = {InjectionDelta::Kind::AcP, i, "Pinj:" + id};
      sm.state_labels[r] = "delta:" + id;
      sm.base_state[r] = base.ac_delta[i];
      scale[r] = 1.0;
    }
    if (const int r = p.row_of_ac_q(i); r >= 0) {
      sm.columns[r] = {InjectionDelta::Kind::AcQ, i, "Qinj:" + id};
      sm.state_labels[r] = "U:" + id;
      sm.base_state[r] = base.ac_u[i];
      scale[r] = base.ac_u[i];
    }
  }
  for (int i = 0; i < p.n_dc(); ++i) {
    if (const int r = p.row_of_dc_p(i); r >= 0) {
      sm.columns[r] = {InjectionDelta::Kind::DcP, i, "Pdcinj:" + std::to_string(net.dc_buses[i].id)};
      sm.state_labels[r] = "Udc:" + std::to_string(net.dc_buses[i].id);
      sm.base_state[r] = base.dc_u[i];
      scale[r] = base.dc_u[i];
    }
  }

  const Eigen::MatrixXd m = p.jacobian(base);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd s_tilde = -lu.inverse();

  sm.s0 = scale.asDiagonal() * s_tilde;
  const Eigen::MatrixXd g = monitored_partials(p, base, monitored);
  sm.t0 = g * s_tilde;
  sm.base_monitored = monitored_values(p, base, monitored);

  // Converter correction terms at the base point: the affine offset of the
  // linearized relation between scheduled injections and the state.
  sm.p_delta = Eigen::VectorXd::Zero(n);
  const auto pcc = p.converter_pcc_powers(base);
  for (size_t k = 0; k < net.converters.size(); ++k) {
    const int i = p.ac_bus_index(net.converters[k].pcc_bus);
    const int d = p.dc_bus_index(net.converters[k].dc_bus);
    if (const int r = p.row_of_ac_p(i); r >= 0) sm.p_delta[r] -= pcc[k].p_s;
    if (const int r = p.row_of_ac_q(i); r >= 0) sm.p_delta[r] -= pcc[k].q_s;
    if (const int r = p.row_of_dc_p(d); r >= 0) sm.p_delta[r] += pcc[k].p_dc;
  }
  sm.x_delta = sm.s0 * sm.p_delta;
  sm.h_delta = sm.t0 * sm.p_delta;
  return sm;
}

}  // namespace acdcflow::solver
