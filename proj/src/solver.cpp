#include "acdcflow/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace acdcflow::solver {

namespace {

// Sending-end/receiving-end admittance terms for bus pair (i, j):
//   t = U_i U_j (G cos d_ij + B sin d_ij), u = U_i U_j (G sin d_ij - B cos d_ij)
struct PairTerms {
  double t, u;
};

PairTerms pair_terms(double ui, double di, double uj, double dj, std::complex<double> y) {
  const double d = di - dj;
  const double c = std::cos(d), s = std::sin(d);
  return {ui * uj * (y.real() * c + y.imag() * s), ui * uj * (y.real() * s - y.imag() * c)};
}

struct ConverterInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Small root of a*P^2 - P + c = 0 in the cancellation-safe form
// P = 2c / (1 + sqrt(1-4ac)); handles a == 0. The discriminant sqrt equals
// 1 - 2aP, which is exactly the implicit-derivative denominator.
struct QuadRoot {
  double p;
  double dp_da;  // P^2 / D
  double dp_dc;  // 1 / D
};

QuadRoot pcc_power_root(double a, double c) {
  const double disc = 1.0 - 4.0 * a * c;
  if (disc < 1e-12) {
    throw ConverterInfeasible("converter PCC power equation has no real solution (loss-limited)");
  }
  const double d = std::sqrt(disc);
  const double p = 2.0 * c / (1.0 + d);
  return {p, p * p / d, 1.0 / d};
}

}  // namespace

// Per-converter PCC evaluation: values plus every partial derivative the
// Jacobian needs, in one place so mismatch and Jacobian cannot drift apart.
struct Problem::PccEval {
  double p_s = 0.0, q_s = 0.0, p_dc = 0.0;
  double dps_dus = 0.0;    // d p_s / d U_pcc (zero when the PCC holds voltage)
  double dps_dqsk = 0.0;   // d p_s / d Q_sk for balance-Q modes
  std::vector<std::pair<int, double>> dps_dudc;  // (DC bus index, d p_s / d U_dj)
  double dpdc_dus = 0.0;   // d p_dc / d U_pcc (constant-P stations)
  double dpdc_dqsk = 0.0;  // d p_dc / d Q_sk (constant-P stations on PV buses)
  double dpdc_dudc = 0.0;  // d p_dc / d U_dd (droop slope)
  bool q_balance = false;
};

Problem::Problem(const grid::NetworkCase& net) : net_(&net) {
  const int na = n_ac();
  const int nd = n_dc();

  std::map<int, int> ac_ids, dc_ids;
  for (int i = 0; i < na; ++i) ac_ids[net.ac_buses[i].id] = i;
  for (int i = 0; i < nd; ++i) dc_ids[net.dc_buses[i].id] = i;
  ac_id_to_index_ = std::move(ac_ids);
  dc_id_to_index_ = std::move(dc_ids);

  ybus_ = Eigen::MatrixXcd::Zero(na, na);
  for (const auto& l : net.ac_lines) {
    const int f = ac_id_to_index_.at(l.from);
    const int t = ac_id_to_index_.at(l.to);
    const std::complex<double> y = 1.0 / std::complex<double>(l.r, l.x);
    const std::complex<double> ysh(0.0, l.b_shunt / 2.0);
    ybus_(f, f) += y + ysh;
    ybus_(t, t) += y + ysh;
    ybus_(f, t) -= y;
    ybus_(t, f) -= y;
  }

  gdc_ = Eigen::MatrixXd::Zero(nd, nd);
  for (const auto& l : net.dc_lines) {
    const int f = dc_id_to_index_.at(l.from);
    const int t = dc_id_to_index_.at(l.to);
    const double g = grid::dc_line_conductance(l.r);
    gdc_(f, t) += g;
    gdc_(t, f) += g;
    gdc_(f, f) += g;
    gdc_(t, t) += g;
  }

  p_row_.assign(na, -1);
  q_row_.assign(na, -1);
  dc_row_.assign(nd, -1);
  for (int i = 0; i < na; ++i) {
    if (net.ac_buses[i].kind != grid::AcBusKind::Slack) {
      p_row_[i] = n_p_++;
      p_row_bus_.push_back(i);
    }
  }
  for (int i = 0; i < na; ++i) {
    if (net.ac_buses[i].kind == grid::AcBusKind::PQ) {
      q_row_[i] = n_p_ + n_q_++;
      q_row_bus_.push_back(i);
    }
  }
  for (int i = 0; i < nd; ++i) {
    if (net.dc_buses[i].kind != grid::DcBusKind::ConstantV) {
      dc_row_[i] = n_p_ + n_q_ + n_dcr_++;
      dc_row_bus_.push_back(i);
    }
  }
  n_rows_ = n_p_ + n_q_ + n_dcr_;

  bus_convs_.assign(na, {});
  for (const auto& c : net.converters) {
    ConvData cd;
    cd.pcc = ac_id_to_index_.at(c.pcc_bus);
    cd.dcb = dc_id_to_index_.at(c.dc_bus);
    cd.y_lump = grid::lump_converter_admittance(c);
    cd.r_ck = grid::lump_converter_impedance(c).real();
    cd.x_ck = grid::lump_converter_impedance(c).imag();
    cd.mode = c.mode;
    cd.set = c.set;
    cd.id = c.id;
    bus_convs_[cd.pcc].push_back(static_cast<int>(conv_.size()));
    conv_.push_back(cd);
  }
}

int Problem::ac_bus_index(int id) const {
  auto it = ac_id_to_index_.find(id);
  if (it == ac_id_to_index_.end()) throw std::invalid_argument("unknown AC bus id");
  return it->second;
}

int Problem::dc_bus_index(int id) const {
  auto it = dc_id_to_index_.find(id);
  if (it == dc_id_to_index_.end()) throw std::invalid_argument("unknown DC bus id");
  return it->second;
}

State Problem::init_state() const {
  State s;
  s.ac_u = Eigen::VectorXd::Ones(n_ac());
  s.ac_delta = Eigen::VectorXd::Zero(n_ac());
  s.dc_u = Eigen::VectorXd::Ones(n_dc());
  for (int i = 0; i < n_ac(); ++i) {
    const auto& b = net_->ac_buses[i];
    if (b.kind != grid::AcBusKind::PQ) s.ac_u[i] = b.v_set;
    if (b.kind == grid::AcBusKind::Slack) s.ac_delta[i] = b.angle_set;
  }
  for (const auto& c : conv_) {
    if (c.mode == grid::ControlMode::UdcQ || c.mode == grid::ControlMode::UdcUs) {
      s.dc_u[c.dcb] = c.set.u_dc;
    } else if (c.mode == grid::ControlMode::DroopQ || c.mode == grid::ControlMode::DroopUs) {
      s.dc_u[c.dcb] = c.set.u_dc_ref;
    }
  }
  return s;
}

void Problem::calc_bus_powers(const State& s, Eigen::VectorXd& p, Eigen::VectorXd& q) const {
  const int na = n_ac();
  Eigen::VectorXcd v(na);
  for (int i = 0; i < na; ++i) v[i] = std::polar(s.ac_u[i], s.ac_delta[i]);
  const Eigen::VectorXcd inj = v.cwiseProduct((ybus_ * v).conjugate());
  p = inj.real();
  q = inj.imag();
}

// DC network flow drawn from bus d: U_d * sum_lines G (U_d - U_j).
double Problem::dc_flow(const State& s, int d) const {
  double acc = 0.0;
  for (int j = 0; j < n_dc(); ++j) {
    if (j == d || gdc_(d, j) == 0.0) continue;
    acc += gdc_(d, j) * (s.dc_u[d] - s.dc_u[j]);
  }
  return s.dc_u[d] * acc;
}

// DC-side power demanded from a constant-voltage station: the network flow at
// its (fixed-voltage) bus minus the scheduled bus injection.
double Problem::dc_station_demand(const State& s, int d, double pdc_sched) const {
  return dc_flow(s, d) - pdc_sched;
}

std::vector<Problem::PccEval> Problem::eval_converters(const State& s,
                                                       const Eigen::VectorXd& q_sched,
                                                       const Eigen::VectorXd& pdc_sched,
                                                       const Eigen::VectorXd& q_calc) const {
  std::vector<PccEval> ev(conv_.size());

  // Fixed reactive setpoints first: balance-Q converters need the sum of the
  // other stations' draws on their bus.
  Eigen::VectorXd fixed_q_at_bus = Eigen::VectorXd::Zero(n_ac());
  for (size_t k = 0; k < conv_.size(); ++k) {
    const auto& c = conv_[k];
    const bool balance = c.mode == grid::ControlMode::PUs ||
                         c.mode == grid::ControlMode::UdcUs ||
                         c.mode == grid::ControlMode::DroopUs;
    if (!balance) fixed_q_at_bus[c.pcc] += c.set.q_s;
  }

  for (size_t k = 0; k < conv_.size(); ++k) {
    const auto& c = conv_[k];
    PccEval& e = ev[k];
    const double us = s.ac_u[c.pcc];
    const double r = c.r_ck;

    switch (c.mode) {
      case grid::ControlMode::PQ: {
        e.p_s = c.set.p_s;
        e.q_s = c.set.q_s;
        const double s2 = e.p_s * e.p_s + e.q_s * e.q_s;
        e.p_dc = e.p_s - s2 * r / (us * us);
        e.dpdc_dus = 2.0 * s2 * r / (us * us * us);
        break;
      }
      case grid::ControlMode::PUs: {
        e.p_s = c.set.p_s;
        e.q_balance = true;
        e.q_s = q_sched[c.pcc] - fixed_q_at_bus[c.pcc] - q_calc[c.pcc];
        const double u = c.set.u_s;
        e.p_dc = e.p_s - (e.p_s * e.p_s + e.q_s * e.q_s) * r / (u * u);
        e.dpdc_dqsk = -2.0 * e.q_s * r / (u * u);
        break;
      }
      case grid::ControlMode::UdcQ:
      case grid::ControlMode::UdcUs: {
        const bool fixed_us = c.mode == grid::ControlMode::UdcUs;
        e.q_balance = fixed_us;
        e.q_s = fixed_us ? (q_sched[c.pcc] - fixed_q_at_bus[c.pcc] - q_calc[c.pcc])
                         : c.set.q_s;
        const double u = fixed_us ? c.set.u_s : us;
        const double demand = dc_station_demand(s, c.dcb, pdc_sched[c.dcb]);
        const double a = r / (u * u);
        const double cc = e.q_s * e.q_s * r / (u * u) + demand;
        const QuadRoot root = pcc_power_root(a, cc);
        e.p_s = root.p;
        e.p_dc = demand;
        if (!fixed_us) {
          e.dps_dus = root.dp_da * (-2.0 * r / (u * u * u)) +
                      root.dp_dc * (-2.0 * e.q_s * e.q_s * r / (u * u * u));
        } else {
          e.dps_dqsk = root.dp_dc * 2.0 * e.q_s * r / (u * u);
        }
        // demand depends on the neighbours' DC voltages
        for (int j = 0; j < n_dc(); ++j) {
          if (j == c.dcb || gdc_(c.dcb, j) == 0.0) continue;
          e.dps_dudc.emplace_back(j, root.dp_dc * (-s.dc_u[c.dcb] * gdc_(c.dcb, j)));
        }
        break;
      }
      case grid::ControlMode::DroopQ:
      case grid::ControlMode::DroopUs: {
        const bool fixed_us = c.mode == grid::ControlMode::DroopUs;
        e.q_balance = fixed_us;
        e.q_s = fixed_us ? (q_sched[c.pcc] - fixed_q_at_bus[c.pcc] - q_calc[c.pcc])
                         : c.set.q_s;
        const double u = fixed_us ? c.set.u_s : us;
        const double pdrop =
            grid::droop_power(s.dc_u[c.dcb], c.set.u_dc_ref, c.set.p_dc_ref, c.set.k_droop);
        const double a = r / (u * u);
        const double cc = e.q_s * e.q_s * r / (u * u) + pdrop;
        const QuadRoot root = pcc_power_root(a, cc);
        e.p_s = root.p;
        e.p_dc = pdrop;
        e.dpdc_dudc = -1.0 / c.set.k_droop;
        if (!fixed_us) {
          e.dps_dus = root.dp_da * (-2.0 * r / (u * u * u)) +
                      root.dp_dc * (-2.0 * e.q_s * e.q_s * r / (u * u * u));
        } else {
          e.dps_dqsk = root.dp_dc * 2.0 * e.q_s * r / (u * u);
        }
        e.dps_dudc.emplace_back(c.dcb, root.dp_dc * (-1.0 / c.set.k_droop));
        break;
      }
    }
  }
  return ev;
}

void Problem::effective_schedules(const std::vector<InjectionDelta>* deltas,
                                  Eigen::VectorXd& p, Eigen::VectorXd& q,
                                  Eigen::VectorXd& pdc) const {
  p.resize(n_ac());
  q.resize(n_ac());
  for (int i = 0; i < n_ac(); ++i) {
    p[i] = net_->ac_buses[i].p_inject;
    q[i] = net_->ac_buses[i].q_inject;
  }
  pdc.resize(n_dc());
  for (int i = 0; i < n_dc(); ++i) pdc[i] = net_->dc_buses[i].p_inject;
  if (deltas) {
    for (const auto& d : *deltas) {
      switch (d.kind) {
        case InjectionDelta::Kind::AcP: p[d.bus] += d.value; break;
        case InjectionDelta::Kind::AcQ: q[d.bus] += d.value; break;
        case InjectionDelta::Kind::DcP: pdc[d.bus] += d.value; break;
      }
    }
  }
}

Eigen::VectorXd Problem::mismatch(const State& s,
                                  const std::vector<InjectionDelta>* deltas) const {
  if (s.ac_u.size() != n_ac() || s.dc_u.size() != n_dc()) {
    throw std::invalid_argument("state dimension does not match the case");
  }
  Eigen::VectorXd p_sched, q_sched, pdc_sched;
  effective_schedules(deltas, p_sched, q_sched, pdc_sched);

  Eigen::VectorXd p_calc, q_calc;
  calc_bus_powers(s, p_calc, q_calc);
  const auto ev = eval_converters(s, q_sched, pdc_sched, q_calc);

  Eigen::VectorXd f(n_rows_);
  for (int r = 0; r < n_p_; ++r) {
    const int i = p_row_bus_[r];
    double corr = 0.0;
    for (int k : bus_convs_[i]) corr += ev[k].p_s;
    f[r] = p_sched[i] - corr - p_calc[i];
  }
  for (int r = 0; r < n_q_; ++r) {
    const int i = q_row_bus_[r];
    double corr = 0.0;
    for (int k : bus_convs_[i]) corr += ev[k].q_s;
    f[n_p_ + r] = q_sched[i] - corr - q_calc[i];
  }
  for (int r = 0; r < n_dcr_; ++r) {
    const int d = dc_row_bus_[r];
    double conv_inj = 0.0;
    for (size_t k = 0; k < conv_.size(); ++k) {
      if (conv_[k].dcb == d) conv_inj += ev[k].p_dc;
    }
    f[n_p_ + n_q_ + r] = pdc_sched[d] + conv_inj - dc_flow(s, d);
  }
  return f;
}

Eigen::MatrixXd Problem::jacobian(const State& s,
                                  const std::vector<InjectionDelta>* deltas) const {
  Eigen::VectorXd p_sched, q_sched, pdc_sched;
  effective_schedules(deltas, p_sched, q_sched, pdc_sched);
  Eigen::VectorXd p_calc, q_calc;
  calc_bus_powers(s, p_calc, q_calc);
  const auto ev = eval_converters(s, q_sched, pdc_sched, q_calc);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_rows_, n_rows_);

  const int na = n_ac();
  // Column of delta_j: same index as its P row; column of U_j: its Q row;
  // column of U_dj: its DC row.
  auto dcol = [&](int bus) { return p_row_[bus]; };
  auto vcol = [&](int bus) { return q_row_[bus]; };
  auto ucol = [&](int dbus) { return dc_row_[dbus]; };

  // Adds coef * dQ_calc_i/d(state) to row `row` across every existing column.
  auto add_q_row = [&](int i, double coef, int row) {
    if (coef == 0.0) return;
    for (int j = 0; j < na; ++j) {
      if (j == i) continue;
      if (ybus_(i, j) == std::complex<double>(0.0, 0.0)) continue;
      const PairTerms pt = pair_terms(s.ac_u[i], s.ac_delta[i], s.ac_u[j], s.ac_delta[j],
                                      ybus_(i, j));
      if (dcol(j) >= 0) m(row, dcol(j)) += coef * (-pt.t);
      if (vcol(j) >= 0) m(row, vcol(j)) += coef * pt.u;
    }
    const double uii = s.ac_u[i];
    if (dcol(i) >= 0) m(row, dcol(i)) += coef * (p_calc[i] - ybus_(i, i).real() * uii * uii);
    if (vcol(i) >= 0) m(row, vcol(i)) += coef * (q_calc[i] - ybus_(i, i).imag() * uii * uii);
  };

  // AC network part: mismatch rows carry -P_calc / -Q_calc.
  for (int i = 0; i < na; ++i) {
    const int rp = p_row_[i];
    const int rq = q_row_[i];
    if (rp < 0 && rq < 0) continue;
    for (int j = 0; j < na; ++j) {
      if (j == i) continue;
      if (ybus_(i, j) == std::complex<double>(0.0, 0.0)) continue;
      const PairTerms pt = pair_terms(s.ac_u[i], s.ac_delta[i], s.ac_u[j], s.ac_delta[j],
                                      ybus_(i, j));
      if (rp >= 0) {
        if (dcol(j) >= 0) m(rp, dcol(j)) -= pt.u;
        if (vcol(j) >= 0) m(rp, vcol(j)) -= pt.t;
      }
      if (rq >= 0) {
        if (dcol(j) >= 0) m(rq, dcol(j)) -= -pt.t;
        if (vcol(j) >= 0) m(rq, vcol(j)) -= pt.u;
      }
    }
    const double ui = s.ac_u[i];
    const double gii = ybus_(i, i).real(), bii = ybus_(i, i).imag();
    if (rp >= 0) {
      if (dcol(i) >= 0) m(rp, dcol(i)) -= -q_calc[i] - bii * ui * ui;
      if (vcol(i) >= 0) m(rp, vcol(i)) -= p_calc[i] + gii * ui * ui;
    }
    if (rq >= 0) {
      if (dcol(i) >= 0) m(rq, dcol(i)) -= p_calc[i] - gii * ui * ui;
      if (vcol(i) >= 0) m(rq, vcol(i)) -= q_calc[i] - bii * ui * ui;
    }
  }

  // DC network part: rows carry -dc_flow.
  for (int r = 0; r < n_dcr_; ++r) {
    const int d = dc_row_bus_[r];
    const int row = n_p_ + n_q_ + r;
    double own = 0.0;
    for (int j = 0; j < n_dc(); ++j) {
      if (j == d || gdc_(d, j) == 0.0) continue;
      own += gdc_(d, j) * (2.0 * s.dc_u[d] - s.dc_u[j]);
      if (ucol(j) >= 0) m(row, ucol(j)) += s.dc_u[d] * gdc_(d, j) * s.dc_u[j];
    }
    m(row, ucol(d)) += -own * s.dc_u[d];
  }

  // Converter couplings.
  for (size_t k = 0; k < conv_.size(); ++k) {
    const auto& c = conv_[k];
    const auto& e = ev[k];
    const int rp = p_row_[c.pcc];
    // P row at the PCC: -p_s(state).
    if (e.dps_dus != 0.0 && vcol(c.pcc) >= 0) {
      m(rp, vcol(c.pcc)) += -e.dps_dus * s.ac_u[c.pcc];
    }
    for (const auto& [j, dv] : e.dps_dudc) {
      if (ucol(j) >= 0) m(rp, ucol(j)) += -dv * s.dc_u[j];
    }
    if (e.q_balance && e.dps_dqsk != 0.0) {
      // dQ_sk/dx = -dQ_calc/dx at the PCC
      add_q_row(c.pcc, e.dps_dqsk, rp);
    }
    // DC row at the converter bus: +p_dc(state).
    const int rd = dc_row_[c.dcb];
    if (rd >= 0) {
      if (e.dpdc_dus != 0.0 && vcol(c.pcc) >= 0) {
        m(rd, vcol(c.pcc)) += e.dpdc_dus * s.ac_u[c.pcc];
      }
      if (e.q_balance && e.dpdc_dqsk != 0.0) {
        add_q_row(c.pcc, -e.dpdc_dqsk, rd);
      }
      if (e.dpdc_dudc != 0.0) {
        m(rd, ucol(c.dcb)) += e.dpdc_dudc * s.dc_u[c.dcb];
      }
    }
  }

  return m;
}

Problem::Solution Problem::solve(const SolverOptions& opt,
                                 const std::vector<InjectionDelta>* deltas) const {
  Solution sol;
  sol.state = init_state();
  State& s = sol.state;

  const bool dense = opt.linear == SolverOptions::Linear::Dense ||
                     (opt.linear == SolverOptions::Linear::Auto && n_rows_ <= opt.dense_limit);

  try {
    for (int it = 1; it <= opt.max_iterations; ++it) {
      const Eigen::VectorXd f = mismatch(s, deltas);
      const double maxf = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
      sol.trace.push_back({it, maxf});
      sol.iterations = it;
      sol.max_mismatch = maxf;
      if (maxf < opt.tolerance) {
        sol.converged = true;
        break;
      }
      if (it == opt.max_iterations) break;

      const Eigen::MatrixXd m = jacobian(s, deltas);
      Eigen::VectorXd dx;
      if (dense) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
        dx = lu.solve(-f);
      } else {
        Eigen::SparseMatrix<double> sm = m.sparseView();
        sm.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(sm);
        lu.factorize(sm);
        if (lu.info() != Eigen::Success) {
          sol.failure = "sparse factorization failed (structurally singular Jacobian)";
          return sol;
        }
        dx = lu.solve(-f);
      }
      if (!dx.allFinite()) {
        sol.failure = "linear solve produced non-finite step (singular Jacobian)";
        return sol;
      }

      for (int r = 0; r < n_p_; ++r) s.ac_delta[p_row_bus_[r]] += dx[r];
      for (int r = 0; r < n_q_; ++r) s.ac_u[q_row_bus_[r]] *= 1.0 + dx[n_p_ + r];
      for (int r = 0; r < n_dcr_; ++r) s.dc_u[dc_row_bus_[r]] *= 1.0 + dx[n_p_ + n_q_ + r];
    }
  } catch (const ConverterInfeasible& e) {
    sol.failure = e.what();
    return sol;
  }

  if (!sol.converged) {
    std::ostringstream os;
    os << "no convergence after " << sol.iterations
       << " iterations, max mismatch " << sol.max_mismatch;
    sol.failure = os.str();
    return sol;
  }

  // Populate converter internals from the converged state.
  Eigen::VectorXd p_sched, q_sched, pdc_sched;
  effective_schedules(deltas, p_sched, q_sched, pdc_sched);
  Eigen::VectorXd p_calc, q_calc;
  calc_bus_powers(s, p_calc, q_calc);
  const auto ev = eval_converters(s, q_sched, pdc_sched, q_calc);
  for (size_t k = 0; k < conv_.size(); ++k) {
    const auto& c = conv_[k];
    const auto& e = ev[k];
    ConverterSolution cs;
    cs.converter_id = c.id;
    cs.p_s = e.p_s;
    cs.q_s = e.q_s;
    const std::complex<double> vs = std::polar(s.ac_u[c.pcc], s.ac_delta[c.pcc]);
    const std::complex<double> i = std::conj(std::complex<double>(e.p_s, e.q_s) / vs);
    const std::complex<double> vc = vs - i / c.y_lump;
    cs.u_c = std::abs(vc);
    cs.delta_c = std::arg(vc);
    cs.loss_p = std::norm(i) * c.r_ck;
    cs.loss_q = std::norm(i) * c.x_ck;
    cs.p_c = e.p_s - cs.loss_p;
    cs.q_c = e.q_s - cs.loss_q;
    cs.p_dc = cs.p_c;
    sol.converters.push_back(cs);
  }
  return sol;
}

std::vector<Problem::ConverterPcc> Problem::converter_pcc_powers(const State& s) const {
  Eigen::VectorXd p_sched, q_sched, pdc_sched;
  effective_schedules(nullptr, p_sched, q_sched, pdc_sched);
  Eigen::VectorXd p_calc, q_calc;
  calc_bus_powers(s, p_calc, q_calc);
  const auto ev = eval_converters(s, q_sched, pdc_sched, q_calc);
  std::vector<ConverterPcc> out;
  out.reserve(ev.size());
  for (const auto& e : ev) out.push_back({e.p_s, e.q_s, e.p_dc});
  return out;
}

JacobianBlocks jacobian_blocks(const Problem& p, const State& s) {
  return {p.jacobian(s), p.n_p_rows(), p.n_q_rows(), p.n_dc_rows()};
}

BranchFlows branch_flows(const Problem& p, const State& s) {
  const auto& net = p.net();
  BranchFlows bf;
  for (size_t li = 0; li < net.ac_lines.size(); ++li) {
    const auto& l = net.ac_lines[li];
    const int f = p.ac_bus_index(l.from);
    const int t = p.ac_bus_index(l.to);
    const std::complex<double> y = 1.0 / std::complex<double>(l.r, l.x);
    const std::complex<double> ysh(0.0, l.b_shunt / 2.0);
    const std::complex<double> vf = std::polar(s.ac_u[f], s.ac_delta[f]);
    const std::complex<double> vt = std::polar(s.ac_u[t], s.ac_delta[t]);
    const std::complex<double> sf = vf * std::conj(y * (vf - vt) + ysh * vf);
    const std::complex<double> st = vt * std::conj(y * (vt - vf) + ysh * vt);
    bf.ac.push_back({static_cast<int>(li), sf.real(), sf.imag(), st.real(), st.imag(),
                     sf.real() + st.real(), sf.imag() + st.imag()});
  }
  for (size_t li = 0; li < net.dc_lines.size(); ++li) {
    const auto& l = net.dc_lines[li];
    const int f = p.dc_bus_index(l.from);
    const int t = p.dc_bus_index(l.to);
    const double g = grid::dc_line_conductance(l.r);
    const double pf = s.dc_u[f] * g * (s.dc_u[f] - s.dc_u[t]);
    const double pt = s.dc_u[t] * g * (s.dc_u[t] - s.dc_u[f]);
    bf.dc.push_back({static_cast<int>(li), pf, pt, pf + pt});
  }
  return bf;
}

BalanceReport balance_report(const Problem& p, const State& s,
                             const std::vector<InjectionDelta>* deltas) {
  const auto& net = p.net();
  const BranchFlows bf = branch_flows(p, s);
  BalanceReport r{};
  for (const auto& f : bf.ac) r.ac_line_loss += f.loss_p;
  for (const auto& f : bf.dc) r.dc_line_loss += f.loss_p;

  const auto pcc = p.converter_pcc_powers(s);
  for (const auto& c : pcc) {
    r.converter_ac_draw += c.p_s;
    r.converter_dc_feed += c.p_dc;
  }
  r.converter_loss = r.converter_ac_draw - r.converter_dc_feed;

  // Effective schedules: case data plus whatever injection overrides the
  // solve ran with.
  Eigen::VectorXd p_sched(p.n_ac()), pdc_sched(p.n_dc());
  for (int i = 0; i < p.n_ac(); ++i) p_sched[i] = net.ac_buses[i].p_inject;
  for (int i = 0; i < p.n_dc(); ++i) pdc_sched[i] = net.dc_buses[i].p_inject;
  if (deltas) {
    for (const auto& d : *deltas) {
      if (d.kind == InjectionDelta::Kind::AcP) p_sched[d.bus] += d.value;
      if (d.kind == InjectionDelta::Kind::DcP) pdc_sched[d.bus] += d.value;
    }
  }

  // Scheduled injections on the supply side, slack pickup computed from the
  // state (network draw plus any converter draw at the slack bus). The
  // residual then equals the sum of the solved mismatch rows, so it audits
  // convergence instead of restating a network identity.
  Eigen::VectorXd p_calc, q_calc;
  p.calc_bus_powers(s, p_calc, q_calc);
  double slack_conv_draw = 0.0;
  for (size_t k = 0; k < net.converters.size(); ++k) {
    const int i = p.ac_bus_index(net.converters[k].pcc_bus);
    if (net.ac_buses[i].kind == grid::AcBusKind::Slack) slack_conv_draw += pcc[k].p_s;
  }
  double ac_net = 0.0;
  for (int i = 0; i < p.n_ac(); ++i) {
    ac_net += net.ac_buses[i].kind == grid::AcBusKind::Slack
                  ? p_calc[i] + slack_conv_draw
                  : p_sched[i];
  }
  r.ac_net_injection = ac_net;
  r.dc_net_injection = pdc_sched.sum();

  r.residual = (r.ac_net_injection + r.dc_net_injection) -
               (r.ac_line_loss + r.dc_line_loss + r.converter_loss);
  return r;
}

std::vector<MonitoredVariable> default_monitors(const grid::NetworkCase& net,
                                                const std::string& filter) {
  std::vector<MonitoredVariable> all;
  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    all.push_back({MonitoredVariable::Kind::AcBusU, static_cast<int>(i),
                   "U:" + std::to_string(net.ac_buses[i].id), "U"});
  }
  for (size_t i = 0; i < net.dc_buses.size(); ++i) {
    all.push_back({MonitoredVariable::Kind::DcBusU, static_cast<int>(i),
                   "Udc:" + std::to_string(net.dc_buses[i].id), "Udc"});
  }
  for (size_t i = 0; i < net.ac_lines.size(); ++i) {
    const std::string ft =
        std::to_string(net.ac_lines[i].from) + "-" + std::to_string(net.ac_lines[i].to);
    all.push_back({MonitoredVariable::Kind::AcLineP, static_cast<int>(i), "P:" + ft, "P"});
    all.push_back({MonitoredVariable::Kind::AcLineQ, static_cast<int>(i), "Q:" + ft, "Q"});
  }
  for (size_t i = 0; i < net.dc_lines.size(); ++i) {
    const std::string ft =
        std::to_string(net.dc_lines[i].from) + "-" + std::to_string(net.dc_lines[i].to);
    all.push_back({MonitoredVariable::Kind::DcLineP, static_cast<int>(i), "Pdc:" + ft, "Pdc"});
  }
  if (filter.empty()) return all;

  std::vector<std::string> wanted;
  std::string token;
  for (char ch : filter + ",") {
    if (ch == ',') {
      if (!token.empty()) wanted.push_back(token);
      token.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      token.push_back(ch);
    }
  }
  std::vector<MonitoredVariable> out;
  for (const auto& mv : all) {
    for (const auto& w : wanted) {
      if (mv.id == w || mv.cls == w) {
        out.push_back(mv);
        break;
      }
    }
  }
  return out;
}

Eigen::VectorXd monitored_values(const Problem& p, const State& s,
                                 const std::vector<MonitoredVariable>& monitored) {
  const BranchFlows bf = branch_flows(p, s);
  Eigen::VectorXd v(monitored.size());
  for (size_t i = 0; i < monitored.size(); ++i) {
    const auto& mv = monitored[i];
    switch (mv.kind) {
      case MonitoredVariable::Kind::AcBusU: v[i] = s.ac_u[mv.index]; break;
      case MonitoredVariable::Kind::DcBusU: v[i] = s.dc_u[mv.index]; break;
      case MonitoredVariable::Kind::AcLineP: v[i] = bf.ac[mv.index].p_from; break;
      case MonitoredVariable::Kind::AcLineQ: v[i] = bf.ac[mv.index].q_from; break;
      case MonitoredVariable::Kind::DcLineP: v[i] = bf.dc[mv.index].p_from; break;
    }
  }
  return v;
}

}  // namespace acdcflow::solver
