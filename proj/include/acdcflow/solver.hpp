#pragma once

#include "acdcflow/grid.hpp"

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace acdcflow::solver {

struct SolverOptions {
  int max_iterations = 20;
  double tolerance = 1e-8;  // max |mismatch| in p.u.
  enum class Linear { Auto, Dense, Sparse } linear = Linear::Auto;
  int dense_limit = 500;  // Auto switches to sparse above this many unknowns
};

// Additive override of a scheduled injection, used by Monte Carlo sampling.
struct InjectionDelta {
  enum class Kind { AcP, AcQ, DcP } kind;
  int bus = 0;      // array index, not id
  double value = 0.0;
};

// Full per-bus state; fixed quantities stay at their setpoints.
struct State {
  Eigen::VectorXd ac_u;      // magnitude per AC bus (array order)
  Eigen::VectorXd ac_delta;  // angle per AC bus, radians
  Eigen::VectorXd dc_u;      // voltage per DC bus
};

// Precomputed solvable structure for one network: admittance matrices,
// unknown/mismatch indexing, converter branch data. Immutable after
// construction; solve() is const and reentrant.
class Problem {
 public:
  explicit Problem(const grid::NetworkCase& net);

  const grid::NetworkCase& net() const { return *net_; }

  int n_ac() const { return static_cast<int>(net_->ac_buses.size()); }
  int n_dc() const { return static_cast<int>(net_->dc_buses.size()); }
  int n_unknowns() const { return n_rows_; }

  int ac_bus_index(int id) const;
  int dc_bus_index(int id) const;

  // Mismatch row of an injection variable, -1 when the quantity is not an
  // input at that bus (slack P/Q, PV Q, constant-V DC P).
  int row_of_ac_p(int bus_index) const { return p_row_[bus_index]; }
  int row_of_ac_q(int bus_index) const { return q_row_[bus_index]; }
  int row_of_dc_p(int bus_index) const { return dc_row_[bus_index]; }

  // Row/column layout: [P rows of non-slack buses | Q rows of PQ buses |
  // DC rows of non-constant-V buses], columns in the same order
  // (delta | U_ac | U_dc). Voltage columns are normalized: dU/U.
  int n_p_rows() const { return n_p_; }
  int n_q_rows() const { return n_q_; }
  int n_dc_rows() const { return n_dcr_; }

  State init_state() const;  // flat start with setpoint overrides

  // Mismatch per Eqs. (12)/(13): scheduled - converter corrections - network
  // flows; DC rows include droop injections.
  Eigen::VectorXd mismatch(const State& s,
                           const std::vector<InjectionDelta>* deltas = nullptr) const;

  // Exact partial derivatives of the mismatch with respect to
  // (delta, dU/U, dU_dc/U_dc). Matches central finite differences of
  // mismatch(); the classic textbook Jacobian is the negative of this.
  Eigen::MatrixXd jacobian(const State& s,
                           const std::vector<InjectionDelta>* deltas = nullptr) const;

  struct IterationRecord {
    int iteration;
    double max_mismatch;
  };

  struct ConverterSolution {
    int converter_id;
    double p_s, q_s;      // PCC-side branch injection
    double p_c, q_c;      // valve-side
    double p_dc;          // injection into the DC bus (= p_c)
    double u_c, delta_c;  // internal node voltage
    double loss_p, loss_q;
  };

  struct Solution {
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
    State state;
    std::vector<IterationRecord> trace;
    std::vector<ConverterSolution> converters;
    std::string failure;  // set when !converged or the solve aborted
  };

  Solution solve(const SolverOptions& opt = {},
                 const std::vector<InjectionDelta>* deltas = nullptr) const;

  // Converter PCC powers for the current state (per converter, mode-resolved).
  struct ConverterPcc {
    double p_s, q_s, p_dc;
  };
  std::vector<ConverterPcc> converter_pcc_powers(const State& s) const;

  // Network bus powers S = V .* conj(Y V); converter branches excluded.
  void calc_bus_powers(const State& s, Eigen::VectorXd& p, Eigen::VectorXd& q) const;
  // DC network power drawn from bus d: U_d * sum_j G_dj (U_d - U_j).
  double dc_flow(const State& s, int d) const;

 private:
  const grid::NetworkCase* net_;
  std::map<int, int> ac_id_to_index_, dc_id_to_index_;
  // AC admittance matrix (lines only; converter branches are corrections).
  Eigen::MatrixXcd ybus_;
  // DC line conductance matrix in the "sum over lines" form: diag holds the
  // sum of incident line conductances, off-diagonals the per-pair sums.
  Eigen::MatrixXd gdc_;
  std::vector<int> p_row_, q_row_, dc_row_;  // -1 when absent
  int n_p_ = 0, n_q_ = 0, n_dcr_ = 0, n_rows_ = 0;
  std::vector<int> p_row_bus_, q_row_bus_, dc_row_bus_;  // row -> bus index

  struct ConvData {
    int pcc = 0;  // AC bus index
    int dcb = 0;  // DC bus index
    std::complex<double> y_lump;
    double r_ck = 0.0;  // Re(z_lump)
    double x_ck = 0.0;
    grid::ControlMode mode;
    grid::ConverterSetpoints set;
    int id = 0;
  };
  std::vector<ConvData> conv_;
  std::vector<std::vector<int>> bus_convs_;  // AC bus index -> converter list

  struct PccEval;  // per-converter PCC power with partial derivatives
  // Two passes: fixed reactive setpoints first, then balance-Q stations that
  // absorb the residual reactive power at their bus.
  std::vector<PccEval> eval_converters(const State& s, const Eigen::VectorXd& q_sched,
                                       const Eigen::VectorXd& pdc_sched,
                                       const Eigen::VectorXd& q_calc) const;
  void effective_schedules(const std::vector<InjectionDelta>* deltas, Eigen::VectorXd& p,
                           Eigen::VectorXd& q, Eigen::VectorXd& pdc) const;
  double dc_station_demand(const State& s, int d, double pdc_sched) const;
};

// Labeled view of the assembled Jacobian. Block names follow the unified
// formulation: rows (P | Q | DC), columns (delta | U_ac | U_dc).
struct JacobianBlocks {
  Eigen::MatrixXd m;
  int np, nq, ndc;
  auto H() const { return m.block(0, 0, np, np); }
  auto N() const { return m.block(0, np, np, nq); }
  auto MP() const { return m.block(0, np + nq, np, ndc); }
  auto Jb() const { return m.block(np, 0, nq, np); }
  auto L() const { return m.block(np, np, nq, nq); }
  auto MQ() const { return m.block(np, np + nq, nq, ndc); }
  auto Rdelta() const { return m.block(np + nq, 0, ndc, np); }
  auto RV() const { return m.block(np + nq, np, ndc, nq); }
  auto X() const { return m.block(np + nq, np + nq, ndc, ndc); }
};

JacobianBlocks jacobian_blocks(const Problem& p, const State& s);

// ---------------------------------------------------------------------------
// Branch flows.
// ---------------------------------------------------------------------------
struct AcLineFlow {
  int line_index;
  double p_from, q_from, p_to, q_to, loss_p, loss_q;
};
struct DcLineFlow {
  int line_index;
  double p_from, p_to, loss_p;
};
struct BranchFlows {
  std::vector<AcLineFlow> ac;
  std::vector<DcLineFlow> dc;
};

BranchFlows branch_flows(const Problem& p, const State& s);

// Conservation audit at a solved operating point: every term of the system
// power balance. Pass the same injection deltas the solve used; the residual
// then equals the sum of the solved mismatch rows and stays below the solve
// tolerance.
struct BalanceReport {
  double ac_net_injection;   // sum over AC buses of net bus power drawn from the grid
  double dc_net_injection;   // scheduled DC bus injections
  double converter_ac_draw;  // sum of P_sk
  double converter_dc_feed;  // sum of P_dk,i
  double converter_loss;     // sum of branch losses
  double ac_line_loss;
  double dc_line_loss;
  double residual;
};
BalanceReport balance_report(const Problem& p, const State& s,
                             const std::vector<InjectionDelta>* deltas = nullptr);

// ---------------------------------------------------------------------------
// Monitored variables and linearized sensitivities.
// ---------------------------------------------------------------------------
struct MonitoredVariable {
  enum class Kind { AcBusU, DcBusU, AcLineP, AcLineQ, DcLineP } kind;
  int index = 0;  // bus or line array index
  std::string id;
  std::string cls;  // "U", "Udc", "P", "Q", "Pdc"
};

// Default set: every AC bus voltage, every DC bus voltage, from-end P and Q
// of every AC line, from-end P of every DC line. `filter` is a comma list of
// exact ids or class prefixes; empty keeps everything.
std::vector<MonitoredVariable> default_monitors(const grid::NetworkCase& net,
                                                const std::string& filter = "");

// Injection variable labels, ordered exactly like the mismatch rows.
struct InjectionColumn {
  InjectionDelta::Kind kind;
  int bus;  // array index
  std::string label;
};

struct SensitivityModel {
  Eigen::MatrixXd s0;        // d(state)/d(injection), physical units
  Eigen::MatrixXd t0;        // d(monitored)/d(injection)
  Eigen::VectorXd p_delta;   // converter correction vector at the base point
  Eigen::VectorXd x_delta;   // J0^-1 p_delta (state offset of the affine form)
  Eigen::VectorXd h_delta;   // monitored-variable image of x_delta
  Eigen::VectorXd base_state;      // physical state at the base point (rows of s0)
  Eigen::VectorXd base_monitored;  // monitored values at the base point
  std::vector<InjectionColumn> columns;
  std::vector<MonitoredVariable> monitored;
  std::vector<std::string> state_labels;

  int column_of(InjectionDelta::Kind kind, int bus) const;  // -1 when absent
};

SensitivityModel sensitivity_matrices(const Problem& p, const State& base,
                                      const std::vector<MonitoredVariable>& monitored);

// Monitored-variable values at a state (same order as `monitored`).
Eigen::VectorXd monitored_values(const Problem& p, const State& s,
                                 const std::vector<MonitoredVariable>& monitored);

}  // namespace acdcflow::solver
