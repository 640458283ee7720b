#pragma once

#include "acdcflow/stoch_spec.hpp"

#include <complex>
#include <string>
#include <vector>

namespace acdcflow::grid {

// ---------------------------------------------------------------------------
// Per-unit system. AC and DC share the power base; the DC voltage base is
// tied to the AC one by u_dc_base = (2*sqrt(2)/sqrt(3)) * u_ac_base so that
// a converter at nominal AC voltage maps to 1 p.u. on the DC side.
// ---------------------------------------------------------------------------
struct PerUnitBase {
  double s_mva = 1.0;
  double u_ac_kv = 1.0;
  double u_dc_kv = 0.0;  // derived, never set directly

  double z_ac_ohm() const { return u_ac_kv * u_ac_kv / s_mva; }
  double z_dc_ohm() const { return u_dc_kv * u_dc_kv / s_mva; }
};

// Throws std::invalid_argument on non-positive inputs.
PerUnitBase make_bases(double s_mva, double u_ac_kv);

double power_to_pu(double mw, const PerUnitBase& b);
double power_from_pu(double pu, const PerUnitBase& b);
double ac_voltage_to_pu(double kv, const PerUnitBase& b);
double ac_voltage_from_pu(double pu, const PerUnitBase& b);
double dc_voltage_to_pu(double kv, const PerUnitBase& b);
double dc_voltage_from_pu(double pu, const PerUnitBase& b);

// ---------------------------------------------------------------------------
// Network elements. All quantities are in p.u.; angles in radians internally.
// ---------------------------------------------------------------------------
enum class AcBusKind { Slack, PV, PQ };

struct AcBus {
  int id = 0;
  AcBusKind kind = AcBusKind::PQ;
  double p_inject = 0.0;  // scheduled net injection (generation - load)
  double q_inject = 0.0;
  double v_set = 1.0;     // used for Slack and PV
  double angle_set = 0.0; // radians, used for Slack
};

struct AcLine {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_shunt = 0.0;   // total line charging susceptance, split half per end
};

// DC bus kind is derived from the attached converter's control mode
// (no converter -> Pure).
enum class DcBusKind { ConstantV, ConstantP, Droop, Pure };

struct DcBus {
  int id = 0;
  DcBusKind kind = DcBusKind::Pure;
  double p_inject = 0.0;  // scheduled net DC injection at the bus itself
};

struct DcLine {
  int from = 0;
  int to = 0;
  double r = 0.0;
};

// The six converter control modes: what is held at the PCC and on the DC side.
enum class ControlMode {
  PQ = 1,       // P_s, Q_s fixed
  PUs = 2,      // P_s, U_s fixed
  UdcQ = 3,     // U_dc, Q_s fixed
  UdcUs = 4,    // U_dc, U_s fixed
  DroopQ = 5,   // U_dc-P_dc droop, Q_s fixed
  DroopUs = 6,  // U_dc-P_dc droop, U_s fixed
};

enum class StationClass { Power, Voltage };

struct NodeClassification {
  AcBusKind ac_kind;
  DcBusKind dc_kind;
  StationClass station;
};

NodeClassification classify_mode(ControlMode mode);

struct ConverterSetpoints {
  double p_s = 0.0;
  double q_s = 0.0;
  double u_s = 1.0;
  double u_dc = 1.0;
  double u_dc_ref = 1.0;  // droop references
  double p_dc_ref = 0.0;
  double k_droop = 0.0;
};

struct Converter {
  int id = 0;
  int pcc_bus = 0;  // AC bus id
  int dc_bus = 0;   // DC bus id
  std::complex<double> z_tr{0.0, 0.0};  // converter transformer impedance
  double b_f = 0.0;                     // filter susceptance; parsed, not lumped
  std::complex<double> z_c{0.0, 0.0};   // phase reactor impedance
  double loss_resistance = 0.0;         // equivalent loss resistance, in series
  ControlMode mode = ControlMode::PQ;
  ConverterSetpoints set;
};

struct NetworkCase {
  std::string name;
  bool synthetic_ac_base = false;
  PerUnitBase base;
  std::vector<AcBus> ac_buses;
  std::vector<AcLine> ac_lines;
  std::vector<DcBus> dc_buses;
  std::vector<DcLine> dc_lines;
  std::vector<Converter> converters;
  stoch::StochasticSpec stochastic;
};

// ---------------------------------------------------------------------------
// Converter station primitives.
// ---------------------------------------------------------------------------

// Series lumping of transformer + reactor + loss resistance. The filter
// susceptance stays out of the lumped branch. Throws on |Z| == 0.
std::complex<double> lump_converter_impedance(const Converter& c);
std::complex<double> lump_converter_admittance(const Converter& c);

struct ConverterInjections {
  double p_s, q_s;  // into the branch at the PCC end
  double p_c, q_c;  // into the valve at the converter end
};

// Powers at both ends of the lumped branch for terminal voltages
// (u_s, delta_s) and (u_c, delta_c) with branch admittance y = g + jb.
ConverterInjections converter_injections(double u_s, double delta_s, double u_c,
                                         double delta_c, std::complex<double> y);

// Branch loss from powers at the sending end: loss = |S|^2 / U^2 * (R or X).
// Throws on u == 0.
double converter_loss_p(double p, double q, double u, double r);
double converter_loss_q(double p, double q, double u, double x);

// Droop characteristic P(U): deviation from the voltage reference is traded
// against power at slope -1/k. Throws on k <= 0.
double droop_power(double u_dc, double u_dc_ref, double p_dc_ref, double k_droop);

// Equivalent loss resistance from an AC/DC power pair at the converter
// operating point: r = (p_ac - p_dc) / ((2/3) p_ac)^2. Throws when p_ac == 0
// or p_dc > p_ac.
double loss_equivalent_resistance(double p_ac_pu, double p_dc_pu);

// Line conductance 1/R; throws on r <= 0.
double dc_line_conductance(double r);

// ---------------------------------------------------------------------------
// Case validation. Collects human-readable diagnostics; a case is usable only
// when ok() is true. Applies converter-derived bus kinds as a side effect of
// finalize_case (called by the loader and by validate_case).
// ---------------------------------------------------------------------------
struct Diagnostics {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
  std::string joined() const;
};

// Derives DC bus kinds and PCC bus kinds from converter modes, checks
// structural consistency (ids, islands, references, control data).
Diagnostics validate_case(NetworkCase& net);

}  // namespace acdcflow::grid
