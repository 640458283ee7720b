#include "acdcflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace acdcflow::grid {

namespace {
constexpr double kDcVoltageRatio = 1.6329931618554521;  // 2*sqrt(2)/sqrt(3)
}

PerUnitBase make_bases(double s_mva, double u_ac_kv) {
  if (!(s_mva > 0.0) || !(u_ac_kv > 0.0)) {
    throw std::invalid_argument("per-unit bases must be positive");
  }
  PerUnitBase b;
  b.s_mva = s_mva;
  b.u_ac_kv = u_ac_kv;
  b.u_dc_kv = kDcVoltageRatio * u_ac_kv;
  return b;
}

double power_to_pu(double mw, const PerUnitBase& b) { return mw / b.s_mva; }
double power_from_pu(double pu, const PerUnitBase& b) { return pu * b.s_mva; }
double ac_voltage_to_pu(double kv, const PerUnitBase& b) { return kv / b.u_ac_kv; }
double ac_voltage_from_pu(double pu, const PerUnitBase& b) { return pu * b.u_ac_kv; }
double dc_voltage_to_pu(double kv, const PerUnitBase& b) { return kv / b.u_dc_kv; }
double dc_voltage_from_pu(double pu, const PerUnitBase& b) { return pu * b.u_dc_kv; }

NodeClassification classify_mode(ControlMode mode) {
  switch (mode) {
    case ControlMode::PQ:
      return {AcBusKind::PQ, DcBusKind::ConstantP, StationClass::Power};
    case ControlMode::PUs:
      return {AcBusKind::PV, DcBusKind::ConstantP, StationClass::Power};
    case ControlMode::UdcQ:
      return {AcBusKind::PQ, DcBusKind::ConstantV, StationClass::Voltage};
    case ControlMode::UdcUs:
      return {AcBusKind::PV, DcBusKind::ConstantV, StationClass::Voltage};
    case ControlMode::DroopQ:
      return {AcBusKind::PQ, DcBusKind::Droop, StationClass::Voltage};
    case ControlMode::DroopUs:
      return {AcBusKind::PV, DcBusKind::Droop, StationClass::Voltage};
  }
  throw std::invalid_argument("unknown control mode");
}

std::complex<double> lump_converter_impedance(const Converter& c) {
  std::complex<double> z = c.z_tr + c.z_c + std::complex<double>(c.loss_resistance, 0.0);
  if (std::abs(z) == 0.0) {
    throw std::invalid_argument("converter branch impedance is zero");
  }
  return z;
}

std::complex<double> lump_converter_admittance(const Converter& c) {
  return 1.0 / lump_converter_impedance(c);
}

ConverterInjections converter_injections(double u_s, double delta_s, double u_c,
                                         double delta_c, std::complex<double> y) {
  const double g = y.real();
  const double b = y.imag();
  const double d = delta_s - delta_c;
  const double cs = std::cos(d);
  const double sn = std::sin(d);
  ConverterInjections r;
  r.p_s = u_s * u_s * g - u_s * u_c * (g * cs + b * sn);
  r.q_s = -u_s * u_s * b - u_s * u_c * (g * sn - b * cs);
  r.p_c = -u_c * u_c * g + u_s * u_c * (g * cs - b * sn);
  r.q_c = u_c * u_c * b - u_s * u_c * (g * sn + b * cs);
  return r;
}

double converter_loss_p(double p, double q, double u, double r) {
  if (u == 0.0) throw std::invalid_argument("converter loss: zero voltage");
  return (p * p + q * q) / (u * u) * r;
}

double converter_loss_q(double p, double q, double u, double x) {
  if (u == 0.0) throw std::invalid_argument("converter loss: zero voltage");
  return (p * p + q * q) / (u * u) * x;
}

double droop_power(double u_dc, double u_dc_ref, double p_dc_ref, double k_droop) {
  if (!(k_droop > 0.0)) throw std::invalid_argument("droop coefficient must be positive");
  return -(u_dc - u_dc_ref) / k_droop + p_dc_ref;
}

double loss_equivalent_resistance(double p_ac_pu, double p_dc_pu) {
  if (p_ac_pu == 0.0) throw std::invalid_argument("loss resistance: p_ac is zero");
  const double loss = p_ac_pu - p_dc_pu;
  if (loss < 0.0) throw std::invalid_argument("loss resistance: p_dc exceeds p_ac");
  const double i_d = (2.0 / 3.0) * p_ac_pu;
  return loss / (i_d * i_d);
}

double dc_line_conductance(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("DC line resistance must be positive");
  return 1.0 / r;
}

std::string Diagnostics::joined() const {
  std::ostringstream os;
  for (const auto& e : errors) os << "error: " << e << "\n";
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

bool controls_ac_voltage(ControlMode m) {
  return m == ControlMode::PUs || m == ControlMode::UdcUs || m == ControlMode::DroopUs;
}

}  // namespace

Diagnostics validate_case(NetworkCase& net) {
  Diagnostics d;
  auto err = [&](const std::string& s) { d.errors.push_back(s); };
  auto warn = [&](const std::string& s) { d.warnings.push_back(s); };

  std::map<int, int> ac_index;
  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    const auto& b = net.ac_buses[i];
    if (!ac_index.emplace(b.id, static_cast<int>(i)).second) {
      err("duplicate AC bus id " + std::to_string(b.id));
    }
  }
  std::map<int, int> dc_index;
  for (size_t i = 0; i < net.dc_buses.size(); ++i) {
    const auto& b = net.dc_buses[i];
    if (!dc_index.emplace(b.id, static_cast<int>(i)).second) {
      err("duplicate DC bus id " + std::to_string(b.id));
    }
  }
  if (net.ac_buses.empty()) err("case has no AC buses");
  if (!d.errors.empty()) return d;

  // Reset derived kinds before re-applying converter modes.
  for (auto& b : net.dc_buses) b.kind = DcBusKind::Pure;

  for (const auto& l : net.ac_lines) {
    if (!ac_index.count(l.from) || !ac_index.count(l.to)) {
      err("AC line " + std::to_string(l.from) + "-" + std::to_string(l.to) +
          " references an unknown bus");
      continue;
    }
    if (l.from == l.to) err("AC line endpoints coincide at bus " + std::to_string(l.from));
    if (l.r == 0.0 && l.x == 0.0) {
      err("AC line " + std::to_string(l.from) + "-" + std::to_string(l.to) +
          " has zero impedance");
    }
  }
  for (const auto& l : net.dc_lines) {
    if (!dc_index.count(l.from) || !dc_index.count(l.to)) {
      err("DC line " + std::to_string(l.from) + "-" + std::to_string(l.to) +
          " references an unknown bus");
      continue;
    }
    if (l.from == l.to) err("DC line endpoints coincide at bus " + std::to_string(l.from));
    if (!(l.r > 0.0)) {
      err("DC line " + std::to_string(l.from) + "-" + std::to_string(l.to) +
          " resistance must be positive");
    }
  }
  if (!d.errors.empty()) return d;

  // Converters: apply mode-derived bus kinds, check references and setpoints.
  std::set<int> dc_claimed;
  std::map<int, int> pcc_voltage_ctrl;  // pcc bus id -> converter id
  for (auto& c : net.converters) {
    if (!ac_index.count(c.pcc_bus)) {
      err("converter " + std::to_string(c.id) + " PCC references unknown AC bus " +
          std::to_string(c.pcc_bus));
      continue;
    }
    if (!dc_index.count(c.dc_bus)) {
      err("converter " + std::to_string(c.id) + " references unknown DC bus " +
          std::to_string(c.dc_bus));
      continue;
    }
    AcBus& pcc = net.ac_buses[ac_index[c.pcc_bus]];
    DcBus& dcb = net.dc_buses[dc_index[c.dc_bus]];
    if (pcc.kind == AcBusKind::Slack) {
      err("converter " + std::to_string(c.id) + " sits on slack AC bus " +
          std::to_string(c.pcc_bus));
      continue;
    }
    if (!dc_claimed.insert(c.dc_bus).second) {
      err("DC bus " + std::to_string(c.dc_bus) + " has more than one converter");
      continue;
    }
    try {
      lump_converter_impedance(c);
    } catch (const std::exception& e) {
      err("converter " + std::to_string(c.id) + ": " + e.what());
      continue;
    }
    if (c.loss_resistance < 0.0) {
      err("converter " + std::to_string(c.id) + " has negative loss resistance");
    }

    const NodeClassification cls = classify_mode(c.mode);
    dcb.kind = cls.dc_kind;
    if (cls.dc_kind == DcBusKind::ConstantV && !(c.set.u_dc > 0.0)) {
      err("converter " + std::to_string(c.id) + " holds DC voltage but u_dc setpoint <= 0");
    }
    if (cls.dc_kind == DcBusKind::Droop) {
      if (!(c.set.k_droop > 0.0)) {
        err("converter " + std::to_string(c.id) + " droop coefficient must be positive");
      }
      if (!(c.set.u_dc_ref > 0.0)) {
        err("converter " + std::to_string(c.id) + " droop voltage reference must be positive");
      }
    }
    if (controls_ac_voltage(c.mode)) {
      if (!(c.set.u_s > 0.0)) {
        err("converter " + std::to_string(c.id) + " holds AC voltage but u_s setpoint <= 0");
      }
      auto [it, fresh] = pcc_voltage_ctrl.emplace(c.pcc_bus, c.id);
      if (!fresh) {
        err("AC bus " + std::to_string(c.pcc_bus) +
            " has more than one voltage-controlling converter (" +
            std::to_string(it->second) + ", " + std::to_string(c.id) + ")");
      } else {
        if (pcc.kind == AcBusKind::PV && pcc.v_set != c.set.u_s) {
          err("AC bus " + std::to_string(c.pcc_bus) +
              " declared PV with a setpoint that differs from converter " +
              std::to_string(c.id));
        }
        pcc.kind = AcBusKind::PV;
        pcc.v_set = c.set.u_s;
      }
    }
  }
  if (!d.errors.empty()) return d;

  // AC islands: exactly one slack each.
  {
    UnionFind uf(static_cast<int>(net.ac_buses.size()));
    for (const auto& l : net.ac_lines) uf.unite(ac_index[l.from], ac_index[l.to]);
    std::map<int, std::pair<int, int>> islands;  // root -> (bus count, slack count)
    for (size_t i = 0; i < net.ac_buses.size(); ++i) {
      auto& entry = islands[uf.find(static_cast<int>(i))];
      entry.first++;
      if (net.ac_buses[i].kind == AcBusKind::Slack) entry.second++;
    }
    for (const auto& [root, counts] : islands) {
      if (counts.second == 0) {
        err("AC island containing bus " + std::to_string(net.ac_buses[root].id) +
            " has no slack bus");
      } else if (counts.second > 1) {
        err("AC island containing bus " + std::to_string(net.ac_buses[root].id) +
            " has multiple slack buses");
      }
    }
  }

  // DC islands: every island needs a voltage reference (constant-V or droop).
  if (!net.dc_buses.empty()) {
    UnionFind uf(static_cast<int>(net.dc_buses.size()));
    for (const auto& l : net.dc_lines) uf.unite(dc_index[l.from], dc_index[l.to]);
    std::map<int, bool> referenced;
    for (size_t i = 0; i < net.dc_buses.size(); ++i) {
      const auto k = net.dc_buses[i].kind;
      bool& ref = referenced[uf.find(static_cast<int>(i))];
      ref = ref || k == DcBusKind::ConstantV || k == DcBusKind::Droop;
    }
    for (const auto& [root, ref] : referenced) {
      if (!ref) {
        err("DC island containing bus " + std::to_string(net.dc_buses[root].id) +
            " has no voltage reference (constant-V or droop station)");
      }
    }
  }

  for (const auto& b : net.ac_buses) {
    if ((b.kind == AcBusKind::Slack || b.kind == AcBusKind::PV) && !(b.v_set > 0.0)) {
      err("AC bus " + std::to_string(b.id) + " voltage setpoint must be positive");
    }
  }

  // Stochastic spec.
  std::map<std::string, int> group_index;
  std::vector<int> group_members(net.stochastic.groups.size(), 0);
  for (size_t g = 0; g < net.stochastic.groups.size(); ++g) {
    const auto& grp = net.stochastic.groups[g];
    if (!group_index.emplace(grp.name, static_cast<int>(g)).second) {
      err("duplicate correlation group name '" + grp.name + "'");
    }
  }
  std::map<std::pair<int, int>, std::string> row_group;  // (kind,node) -> group
  for (const auto& s : net.stochastic.sources) {
    const bool ac = s.kind != stoch::InjectionKind::DcP;
    if (ac) {
      auto it = ac_index.find(s.node);
      if (it == ac_index.end()) {
        err("stochastic source '" + s.name + "' references unknown AC bus " +
            std::to_string(s.node));
        continue;
      }
      const AcBus& b = net.ac_buses[it->second];
      if (b.kind == AcBusKind::Slack) {
        err("stochastic source '" + s.name + "' attaches to slack bus " +
            std::to_string(s.node) + "; its injection is not an input there");
      }
      if (s.kind == stoch::InjectionKind::AcQ && b.kind == AcBusKind::PV) {
        err("stochastic source '" + s.name + "' attaches reactive power to PV bus " +
            std::to_string(s.node));
      }
    } else {
      auto it = dc_index.find(s.node);
      if (it == dc_index.end()) {
        err("stochastic source '" + s.name + "' references unknown DC bus " +
            std::to_string(s.node));
        continue;
      }
      if (net.dc_buses[it->second].kind == DcBusKind::ConstantV) {
        err("stochastic source '" + s.name + "' attaches to constant-voltage DC bus " +
            std::to_string(s.node) + "; its injection is not an input there");
      }
    }
    if (const auto* beta = std::get_if<stoch::BetaPvModel>(&s.model)) {
      if (!(beta->alpha > 0.0) || !(beta->beta > 0.0)) {
        err("stochastic source '" + s.name + "' has non-positive beta shape parameters");
      }
      if (beta->r_m < 0.0) err("stochastic source '" + s.name + "' has negative maximum power");
      if (beta->r_m == 0.0) warn("stochastic source '" + s.name + "' has zero maximum power");
    } else if (const auto* g = std::get_if<stoch::GaussianModel>(&s.model)) {
      if (g->sigma < 0.0) err("stochastic source '" + s.name + "' has negative sigma");
    } else if (const auto* e = std::get_if<stoch::EmpiricalModel>(&s.model)) {
      const bool has_samples = !e->samples.empty();
      const bool has_table = !e->cdf_x.empty();
      if (!has_samples && !has_table) {
        err("stochastic source '" + s.name + "' has no empirical data");
      }
      if (has_table) {
        if (e->cdf_x.size() != e->cdf_f.size() || e->cdf_x.size() < 2) {
          err("stochastic source '" + s.name + "' CDF table is malformed");
        } else {
          for (size_t i = 1; i < e->cdf_x.size(); ++i) {
            if (!(e->cdf_x[i] > e->cdf_x[i - 1]) || e->cdf_f[i] < e->cdf_f[i - 1]) {
              err("stochastic source '" + s.name + "' CDF table is not monotone");
              break;
            }
          }
          if (e->cdf_f.front() < 0.0 || e->cdf_f.back() > 1.0) {
            err("stochastic source '" + s.name + "' CDF values outside [0,1]");
          }
        }
      }
    }
    if (!s.group.empty()) {
      auto it = group_index.find(s.group);
      if (it == group_index.end()) {
        err("stochastic source '" + s.name + "' references unknown group '" + s.group + "'");
      } else {
        group_members[it->second]++;
        auto key = std::make_pair(static_cast<int>(s.kind), s.node);
        auto [rit, fresh] = row_group.emplace(key, s.group);
        if (!fresh && rit->second != s.group) {
          err("injection at node " + std::to_string(s.node) +
              " is claimed by correlation groups '" + rit->second + "' and '" + s.group + "'");
        }
      }
    }
  }
  for (size_t g = 0; g < net.stochastic.groups.size(); ++g) {
    const auto& grp = net.stochastic.groups[g];
    const int k = group_members[g];
    if (k == 0) {
      warn("correlation group '" + grp.name + "' has no members");
      continue;
    }
    if (grp.rho.rows() != grp.rho.cols() || grp.rho.rows() != k) {
      err("correlation group '" + grp.name + "' matrix size " +
          std::to_string(grp.rho.rows()) + "x" + std::to_string(grp.rho.cols()) +
          " does not match its " + std::to_string(k) + " members");
      continue;
    }
    for (int i = 0; i < k; ++i) {
      if (std::abs(grp.rho(i, i) - 1.0) > 1e-12) {
        err("correlation group '" + grp.name + "' matrix diagonal must be 1");
        break;
      }
      for (int j = 0; j < i; ++j) {
        if (std::abs(grp.rho(i, j) - grp.rho(j, i)) > 1e-12) {
          err("correlation group '" + grp.name + "' matrix is not symmetric");
          i = k;
          break;
        }
        if (std::abs(grp.rho(i, j)) > 1.0) {
          err("correlation group '" + grp.name + "' has |rho| > 1");
          i = k;
          break;
        }
      }
    }
  }

  return d;
}

}  // namespace acdcflow::grid
