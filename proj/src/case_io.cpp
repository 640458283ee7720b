#include "acdcflow/case_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace acdcflow::io {
namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw FieldError(path + ": " + what);
}

const json* find(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* p = find(obj, path, key);
  if (!p) fail(path, std::string("missing required field '") + key + "'");
  return *p;
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double num_field(const json& obj, const std::string& path, const char* key) {
  return as_num(require(obj, path, key), path + "." + key);
}

double num_or(const json& obj, const std::string& path, const char* key, double dflt) {
  const json* p = find(obj, path, key);
  return p ? as_num(*p, path + "." + key) : dflt;
}

int int_field(const json& obj, const std::string& path, const char* key) {
  const json& j = require(obj, path, key);
  if (!j.is_number_integer()) fail(path + "." + key, "expected an integer");
  return j.get<int>();
}

bool bool_or(const json& obj, const std::string& path, const char* key, bool dflt) {
  const json* p = find(obj, path, key);
  if (!p) return dflt;
  if (!p->is_boolean()) fail(path + "." + key, "expected a boolean");
  return p->get<bool>();
}

std::string str_field(const json& obj, const std::string& path, const char* key) {
  const json& j = require(obj, path, key);
  if (!j.is_string()) fail(path + "." + key, "expected a string");
  return j.get<std::string>();
}

std::string str_or(const json& obj, const std::string& path, const char* key,
                   const std::string& dflt) {
  const json* p = find(obj, path, key);
  if (!p) return dflt;
  if (!p->is_string()) fail(path + "." + key, "expected a string");
  return p->get<std::string>();
}

const json& array_field(const json& obj, const std::string& path, const char* key) {
  const json& j = require(obj, path, key);
  if (!j.is_array()) fail(path + "." + key, "expected an array");
  return j;
}

std::vector<double> num_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_num(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::complex<double> complex_pair(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected [r, x]");
  return {as_num(j[0], path + "[0]"), as_num(j[1], path + "[1]")};
}

grid::AcBusKind bus_kind(const std::string& s, const std::string& path) {
  if (s == "slack") return grid::AcBusKind::Slack;
  if (s == "pv") return grid::AcBusKind::PV;
  if (s == "pq") return grid::AcBusKind::PQ;
  fail(path, "unknown bus kind '" + s + "' (expected slack, pv, or pq)");
}

grid::ControlMode control_mode(const std::string& s, const std::string& path) {
  if (s == "p_q") return grid::ControlMode::PQ;
  if (s == "p_us") return grid::ControlMode::PUs;
  if (s == "udc_q") return grid::ControlMode::UdcQ;
  if (s == "udc_us") return grid::ControlMode::UdcUs;
  if (s == "droop_q") return grid::ControlMode::DroopQ;
  if (s == "droop_us") return grid::ControlMode::DroopUs;
  fail(path, "unknown control mode '" + s +
                 "' (expected p_q, p_us, udc_q, udc_us, droop_q, droop_us)");
}

stoch::InjectionKind injection_kind(const std::string& s, const std::string& path) {
  if (s == "ac_p") return stoch::InjectionKind::AcP;
  if (s == "ac_q") return stoch::InjectionKind::AcQ;
  if (s == "dc_p") return stoch::InjectionKind::DcP;
  fail(path, "unknown injection kind '" + s + "' (expected ac_p, ac_q, dc_p)");
}

void parse_setpoints(const json& obj, const std::string& path, grid::ConverterSetpoints& set) {
  set.p_s = num_or(obj, path, "p_s", set.p_s);
  set.q_s = num_or(obj, path, "q_s", set.q_s);
  set.u_s = num_or(obj, path, "u_s", set.u_s);
  set.u_dc = num_or(obj, path, "u_dc", set.u_dc);
  set.u_dc_ref = num_or(obj, path, "u_dc_ref", set.u_dc_ref);
  set.p_dc_ref = num_or(obj, path, "p_dc_ref", set.p_dc_ref);
  set.k_droop = num_or(obj, path, "k_droop", set.k_droop);
}

void parse_stochastic(const json& st, const std::string& path, grid::NetworkCase& net) {
  auto& spec = net.stochastic;

  if (const json* pv = find(st, path, "pv")) {
    if (!pv->is_array()) fail(path + ".pv", "expected an array");
    for (size_t i = 0; i < pv->size(); ++i) {
      const std::string p = path + ".pv[" + std::to_string(i) + "]";
      const json& e = (*pv)[i];
      stoch::Source s;
      s.name = str_field(e, p, "name");
      s.node = int_field(e, p, "bus");
      s.kind = bool_or(e, p, "dc", false) ? stoch::InjectionKind::DcP
                                          : stoch::InjectionKind::AcP;
      s.sign = num_or(e, p, "sign", 1.0);
      s.group = str_or(e, p, "group", "");
      stoch::BetaPvModel m;
      m.alpha = num_field(e, p, "alpha");
      m.beta = num_field(e, p, "beta");
      m.r_m = num_field(e, p, "r_m");
      s.model = m;
      spec.sources.push_back(std::move(s));
    }
  }

  if (const json* loads = find(st, path, "loads")) {
    if (!loads->is_array()) fail(path + ".loads", "expected an array");
    for (size_t i = 0; i < loads->size(); ++i) {
      const std::string p = path + ".loads[" + std::to_string(i) + "]";
      const json& e = (*loads)[i];
      const std::string name = str_field(e, p, "name");
      const int bus = int_field(e, p, "bus");
      const bool dc = bool_or(e, p, "dc", false);
      const std::string group = str_or(e, p, "group", "");

      stoch::Source sp;
      sp.name = name + ":p";
      sp.node = bus;
      sp.kind = dc ? stoch::InjectionKind::DcP : stoch::InjectionKind::AcP;
      sp.sign = -1.0;
      sp.group = group;
      sp.model = stoch::GaussianModel{num_field(e, p, "mu_p"), num_field(e, p, "sigma_p")};
      spec.sources.push_back(std::move(sp));

      const double mu_q = num_or(e, p, "mu_q", 0.0);
      const double sigma_q = num_or(e, p, "sigma_q", 0.0);
      if (dc) {
        if (mu_q != 0.0 || sigma_q != 0.0) fail(p, "DC load cannot carry reactive power");
        continue;
      }
      if (mu_q != 0.0 || sigma_q != 0.0) {
        stoch::Source sq;
        sq.name = name + ":q";
        sq.node = bus;
        sq.kind = stoch::InjectionKind::AcQ;
        sq.sign = -1.0;
        sq.model = stoch::GaussianModel{mu_q, sigma_q};
        spec.sources.push_back(std::move(sq));
      }
    }
  }

  if (const json* emp = find(st, path, "empirical")) {
    if (!emp->is_array()) fail(path + ".empirical", "expected an array");
    for (size_t i = 0; i < emp->size(); ++i) {
      const std::string p = path + ".empirical[" + std::to_string(i) + "]";
      const json& e = (*emp)[i];
      stoch::Source s;
      s.name = str_field(e, p, "name");
      s.node = int_field(e, p, "bus");
      s.kind = injection_kind(str_field(e, p, "kind"), p + ".kind");
      s.sign = num_or(e, p, "sign", 1.0);
      s.group = str_or(e, p, "group", "");
      stoch::EmpiricalModel m;
      const json* samples = find(e, p, "samples");
      const json* cdf = find(e, p, "cdf");
      if (samples) {
        m.samples = num_vector(*samples, p + ".samples");
      } else if (cdf) {
        m.cdf_x = num_vector(require(*cdf, p + ".cdf", "x"), p + ".cdf.x");
        m.cdf_f = num_vector(require(*cdf, p + ".cdf", "f"), p + ".cdf.f");
      } else {
        fail(p, "empirical source needs 'samples' or 'cdf'");
      }
      s.model = std::move(m);
      spec.sources.push_back(std::move(s));
    }
  }

  if (const json* groups = find(st, path, "correlation_groups")) {
    if (!groups->is_array()) fail(path + ".correlation_groups", "expected an array");
    for (size_t i = 0; i < groups->size(); ++i) {
      const std::string p = path + ".correlation_groups[" + std::to_string(i) + "]";
      const json& e = (*groups)[i];
      stoch::CorrelationGroup g;
      g.name = str_field(e, p, "name");
      const json& rho = require(e, p, "rho");
      if (rho.is_number()) {
        // Scalar shorthand: equicorrelation over the group's members.
        const double r = rho.get<double>();
        int k = 0;
        for (const auto& s : spec.sources) {
          if (s.group == g.name) ++k;
        }
        g.rho = Eigen::MatrixXd::Constant(k, k, r);
        g.rho.diagonal().setOnes();
      } else if (rho.is_array()) {
        const size_t n = rho.size();
        g.rho.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (size_t r = 0; r < n; ++r) {
          const std::string pr = p + ".rho[" + std::to_string(r) + "]";
          if (!rho[r].is_array() || rho[r].size() != n) fail(pr, "expected a square matrix row");
          for (size_t c = 0; c < n; ++c) {
            g.rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_num(rho[r][c], pr + "[" + std::to_string(c) + "]");
          }
        }
      } else {
        fail(p + ".rho", "expected a number or a square matrix");
      }
      spec.groups.push_back(std::move(g));
    }
  }
}

void apply_scenario(const json& sc, const std::string& path, grid::NetworkCase& net,
                    grid::Diagnostics& diag) {
  const json* controls = find(sc, path, "controls");
  if (!controls) return;
  if (!controls->is_array()) fail(path + ".controls", "expected an array");
  for (size_t i = 0; i < controls->size(); ++i) {
    const std::string p = path + ".controls[" + std::to_string(i) + "]";
    const json& e = (*controls)[i];
    const int id = int_field(e, p, "converter");
    auto it = std::find_if(net.converters.begin(), net.converters.end(),
                           [id](const grid::Converter& c) { return c.id == id; });
    if (it == net.converters.end()) {
      diag.errors.push_back(p + ": unknown converter id " + std::to_string(id));
      continue;
    }
    if (const json* mode = find(e, p, "mode")) {
      if (!mode->is_string()) fail(p + ".mode", "expected a string");
      it->mode = control_mode(mode->get<std::string>(), p + ".mode");
    }
    parse_setpoints(e, p, it->set);
  }
}

grid::NetworkCase parse_document(const json& doc, grid::Diagnostics& diag) {
  const std::string root = "case";
  grid::NetworkCase net;
  net.name = str_or(doc, root, "name", "");
  net.synthetic_ac_base = bool_or(doc, root, "synthetic_ac_base", false);

  if (const json* base = find(doc, root, "base")) {
    net.base = grid::make_bases(num_field(*base, root + ".base", "s_mva"),
                                num_field(*base, root + ".base", "u_ac_kv"));
  } else {
    net.base = grid::make_bases(100.0, 345.0);
  }

  const json& buses = array_field(doc, root, "ac_buses");
  for (size_t i = 0; i < buses.size(); ++i) {
    const std::string p = "ac_buses[" + std::to_string(i) + "]";
    const json& e = buses[i];
    grid::AcBus b;
    b.id = int_field(e, p, "id");
    b.kind = bus_kind(str_or(e, p, "kind", "pq"), p + ".kind");
    b.p_inject = num_or(e, p, "p", 0.0);
    b.q_inject = num_or(e, p, "q", 0.0);
    b.v_set = num_or(e, p, "v_set", 1.0);
    b.angle_set = num_or(e, p, "angle_deg", 0.0) * kPi / 180.0;
    net.ac_buses.push_back(b);
  }

  if (const json* lines = find(doc, root, "ac_lines")) {
    if (!lines->is_array()) fail("ac_lines", "expected an array");
    for (size_t i = 0; i < lines->size(); ++i) {
      const std::string p = "ac_lines[" + std::to_string(i) + "]";
      const json& e = (*lines)[i];
      grid::AcLine l;
      l.from = int_field(e, p, "from");
      l.to = int_field(e, p, "to");
      l.r = num_field(e, p, "r");
      l.x = num_field(e, p, "x");
      l.b_shunt = num_or(e, p, "b", 0.0);
      net.ac_lines.push_back(l);
    }
  }

  if (const json* buses_dc = find(doc, root, "dc_buses")) {
    if (!buses_dc->is_array()) fail("dc_buses", "expected an array");
    for (size_t i = 0; i < buses_dc->size(); ++i) {
      const std::string p = "dc_buses[" + std::to_string(i) + "]";
      const json& e = (*buses_dc)[i];
      grid::DcBus b;
      b.id = int_field(e, p, "id");
      b.p_inject = num_or(e, p, "p", 0.0);
      net.dc_buses.push_back(b);
    }
  }

  if (const json* lines_dc = find(doc, root, "dc_lines")) {
    if (!lines_dc->is_array()) fail("dc_lines", "expected an array");
    for (size_t i = 0; i < lines_dc->size(); ++i) {
      const std::string p = "dc_lines[" + std::to_string(i) + "]";
      const json& e = (*lines_dc)[i];
      grid::DcLine l;
      l.from = int_field(e, p, "from");
      l.to = int_field(e, p, "to");
      l.r = num_field(e, p, "r");
      net.dc_lines.push_back(l);
    }
  }

  if (const json* convs = find(doc, root, "converters")) {
    if (!convs->is_array()) fail("converters", "expected an array");
    for (size_t i = 0; i < convs->size(); ++i) {
      const std::string p = "converters[" + std::to_string(i) + "]";
      const json& e = (*convs)[i];
      grid::Converter c;
      c.id = int_field(e, p, "id");
      c.pcc_bus = int_field(e, p, "pcc_bus");
      c.dc_bus = int_field(e, p, "dc_bus");
      c.z_tr = complex_pair(require(e, p, "z_tr"), p + ".z_tr");
      c.b_f = num_or(e, p, "b_f", 0.0);
      c.z_c = complex_pair(require(e, p, "z_c"), p + ".z_c");
      if (const json* est = find(e, p, "loss_estimate")) {
        const std::string pe = p + ".loss_estimate";
        c.loss_resistance = grid::loss_equivalent_resistance(num_field(*est, pe, "p_ac"),
                                                             num_field(*est, pe, "p_dc"));
      } else {
        c.loss_resistance = num_or(e, p, "loss_resistance", 0.0);
      }
      c.mode = control_mode(str_field(e, p, "mode"), p + ".mode");
      parse_setpoints(e, p, c.set);
      net.converters.push_back(c);
    }
  }

  if (const json* st = find(doc, root, "stochastic")) {
    parse_stochastic(*st, "stochastic", net);
  }
  if (const json* sc = find(doc, root, "scenario")) {
    apply_scenario(*sc, "scenario", net, diag);
  }
  return net;
}

size_t line_of_byte(const std::string& text, size_t byte) {
  const size_t end = std::min(byte, text.size());
  return static_cast<size_t>(std::count(text.begin(), text.begin() + end, '\n')) + 1;
}

}  // namespace

LoadResult parse_case_text(const std::string& text, const std::string& origin) {
  LoadResult out;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    out.parse_ok = false;
    out.diagnostics.errors.push_back(origin + ": line " +
                                     std::to_string(line_of_byte(text, e.byte)) + ": " +
                                     e.what());
    return out;
  }
  try {
    out.net = parse_document(doc, out.diagnostics);
  } catch (const FieldError& e) {
    out.parse_ok = false;
    out.diagnostics.errors.insert(out.diagnostics.errors.begin(),
                                  origin + ": " + e.what());
    return out;
  } catch (const std::exception& e) {
    out.parse_ok = false;
    out.diagnostics.errors.insert(out.diagnostics.errors.begin(), origin + ": " + e.what());
    return out;
  }
  out.parse_ok = true;
  if (out.net.name.empty()) {
    // Fall back to the file stem.
    const size_t slash = origin.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? origin : origin.substr(slash + 1);
    const size_t dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem.resize(dot);
    out.net.name = stem;
  }
  grid::Diagnostics vdiag = grid::validate_case(out.net);
  out.diagnostics.errors.insert(out.diagnostics.errors.end(), vdiag.errors.begin(),
                                vdiag.errors.end());
  out.diagnostics.warnings.insert(out.diagnostics.warnings.end(), vdiag.warnings.begin(),
                                  vdiag.warnings.end());
  return out;
}

LoadResult load_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    LoadResult out;
    out.parse_ok = false;
    out.diagnostics.errors.push_back(path + ": cannot open file");
    return out;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case_text(buf.str(), path);
}

}  // namespace acdcflow::io
