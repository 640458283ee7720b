#include "acdcflow.h"

#include "acdcflow/case_io.hpp"
#include "acdcflow/pipeline.hpp"
#include "acdcflow/plf.hpp"
#include "acdcflow/solver.hpp"
#include "acdcflow/version.hpp"

#include <memory>
#include <string>

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }
void clear_error() { g_last_error.clear(); }

}  // namespace

using namespace acdcflow;

struct acdc_case {
  std::shared_ptr<grid::NetworkCase> net;
};

struct acdc_solution {
  std::shared_ptr<grid::NetworkCase> net;  // keeps the problem's referent alive
  std::unique_ptr<solver::Problem> prob;
  solver::Problem::Solution sol;
  double balance_residual = 0.0;
};

namespace {

acdc_status finish_load(io::LoadResult&& loaded, acdc_case** out) {
  if (!loaded.parse_ok) {
    set_error(loaded.diagnostics.joined());
    return ACDC_PARSE_FAILED;
  }
  if (!loaded.diagnostics.ok()) {
    set_error(loaded.diagnostics.joined());
    return ACDC_VALIDATION_FAILED;
  }
  auto* handle = new acdc_case;
  handle->net = std::make_shared<grid::NetworkCase>(std::move(loaded.net));
  *out = handle;
  clear_error();
  return ACDC_OK;
}

}  // namespace

extern "C" {

const char* acdc_version(void) { return kVersion; }

const char* acdc_last_error(void) { return g_last_error.c_str(); }

acdc_status acdc_case_load(const char* path, acdc_case** out) {
  if (!path || !out) {
    set_error("null argument");
    return ACDC_INVALID_ARGS;
  }
  *out = nullptr;
  try {
    return finish_load(io::load_case_file(path), out);
  } catch (const std::exception& e) {
    set_error(e.what());
    return ACDC_INTERNAL;
  }
}

acdc_status acdc_case_parse(const char* text, const char* origin, acdc_case** out) {
  if (!text || !out) {
    set_error("null argument");
    return ACDC_INVALID_ARGS;
  }
  *out = nullptr;
  try {
    return finish_load(io::parse_case_text(text, origin ? origin : "<string>"), out);
  } catch (const std::exception& e) {
    set_error(e.what());
    return ACDC_INTERNAL;
  }
}

void acdc_case_free(acdc_case* c) { delete c; }

const char* acdc_case_name(const acdc_case* c) {
  return c ? c->net->name.c_str() : "";
}

int acdc_case_ac_bus_count(const acdc_case* c) {
  return c ? static_cast<int>(c->net->ac_buses.size()) : 0;
}

int acdc_case_dc_bus_count(const acdc_case* c) {
  return c ? static_cast<int>(c->net->dc_buses.size()) : 0;
}

int acdc_case_converter_count(const acdc_case* c) {
  return c ? static_cast<int>(c->net->converters.size()) : 0;
}

acdc_status acdc_solve(const acdc_case* c, int max_iterations, double tolerance,
                       acdc_solution** out) {
  if (!c || !out) {
    set_error("null argument");
    return ACDC_INVALID_ARGS;
  }
  *out = nullptr;
  try {
    auto handle = std::make_unique<acdc_solution>();
    handle->net = c->net;
    handle->prob = std::make_unique<solver::Problem>(*handle->net);

    solver::SolverOptions opt;
    if (max_iterations > 0) opt.max_iterations = max_iterations;
    if (tolerance > 0.0) opt.tolerance = tolerance;

    std::vector<solver::InjectionDelta> deltas;
    if (!handle->net->stochastic.empty()) {
      deltas = plf::mean_injection_deltas(*handle->prob);
    }
    handle->sol = handle->prob->solve(opt, deltas.empty() ? nullptr : &deltas);
    if (!handle->sol.converged) {
      set_error(handle->sol.failure.empty() ? "solve did not converge"
                                            : handle->sol.failure);
      return ACDC_DIVERGED;
    }
    handle->balance_residual =
        solver::balance_report(*handle->prob, handle->sol.state,
                               deltas.empty() ? nullptr : &deltas)
            .residual;
    *out = handle.release();
    clear_error();
    return ACDC_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ACDC_INTERNAL;
  }
}

void acdc_solution_free(acdc_solution* s) { delete s; }

int acdc_solution_iterations(const acdc_solution* s) {
  return s ? s->sol.iterations : 0;
}

double acdc_solution_max_mismatch(const acdc_solution* s) {
  return s ? s->sol.max_mismatch : 0.0;
}

double acdc_solution_balance_residual(const acdc_solution* s) {
  return s ? s->balance_residual : 0.0;
}

acdc_status acdc_solution_ac_voltage(const acdc_solution* s, int bus_id, double* mag,
                                     double* angle_rad) {
  if (!s || !mag || !angle_rad) {
    set_error("null argument");
    return ACDC_INVALID_ARGS;
  }
  try {
    const int i = s->prob->ac_bus_index(bus_id);
    *mag = s->sol.state.ac_u[i];
    *angle_rad = s->sol.state.ac_delta[i];
    clear_error();
    return ACDC_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ACDC_INVALID_ARGS;
  }
}

acdc_status acdc_solution_dc_voltage(const acdc_solution* s, int bus_id, double* u) {
  if (!s || !u) {
    set_error("null argument");
    return ACDC_INVALID_ARGS;
  }
  try {
    const int i = s->prob->dc_bus_index(bus_id);
    *u = s->sol.state.dc_u[i];
    clear_error();
    return ACDC_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ACDC_INVALID_ARGS;
  }
}

acdc_status acdc_run(const char* case_path, const acdc_run_options* opt) {
  if (!case_path) {
    set_error("null argument");
    return ACDC_INVALID_ARGS;
  }
  try {
    pipeline::RunConfig cfg;
    cfg.case_path = case_path;
    if (opt) {
      if (opt->method) {
        const auto m = pipeline::method_from_string(opt->method);
        if (!m) {
          set_error(std::string("unknown method '") + opt->method + "'");
          return ACDC_INVALID_ARGS;
        }
        cfg.method = *m;
      }
      if (opt->out_dir) cfg.out_dir = opt->out_dir;
      if (opt->monitor) cfg.monitor = opt->monitor;
      if (opt->samples > 0) cfg.samples = opt->samples;
      if (opt->seed != 0) cfg.seed = opt->seed;
      if (opt->order > 0) cfg.order = opt->order;
      if (opt->grid_points > 0) cfg.grid_points = opt->grid_points;
      if (opt->workers > 0) cfg.workers = opt->workers;
    }
    const auto outcome = pipeline::run_pipeline(cfg);
    if (outcome.status != pipeline::Status::Ok) {
      set_error(outcome.message);
    } else {
      clear_error();
    }
    return static_cast<acdc_status>(outcome.status);
  } catch (const std::exception& e) {
    set_error(e.what());
    return ACDC_INTERNAL;
  }
}

}  // extern "C"
