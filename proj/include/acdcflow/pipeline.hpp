#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace acdcflow::pipeline {

enum class Method { Flow, Cm, Mcs, Compare };

std::optional<Method> method_from_string(const std::string& s);
const char* method_name(Method m);

struct RunConfig {
  std::string case_path;
  Method method = Method::Flow;
  int samples = 10000;       // mcs / compare
  std::uint64_t seed = 1;
  int order = 8;             // cumulant order, [2, 8]
  int grid_points = 0;       // 0: method default (513, compare: 65); else >= 33
  std::string monitor;       // comma list of ids or classes; empty keeps all
  std::string out_dir = ".";
  int workers = 0;           // mcs solver threads; 0: hardware concurrency
};

// Exit-code taxonomy. Values are the process exit codes.
enum class Status {
  Ok = 0,
  InvalidArgs = 1,
  ParseFailed = 2,
  ValidationFailed = 3,
  Diverged = 4,
  OracleUnreliable = 5,
  IoFailed = 6,
  Internal = 9,
};

struct RunOutcome {
  Status status = Status::Ok;
  std::string message;
  std::vector<std::string> files_written;
};

// Runs one batch method end to end: load + validate the case, execute the
// method, emit CSV reports into out_dir. All report files are deterministic
// for a fixed seed; timings.csv is the one exception.
RunOutcome run_pipeline(const RunConfig& cfg);

}  // namespace acdcflow::pipeline
