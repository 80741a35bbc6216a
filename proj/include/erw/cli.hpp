#pragma once

// Command-line front end.
//
//   erw simulate | moments | scaling | verify {clt,lil,sweep,equivalence,all} | couple
//
// Values come from flags, then from a key=value file given by --config, then
// from per-command defaults. Every output file starts with the resolved
// configuration and the tool version. Exit codes: 0 success or pass,
// 1 validation or I/O failure, 2 regime error, 3 resource error, 4 verdict fail.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "erw/engine.hpp"
#include "erw/io.hpp"

namespace erw {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRegime = 2,
  kExitResource = 3,
  kExitVerdictFail = 4,
};

struct RunConfig {
  std::string command;
  std::string which;  // verify target
  double p = 0.5;
  double q = 0.5;
  std::int64_t n = 0;
  std::int64_t paths = 0;
  std::vector<std::int64_t> checkpoints;
  std::vector<double> p_grid;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::Collapsed;
  double kappa = 0.0;
  bool bridge_correction = true;
  std::string format;
  std::string out = "-";
  std::string report;
  std::string dump_paths;
  unsigned workers = 0;

  /// Everything that determines the output. Paths and the worker count are
  /// left out so that reruns compare byte for byte.
  Metadata metadata() const;
};

/// Fills defaults for `command` and validates. `values` maps option names
/// (without dashes) to text; it is the merge of flags over the config file.
/// Throws DomainError or RegimeError.
RunConfig resolve_config(const std::string& command, const std::string& which,
                         const std::map<std::string, std::string>& values);

/// Runs the tool. "-" as an output path writes to `out`; notes and summaries
/// that would mix with data go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace erw
