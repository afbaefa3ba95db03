#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "socialtrack/msd.hpp"
#include "socialtrack/netdesign.hpp"
#include "socialtrack/regret.hpp"
#include "socialtrack/scenario.hpp"
#include "socialtrack/simulate.hpp"

namespace socialtrack {

/// Exit statuses of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitUnstable = 3 };

/// A named output file and its full contents.
struct Artifact {
  std::string name;
  std::string content;
};

/// Everything a subcommand produces. Warnings and notices are meant for
/// standard error; artifacts go to the output directory.
struct CommandOutput {
  std::vector<Artifact> artifacts;
  std::vector<std::string> warnings;
};

/// Fixed 17-significant-digit formatting used by every CSV writer.
std::string format_double(double v);

/// Builds a CSV document: header, then one line per row, '\n' endings.
std::string csv_document(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

nlohmann::json to_json(const MsdReport& r);
MsdReport msd_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RegretReport& r);
RegretReport regret_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EdgeCandidate& c);

/// Serializes JSON for output files (2-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);

CommandOutput run_analyze(const Scenario& s);
CommandOutput run_simulate(const Scenario& s);
CommandOutput run_regret(const Scenario& s);
CommandOutput run_design_edge(const Scenario& s);
CommandOutput run_sweep_alpha(const Scenario& s);

/// Names accepted by run_subcommand.
const std::vector<std::string>& subcommand_names();

/// Runs `name` on `s`, writes its artifacts into `out_dir` (created when
/// missing) and reports warnings and errors on `err`. Returns an ExitCode.
int run_subcommand(std::string_view name, const Scenario& s, const std::filesystem::path& out_dir, std::ostream& err);

}  // namespace socialtrack
