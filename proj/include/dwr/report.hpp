#ifndef DWR_REPORT_HPP
#define DWR_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dwr/driver.hpp"

namespace dwr {

inline constexpr const char* code_version = "dwrfem 1.0.0";

/// Parse the flat sectioned key=value configuration format. Unknown keys and
/// type errors are rejected with line numbers; problem.kind and goal.kind are
/// required. `mode = new|full|int` sets c_u and c_z.
struct ParsedConfig {
  RunConfig run;
  std::string csv_path;       // [output] csv, may be empty
  int mesh_dump_every = 0;    // [output] mesh_dump_every
  std::string mode = "new";
};

ParsedConfig parse_config(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);

/// One CSV row per level, fixed column order, full double precision,
/// locale-independent decimal point.
void emit_csv(const std::vector<LevelRecord>& records, const std::string& path);
void emit_csv(const std::vector<LevelRecord>& records, std::ostream& os);

struct CsvRow {
  int level = 0;
  int dofs_primal = 0;
  int dofs_enriched = 0;
  EstimatorParts parts;
  double J_value = 0.0;
  double error = 0.0; // nan when no reference
  double i_eff_h = 0.0;
  double i_eff = 0.0;
  double i_eff_R = 0.0;
  int z_solves_cum = 0;
  int u_solves_cum = 0;
  std::vector<StepTraceEntry> trace;
};

std::vector<CsvRow> read_csv(const std::string& path);

/// Validate invariants on stored output: the five-part identity per row and
/// per trace snapshot, monotone solve counters, contiguous levels.
struct CheckResult {
  bool ok = true;
  std::vector<std::string> messages;
};
CheckResult check_csv(const std::string& path);

/// Least-squares slope of log(y) against log(x) over the last half of the
/// entries. Non-positive values are excluded (with a warning message that
/// callers may surface); at least 4 records and 2 usable points are required.
double fit_rate(const std::vector<double>& x, const std::vector<double>& y,
                std::vector<std::string>* warnings = nullptr);

/// Run manifest written next to the CSV: config echo, code version, CSV path,
/// final goal value / error and the fitted error slope.
void write_manifest(const ParsedConfig& config, const RunResult& result,
                    const std::string& csv_path, const std::string& manifest_path);

/// CLI driver: `run <config>`, `sweep <config> --modes new,full,int`,
/// `check <csv>`. Exit code 0 on success, 2 on configuration errors, 3 on
/// solver failures.
int cli_main(int argc, const char* const* argv);

} // namespace dwr

#endif
