#include "dwr/report.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dwr {

namespace {

std::string format_double(double v)
{
  char buf[48];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

double parse_double_token(const std::string& token)
{
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("not a number: '" + token + "'");
  return v;
}

std::string trim(const std::string& s)
{
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

void apply_mode(ParsedConfig& pc, const std::string& mode)
{
  if (mode == "new") {
    pc.run.c_u = 0.5;
    pc.run.c_z = 0.5;
  } else if (mode == "full") {
    pc.run.c_u = -1.0;
    pc.run.c_z = -1.0;
  } else if (mode == "int") {
    pc.run.c_u = enrich_never_sentinel;
    pc.run.c_z = enrich_never_sentinel;
  } else {
    throw ConfigError("unknown algorithm mode '" + mode + "' (expected new, full or int)");
  }
  pc.mode = mode;
}

const char* csv_header =
    "level,dofs_primal,dofs_enriched,eta_h2,eta_k,eta_R,eta_u2,eta_z2,eta_total,J_value,error,"
    "I_eff_h,I_eff,I_eff_R,z_solves_cum,u_solves_cum,step_trace";

std::string encode_trace(const std::vector<StepTraceEntry>& trace)
{
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += ';';
    const auto& p = trace[i].parts;
    out += to_string(trace[i].action) + ':' + format_double(p.eta_h2) + ':' +
           format_double(p.eta_k) + ':' + format_double(p.eta_R) + ':' + format_double(p.eta_u2) +
           ':' + format_double(p.eta_z2) + ':' + format_double(p.total);
  }
  return out;
}

std::vector<StepTraceEntry> decode_trace(const std::string& text)
{
  std::vector<StepTraceEntry> trace;
  if (text.empty()) return trace;
  for (const std::string& step : split(text, ';')) {
    const auto fields = split(step, ':');
    if (fields.size() != 7) throw ConfigError("malformed step trace entry '" + step + "'");
    StepTraceEntry entry;
    if (fields[0] == "I") entry.action = EnrichAction::interpolate;
    else if (fields[0] == "Z") entry.action = EnrichAction::solve_adjoint;
    else if (fields[0] == "U") entry.action = EnrichAction::solve_primal;
    else throw ConfigError("unknown step trace action '" + fields[0] + "'");
    entry.parts.eta_h2 = parse_double_token(fields[1]);
    entry.parts.eta_k = parse_double_token(fields[2]);
    entry.parts.eta_R = parse_double_token(fields[3]);
    entry.parts.eta_u2 = parse_double_token(fields[4]);
    entry.parts.eta_z2 = parse_double_token(fields[5]);
    entry.parts.total = parse_double_token(fields[6]);
    trace.push_back(entry);
  }
  return trace;
}

} // namespace

ParsedConfig parse_config(const std::string& text)
{
  ParsedConfig pc;
  std::string section;
  std::optional<std::string> mode;
  bool have_problem_kind = false;
  bool have_goal_kind = false;
  bool explicit_cu = false, explicit_cz = false;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = " (line " + std::to_string(lineno) + ")";

    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("malformed section header" + where);
      section = t.substr(1, t.size() - 2);
      if (section != "problem" && section != "goal" && section != "algorithm" &&
          section != "solver" && section != "output")
        throw ConfigError("unknown section [" + section + "]" + where);
      continue;
    }

    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value" + where);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty()) throw ConfigError("key outside of any section" + where);

    auto as_double = [&](const std::string& v) {
      try {
        return parse_double_token(v);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()) + where);
      }
    };
    auto as_int = [&](const std::string& v) {
      const double d = as_double(v);
      const int i = static_cast<int>(d);
      if (static_cast<double>(i) != d) throw ConfigError("expected an integer" + where);
      return i;
    };

    if (section == "problem") {
      if (key == "kind") {
        pc.run.problem_kind = value;
        have_problem_kind = true;
      } else if (key == "p") pc.run.p = as_double(value);
      else if (key == "epsilon") pc.run.epsilon = as_double(value);
      else if (key == "macro_subdivisions") pc.run.macro_subdivisions = as_int(value);
      else throw ConfigError("unknown key problem." + key + where);
    } else if (section == "goal") {
      if (key == "kind") {
        pc.run.goal_kind = value;
        have_goal_kind = true;
      } else if (key == "point") {
        std::istringstream ps(value);
        std::string sx, sy;
        ps >> sx >> sy;
        if (sx.empty() || sy.empty()) throw ConfigError("goal.point needs two coordinates" + where);
        pc.run.point = {as_double(sx), as_double(sy)};
      } else if (key == "reference") pc.run.reference = as_double(value);
      else throw ConfigError("unknown key goal." + key + where);
    } else if (section == "algorithm") {
      if (key == "mode") mode = value;
      else if (key == "c_u") {
        pc.run.c_u = as_double(value);
        explicit_cu = true;
      } else if (key == "c_z") {
        pc.run.c_z = as_double(value);
        explicit_cz = true;
      } else if (key == "tol") pc.run.tol = as_double(value);
      else if (key == "max_levels") pc.run.max_levels = as_int(value);
      else if (key == "theta") pc.run.theta = as_double(value);
      else throw ConfigError("unknown key algorithm." + key + where);
    } else if (section == "solver") {
      if (key == "kappa") pc.run.kappa = as_double(value);
      else if (key == "s_order") pc.run.s_points = as_int(value);
      else if (key == "linear") {
        if (value == "direct") pc.run.linear = LinearSolverKind::direct;
        else if (value == "cg") pc.run.linear = LinearSolverKind::cg;
        else throw ConfigError("solver.linear must be direct or cg" + where);
      } else throw ConfigError("unknown key solver." + key + where);
    } else { // output
      if (key == "csv") pc.csv_path = value;
      else if (key == "mesh_dump_every") pc.mesh_dump_every = as_int(value);
      else throw ConfigError("unknown key output." + key + where);
    }
  }

  if (!have_problem_kind) throw ConfigError("missing required key problem.kind");
  if (!have_goal_kind) throw ConfigError("missing required key goal.kind");

  if (mode) {
    const double cu = pc.run.c_u, cz = pc.run.c_z;
    apply_mode(pc, *mode);
    if (explicit_cu) pc.run.c_u = cu;
    if (explicit_cz) pc.run.c_z = cz;
  } else if (explicit_cu || explicit_cz) {
    pc.mode = "custom";
  }
  return pc;
}

ParsedConfig parse_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void emit_csv(const std::vector<LevelRecord>& records, std::ostream& os)
{
  DWR_REQUIRE(!records.empty(), "refusing to write an empty CSV");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  os << csv_header << '\n';
  for (const auto& r : records) {
    os << r.level << ',' << r.dofs_primal << ',' << r.dofs_enriched << ','
       << format_double(r.parts.eta_h2) << ',' << format_double(r.parts.eta_k) << ','
       << format_double(r.parts.eta_R) << ',' << format_double(r.parts.eta_u2) << ','
       << format_double(r.parts.eta_z2) << ',' << format_double(r.parts.total) << ','
       << format_double(r.J_value) << ',' << format_double(r.error.value_or(nan)) << ','
       << format_double(r.eff.i_eff_h.value_or(nan)) << ','
       << format_double(r.eff.i_eff.value_or(nan)) << ','
       << format_double(r.eff.i_eff_R.value_or(nan)) << ',' << r.z_solves_cum << ','
       << r.u_solves_cum << ',' << encode_trace(r.trace) << '\n';
  }
}

void emit_csv(const std::vector<LevelRecord>& records, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  emit_csv(records, out);
  out.flush();
  if (!out) throw ConfigError("failed writing CSV to '" + path + "'");
}

std::vector<CsvRow> read_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV '" + path + "'");
  if (trim(line) != csv_header) throw ConfigError("unexpected CSV header in '" + path + "'");

  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 17) throw ConfigError("malformed CSV row: '" + line + "'");
    CsvRow row;
    row.level = static_cast<int>(parse_double_token(f[0]));
    row.dofs_primal = static_cast<int>(parse_double_token(f[1]));
    row.dofs_enriched = static_cast<int>(parse_double_token(f[2]));
    row.parts.eta_h2 = parse_double_token(f[3]);
    row.parts.eta_k = parse_double_token(f[4]);
    row.parts.eta_R = parse_double_token(f[5]);
    row.parts.eta_u2 = parse_double_token(f[6]);
    row.parts.eta_z2 = parse_double_token(f[7]);
    row.parts.total = parse_double_token(f[8]);
    row.J_value = parse_double_token(f[9]);
    row.error = parse_double_token(f[10]);
    row.i_eff_h = parse_double_token(f[11]);
    row.i_eff = parse_double_token(f[12]);
    row.i_eff_R = parse_double_token(f[13]);
    row.z_solves_cum = static_cast<int>(parse_double_token(f[14]));
    row.u_solves_cum = static_cast<int>(parse_double_token(f[15]));
    row.trace = decode_trace(f[16]);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

bool parts_identity_holds(const EstimatorParts& p)
{
  const double lhs = p.total;
  const double rhs = p.eta_h2 - p.eta_k + p.eta_R + p.eta_u2 + p.eta_z2;
  return std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs));
}

} // namespace

CheckResult check_csv(const std::string& path)
{
  CheckResult result;
  std::vector<CsvRow> rows;
  try {
    rows = read_csv(path);
  } catch (const ConfigError& e) {
    result.ok = false;
    result.messages.push_back(e.what());
    return result;
  }

  int prev_z = 0, prev_u = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string at = "row " + std::to_string(i + 1) + ": ";
    if (r.level != static_cast<int>(i) + 1) {
      result.ok = false;
      result.messages.push_back(at + "levels are not contiguous from 1");
    }
    if (!parts_identity_holds(r.parts)) {
      result.ok = false;
      result.messages.push_back(at + "estimator total does not match the five-part identity");
    }
    for (const auto& step : r.trace)
      if (!parts_identity_holds(step.parts)) {
        result.ok = false;
        result.messages.push_back(at + "step-trace snapshot violates the five-part identity");
      }
    if (r.z_solves_cum < prev_z || r.u_solves_cum < prev_u) {
      result.ok = false;
      result.messages.push_back(at + "enriched-solve counters decreased");
    }
    if (r.trace.empty() || r.trace.front().action != EnrichAction::interpolate) {
      result.ok = false;
      result.messages.push_back(at + "step trace does not start with the interpolation step");
    }
    if (r.trace.size() > 4) {
      result.ok = false;
      result.messages.push_back(at + "step trace has more than 4 estimator computations");
    }
    prev_z = r.z_solves_cum;
    prev_u = r.u_solves_cum;
  }
  if (rows.empty()) {
    result.ok = false;
    result.messages.push_back("CSV contains no data rows");
  }
  return result;
}

double fit_rate(const std::vector<double>& x, const std::vector<double>& y,
                std::vector<std::string>* warnings)
{
  DWR_REQUIRE(x.size() == y.size(), "fit_rate needs equally long columns");
  if (x.size() < 4) throw ConfigError("fit_rate needs at least 4 records");

  const std::size_t begin = x.size() / 2;
  std::vector<double> lx, ly;
  for (std::size_t i = begin; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) {
      if (warnings)
        warnings->push_back("fit_rate: excluded non-positive value at index " + std::to_string(i));
      continue;
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 2) throw ConfigError("fit_rate: fewer than 2 usable points");

  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_manifest(const ParsedConfig& config, const RunResult& result,
                    const std::string& csv_path, const std::string& manifest_path)
{
  std::ofstream os(manifest_path);
  if (!os) throw ConfigError("cannot open '" + manifest_path + "' for writing");

  const RunConfig& rc = config.run;
  os << "version = " << code_version << '\n';
  os << "csv = " << csv_path << '\n';
  os << "levels = " << result.records.size() << '\n';
  os << "converged = " << (result.converged ? "true" : "false") << '\n';
  os << "problem.kind = " << rc.problem_kind << '\n';
  if (rc.problem_kind == "plaplace")
    os << "problem.p = " << rc.p << "\nproblem.epsilon = " << format_double(rc.epsilon) << '\n';
  os << "goal.kind = " << rc.goal_kind << '\n';
  if (rc.goal_kind == "point")
    os << "goal.point = " << format_double(rc.point.x) << ' ' << format_double(rc.point.y) << '\n';
  os << "algorithm.mode = " << config.mode << '\n';
  os << "algorithm.c_u = " << format_double(rc.c_u) << '\n';
  os << "algorithm.c_z = " << format_double(rc.c_z) << '\n';
  os << "algorithm.tol = " << format_double(rc.tol) << '\n';
  os << "algorithm.max_levels = " << rc.max_levels << '\n';
  os << "algorithm.theta = " << format_double(rc.theta) << '\n';
  os << "solver.kappa = " << format_double(rc.kappa) << '\n';
  os << "solver.s_order = " << rc.s_points << '\n';
  os << "solver.linear = " << (rc.linear == LinearSolverKind::direct ? "direct" : "cg") << '\n';

  if (!result.records.empty()) {
    const auto& last = result.records.back();
    os << "final_J = " << format_double(last.J_value) << '\n';
    if (last.error) os << "final_error = " << format_double(*last.error) << '\n';
    if (result.records.size() >= 4 && last.error) {
      std::vector<double> dofs, errs;
      for (const auto& r : result.records) {
        dofs.push_back(r.dofs_primal);
        errs.push_back(r.error.value_or(0.0));
      }
      try {
        os << "error_slope = " << format_double(fit_rate(dofs, errs)) << '\n';
      } catch (const ConfigError&) {
        // error column hit the reference plateau; no slope to report
      }
    }
  }
}

namespace {

std::string default_csv_path(const std::string& config_path)
{
  std::string base = config_path;
  const auto dot = base.find_last_of('.');
  const auto slash = base.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    base = base.substr(0, dot);
  return base + ".csv";
}

std::string csv_with_mode_suffix(const std::string& csv, const std::string& mode)
{
  std::string base = csv;
  if (base.size() > 4 && base.substr(base.size() - 4) == ".csv") base.resize(base.size() - 4);
  return base + "." + mode + ".csv";
}

void run_one(ParsedConfig pc, const std::string& csv_path)
{
  LevelObserver observer;
  if (pc.mesh_dump_every > 0) {
    const int every = pc.mesh_dump_every;
    std::string base = csv_path;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv") base.resize(base.size() - 4);
    observer = [base, every](const LevelRecord& rec, const Mesh& mesh) {
      if (rec.level % every != 0) return;
      const std::string path = base + ".level" + std::to_string(rec.level) + ".mesh";
      std::ofstream os(path);
      if (!os) throw ConfigError("cannot open '" + path + "' for writing");
      mesh.dump(os);
    };
  }
  const RunResult result = run_adaptive(pc.run, observer);
  emit_csv(result.records, csv_path);
  write_manifest(pc, result, csv_path, csv_path + ".manifest");
}

} // namespace

int cli_main(int argc, const char* const* argv)
{
  CLI::App app{"goal-oriented adaptive FEM with recovered sensitivity weights"};
  app.require_subcommand(1);

  std::string config_path, out_path, csv_path, modes_arg = "new,full,int";
  int mesh_dump_every = -1;

  auto* run = app.add_subcommand("run", "run the adaptive loop for one configuration");
  run->add_option("config", config_path, "configuration file")->required();
  run->add_option("--out", out_path, "CSV output path (overrides [output] csv)");
  run->add_option("--mesh-dump-every", mesh_dump_every, "dump the mesh every N levels");

  auto* sweep = app.add_subcommand("sweep", "run several algorithm modes of one configuration");
  sweep->add_option("config", config_path, "configuration file")->required();
  sweep->add_option("--modes", modes_arg, "comma-separated list of modes (new,full,int)");

  auto* check = app.add_subcommand("check", "re-validate invariants on a stored CSV");
  check->add_option("csv", csv_path, "CSV file written by run or sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      ParsedConfig pc = parse_config_file(config_path);
      if (mesh_dump_every >= 0) pc.mesh_dump_every = mesh_dump_every;
      const std::string csv =
          !out_path.empty() ? out_path
                            : (!pc.csv_path.empty() ? pc.csv_path : default_csv_path(config_path));
      run_one(std::move(pc), csv);
      return 0;
    }
    if (sweep->parsed()) {
      const ParsedConfig base = parse_config_file(config_path);
      const std::string csv = !base.csv_path.empty() ? base.csv_path : default_csv_path(config_path);
      for (const std::string& mode : split(modes_arg, ',')) {
        if (trim(mode).empty()) continue;
        ParsedConfig pc = base;
        apply_mode(pc, trim(mode));
        run_one(std::move(pc), csv_with_mode_suffix(csv, trim(mode)));
      }
      return 0;
    }
    const CheckResult result = check_csv(csv_path);
    for (const auto& msg : result.messages) std::fprintf(stderr, "check: %s\n", msg.c_str());
    std::printf("check: %s\n", result.ok ? "all invariants hold" : "FAILED");
    return result.ok ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  }
}

} // namespace dwr
