#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dwr/report.hpp"

using namespace dwr;
namespace fs = std::filesystem;

namespace {

const char* minimal_config = R"([problem]
kind = poisson
[goal]
kind = mean
)";

std::string temp_path(const std::string& name)
{
  return (fs::temp_directory_path() / name).string();
}

RunResult tiny_run()
{
  RunConfig config;
  config.problem_kind = "poisson";
  config.goal_kind = "mean";
  config.max_levels = 2;
  return run_adaptive(config);
}

} // namespace

TEST_CASE("minimal config fills the defaults")
{
  const ParsedConfig pc = parse_config(minimal_config);
  CHECK(pc.run.problem_kind == "poisson");
  CHECK(pc.run.goal_kind == "mean");
  CHECK(pc.run.c_u == 0.5);
  CHECK(pc.run.c_z == 0.5);
  CHECK(pc.run.theta == 0.5);
  CHECK(pc.run.kappa == 1e-2);
  CHECK(pc.run.s_points == 5);
  CHECK(pc.mode == "new");
}

TEST_CASE("algorithm modes map to the decision constants")
{
  const ParsedConfig full = parse_config("[problem]\nkind = poisson\n[goal]\nkind = mean\n"
                                         "[algorithm]\nmode = full\n");
  CHECK(full.run.c_u == -1.0);
  CHECK(full.run.c_z == -1.0);

  const ParsedConfig interp = parse_config("[problem]\nkind = poisson\n[goal]\nkind = mean\n"
                                           "[algorithm]\nmode = int\n");
  CHECK(interp.run.c_u == 1e100);
  CHECK(interp.run.c_z == 1e100);
}

TEST_CASE("config errors carry line numbers")
{
  // unknown key
  try {
    parse_config("[problem]\nkind = poisson\nflavor = salted\n[goal]\nkind = mean\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  // type error
  try {
    parse_config("[problem]\nkind = poisson\np = four\n[goal]\nkind = mean\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  // missing required keys
  CHECK_THROWS_AS(parse_config("[problem]\nkind = poisson\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[goal]\nkind = mean\n"), ConfigError);
  // unknown section
  CHECK_THROWS_AS(parse_config("[cooking]\nkind = stew\n"), ConfigError);
}

TEST_CASE("one record gives a two-line CSV")
{
  RunConfig config;
  config.problem_kind = "poisson";
  config.goal_kind = "mean";
  config.max_levels = 1;
  const RunResult result = run_adaptive(config);
  std::ostringstream os;
  emit_csv(result.records, os);
  int lines = 0;
  std::string line;
  std::istringstream is(os.str());
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("CSV round-trips exactly and uses the baked reference")
{
  const RunResult result = tiny_run();
  const std::string path = temp_path("dwr_roundtrip.csv");
  emit_csv(result.records, path);

  const auto rows = read_csv(path);
  REQUIRE(rows.size() == result.records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& rec = result.records[i];
    const auto& row = rows[i];
    CHECK(row.level == rec.level);
    CHECK(row.dofs_primal == rec.dofs_primal);
    CHECK(row.parts.eta_h2 == rec.parts.eta_h2); // bit-exact round trip
    CHECK(row.parts.total == rec.parts.total);
    CHECK(row.J_value == rec.J_value);
    CHECK(row.error == *rec.error);
    // the Poisson mean reference is baked in
    CHECK(row.error ==
          doctest::Approx(std::abs(0.03514425373878841 - rec.J_value)).epsilon(1e-15));
    REQUIRE(row.trace.size() == rec.trace.size());
    for (std::size_t k = 0; k < row.trace.size(); ++k)
      CHECK(row.trace[k].parts.total == rec.trace[k].parts.total);
  }
  fs::remove(path);
}

TEST_CASE("identical runs produce byte-identical CSVs")
{
  const RunResult a = tiny_run();
  const RunResult b = tiny_run();
  std::ostringstream sa, sb;
  emit_csv(a.records, sa);
  emit_csv(b.records, sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("stored-output validation")
{
  const RunResult result = tiny_run();
  const std::string path = temp_path("dwr_check.csv");
  emit_csv(result.records, path);
  CHECK(check_csv(path).ok);

  // tamper with a part: the five-part identity must fail
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  in.close();
  std::string text = buf.str();
  const auto pos = text.find('\n', text.find('\n') + 1); // end of first data row
  std::string row = text.substr(text.find('\n') + 1, pos - text.find('\n') - 1);
  // corrupt eta_h2 (4th column)
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : row)
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else
      cur += ch;
  fields.push_back(cur);
  fields[3] = "1.0e+00";
  std::string tampered = text.substr(0, text.find('\n') + 1);
  for (std::size_t i = 0; i < fields.size(); ++i)
    tampered += fields[i] + (i + 1 < fields.size() ? "," : "");
  tampered += text.substr(pos);
  std::ofstream(path) << tampered;
  const CheckResult bad = check_csv(path);
  CHECK_FALSE(bad.ok);
  CHECK(!bad.messages.empty());
  fs::remove(path);
}

TEST_CASE("rate fitting on synthetic power laws")
{
  std::vector<double> x, y1, y15;
  for (int i = 1; i <= 8; ++i) {
    const double xi = 100.0 * i * i;
    x.push_back(xi);
    y1.push_back(1.0 / xi);
    y15.push_back(std::pow(xi, -1.5));
  }
  CHECK(fit_rate(x, y1) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(fit_rate(x, y15) == doctest::Approx(-1.5).epsilon(1e-10));

  CHECK_THROWS_AS(fit_rate({1.0, 2.0, 3.0}, {1.0, 1.0, 1.0}), ConfigError);

  // non-positive values are excluded with a warning
  std::vector<double> ybad = y1;
  ybad[6] = 0.0;
  std::vector<std::string> warnings;
  const double slope = fit_rate(x, ybad, &warnings);
  CHECK(slope == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(warnings.size() == 1);
}

TEST_CASE("command line driver")
{
  const std::string cfg = temp_path("dwr_cli.cfg");
  const std::string csv = temp_path("dwr_cli.csv");
  {
    std::ofstream os(cfg);
    os << minimal_config << "[algorithm]\nmax_levels = 2\n[output]\ncsv = " << csv << "\n";
  }

  const char* run_args[] = {"dwrfem", "run", cfg.c_str()};
  CHECK(cli_main(3, run_args) == 0);
  CHECK(fs::exists(csv));
  CHECK(fs::exists(csv + ".manifest"));

  const char* check_args[] = {"dwrfem", "check", csv.c_str()};
  CHECK(cli_main(3, check_args) == 0);

  const char* missing_args[] = {"dwrfem", "run", "/nonexistent/missing.cfg"};
  CHECK(cli_main(3, missing_args) == 2);

  // sweep produces one CSV per mode
  const char* sweep_args[] = {"dwrfem", "sweep", cfg.c_str(), "--modes", "new,int"};
  CHECK(cli_main(5, sweep_args) == 0);
  const std::string base = csv.substr(0, csv.size() - 4);
  CHECK(fs::exists(base + ".new.csv"));
  CHECK(fs::exists(base + ".int.csv"));
  CHECK(!fs::exists(base + ".full.csv"));

  for (const auto& p : {csv, csv + ".manifest", base + ".new.csv", base + ".new.csv.manifest",
                        base + ".int.csv", base + ".int.csv.manifest", cfg})
    fs::remove(p);
}

TEST_CASE("mesh dumps are written every N levels")
{
  const std::string cfg = temp_path("dwr_dump.cfg");
  const std::string csv = temp_path("dwr_dump.csv");
  {
    std::ofstream os(cfg);
    os << minimal_config << "[algorithm]\nmax_levels = 4\n[output]\ncsv = " << csv << "\n";
  }
  const char* args[] = {"dwrfem", "run", cfg.c_str(), "--mesh-dump-every", "2"};
  CHECK(cli_main(5, args) == 0);
  const std::string base = csv.substr(0, csv.size() - 4);
  CHECK(fs::exists(base + ".level2.mesh"));
  CHECK(fs::exists(base + ".level4.mesh"));
  CHECK(!fs::exists(base + ".level3.mesh"));

  // the dump is parseable: v/c/b lines only
  std::ifstream is(base + ".level2.mesh");
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    REQUIRE(!line.empty());
    CHECK((line[0] == 'v' || line[0] == 'c' || line[0] == 'b'));
    ++n;
  }
  CHECK(n > 10);

  for (const auto& p : {cfg, csv, csv + ".manifest", base + ".level2.mesh", base + ".level4.mesh"})
    fs::remove(p);
}
