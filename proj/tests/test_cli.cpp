#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sg/cli.hpp"

using namespace sg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tiny_run_config(const std::string& out_dir,
                            int checkpoint_cadence = 0) {
  std::ostringstream ss;
  ss << R"({
    "domain": {"kind": "box", "half_widths": [0.5, 0.5, 0.5]},
    "density": {"kind": "uniform"},
    "n": 8, "seed": 11, "dt": 0.01, "T": 0.05, "scheme": "rk2",
    "ot": {"tol": 1e-9},
    "quantize": {"tol": 1e-4},
    "output": {"directory": ")"
     << out_dir << R"(", "cadence": 1, "checkpoint_cadence": )"
     << checkpoint_cadence << "}\n}";
  return ss.str();
}

}  // namespace

TEST_CASE("help prints usage and exits cleanly") {
  std::string out;
  CHECK(cli({"--help"}, &out) == 0);
  CHECK(out.find("run") != std::string::npos);
  CHECK(out.find("decay-lab") != std::string::npos);
}

TEST_CASE("argument and config validation map to exit code 1") {
  std::string err;
  CHECK(cli({"run"}, nullptr, &err) == 1);  // --config is required
  CHECK_FALSE(err.empty());
  CHECK(cli({"frobnicate"}, nullptr, &err) == 1);
  CHECK(cli({"run", "--config", "/nonexistent/cfg.json"}, nullptr, &err) == 1);

  TempDir tmp("sg_cli_badcfg");
  write_file(tmp.file("bad.json"), "{\"dt\": 0.01}");
  CHECK(cli({"run", "--config", tmp.file("bad.json")}, nullptr, &err) == 1);
}

TEST_CASE("run produces the full output set and is deterministic") {
  TempDir tmp("sg_cli_run");
  const std::string out_a = tmp.file("a_out");
  const std::string out_b = tmp.file("b_out");
  write_file(tmp.file("a.json"), tiny_run_config(out_a));
  write_file(tmp.file("b.json"), tiny_run_config(out_b));

  REQUIRE(cli({"run", "--config", tmp.file("a.json")}) == 0);
  for (const char* f : {"trajectory.csv", "final_state.csv", "summary.csv",
                        "report.json", "checkpoint_final.json"})
    CHECK(fs::exists(fs::path(out_a) / f));

  REQUIRE(cli({"run", "--config", tmp.file("b.json")}) == 0);
  CHECK(read_file(out_a + "/trajectory.csv") ==
        read_file(out_b + "/trajectory.csv"));
  CHECK(read_file(out_a + "/final_state.csv") ==
        read_file(out_b + "/final_state.csv"));
}

TEST_CASE("resume reproduces the original tail bitwise") {
  TempDir tmp("sg_cli_resume");
  const std::string out_dir = tmp.file("run_out");
  write_file(tmp.file("run.json"), tiny_run_config(out_dir, 2));
  REQUIRE(cli({"run", "--config", tmp.file("run.json")}) == 0);
  const std::string cp = out_dir + "/checkpoint_000002.json";
  REQUIRE(fs::exists(cp));

  REQUIRE(cli({"run", "--config", tmp.file("run.json"), "--resume", cp}) == 0);
  const std::string resumed = read_file(out_dir + "/trajectory_resumed.csv");
  const std::string full = read_file(out_dir + "/trajectory.csv");
  REQUIRE_FALSE(resumed.empty());

  // every resumed row after the header must appear verbatim in the original
  std::istringstream rs(resumed);
  std::string header, line;
  std::getline(rs, header);
  std::size_t rows = 0;
  while (std::getline(rs, line)) {
    INFO(line);
    CHECK(full.find("\n" + line + "\n") != std::string::npos);
    ++rows;
  }
  CHECK(rows > 0);

  // a checkpoint from a different config is refused
  write_file(tmp.file("other.json"), tiny_run_config(tmp.file("other_out"), 0));
  std::string err;
  CHECK(cli({"run", "--config", tmp.file("other.json"), "--resume", cp},
            nullptr, &err) == 1);
}

TEST_CASE("ot-solve writes cells and a report") {
  TempDir tmp("sg_cli_ot");
  const std::string out_dir = tmp.file("ot_out");
  write_file(tmp.file("ot.json"), tiny_run_config(out_dir));
  REQUIRE(cli({"ot-solve", "--config", tmp.file("ot.json")}) == 0);
  CHECK(fs::exists(out_dir + "/cells.csv"));
  REQUIRE(fs::exists(out_dir + "/ot_report.json"));
  const Json rep = Json::parse(read_file(out_dir + "/ot_report.json"));
  CHECK(rep.at("residual").get<double>() <= 1e-9);
  CHECK(rep.at("iterations").get<int>() >= 0);
}

TEST_CASE("recover consumes a trajectory and writes residuals") {
  TempDir tmp("sg_cli_recover");
  const std::string run_out = tmp.file("run_out");
  write_file(tmp.file("run.json"), tiny_run_config(run_out));
  REQUIRE(cli({"run", "--config", tmp.file("run.json")}) == 0);

  const std::string rec_out = tmp.file("rec_out");
  REQUIRE(cli({"recover", "--config", tmp.file("run.json"), "--trajectory",
               run_out + "/trajectory.csv", "--out", rec_out}) == 0);
  CHECK(fs::exists(rec_out + "/eulerian.csv"));
  REQUIRE(fs::exists(rec_out + "/residuals.json"));
  const Json res = Json::parse(read_file(rec_out + "/residuals.json"));
  REQUIRE(res.at("members").is_array());
  for (const auto& m : res.at("members")) {
    CHECK(std::isfinite(m.at("sg2").get<double>()));
    CHECK(std::isfinite(m.at("sg1").get<double>()));
    CHECK(std::isfinite(m.at("change_of_variables_gap").get<double>()));
  }
}

TEST_CASE("decay-lab exit codes distinguish pass, fail and misuse") {
  TempDir tmp("sg_cli_decay");
  const std::string out_dir = tmp.file("decay_out");
  std::ostringstream good;
  good << R"({
    "field": {"kind": "rotation"},
    "density": {"kind": "gaussian", "sigma": 1.0},
    "bounds": ["sup-growth", "inf-decay"],
    "times": [0.1, 0.5],
    "samples": 300, "seed": 5,
    "output": {"directory": ")"
       << out_dir << "\"}\n}";
  write_file(tmp.file("good.json"), good.str());
  std::string out;
  CHECK(cli({"decay-lab", "--config", tmp.file("good.json")}, &out) == 0);
  CHECK(out.find("PASS") != std::string::npos);
  CHECK(fs::exists(out_dir + "/bounds.csv"));

  // tail bound on a Gaussian is inapplicable: validation error, code 1
  write_file(tmp.file("bad.json"), R"({
    "field": {"kind": "rotation"},
    "density": {"kind": "gaussian", "sigma": 1.0},
    "bounds": ["tail"], "times": [0.1], "samples": 100})");
  std::string err;
  CHECK(cli({"decay-lab", "--config", tmp.file("bad.json")}, nullptr, &err) ==
        1);
}

TEST_CASE("steady-check passes on a centroidal grid") {
  TempDir tmp("sg_cli_steady");
  const std::string out_dir = tmp.file("steady_out");
  std::ostringstream cfg;
  cfg << R"({
    "domain": {"kind": "box", "half_widths": [0.5, 0.5, 0.5]},
    "density": {"kind": "uniform"},
    "n": 27, "seed": 1, "dt": 0.01, "T": 0.05, "scheme": "rk2",
    "ot": {"tol": 1e-9},
    "quantize": {"grid_init": true},
    "output": {"directory": ")"
      << out_dir << "\"}\n}";
  write_file(tmp.file("steady.json"), cfg.str());
  std::string out;
  CHECK(cli({"steady-check", "--config", tmp.file("steady.json")}, &out) == 0);
  CHECK(out.find("PASS") != std::string::npos);
}

TEST_CASE("report renders a run report into CSV") {
  TempDir tmp("sg_cli_report");
  const std::string run_out = tmp.file("run_out");
  write_file(tmp.file("run.json"), tiny_run_config(run_out));
  REQUIRE(cli({"run", "--config", tmp.file("run.json")}) == 0);

  const std::string rep_out = tmp.file("rep_out");
  REQUIRE(cli({"report", "--input", run_out + "/report.json", "--out",
               rep_out}) == 0);
  CHECK_FALSE(fs::is_empty(rep_out));
  CHECK(cli({"report", "--input", tmp.file("absent.json"), "--out", rep_out}) ==
        1);
}
