#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("amc_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result sim(const std::string& args, const std::string& env = "") {
  const fs::path log = fs::temp_directory_path() / ("amc_cli_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = env + " \"" AMC_SIM_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

fs::path write_config(const fs::path& dir, const std::string& extra = "") {
  const fs::path p = dir / "mini.cfg";
  std::ofstream(p) << "[scenario]\nlabel = mini\nepisode_length = 600\n"
                      "[channel]\ntx_antennas = 8\nrx_antennas = 4\nrank = 1\n"
                      "[agent]\nbuffer_capacity = 200\nhidden = 8, 4\nsteps = 2\n"
                      "[sweep]\nspeeds_kmh = 3, 60\nranks = 1, 2, 3\nseeds = 1-2\nagents = olla, odl\n"
                   << extra;
  return p;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("missing config file exits 2 and names the path") {
  const auto r = sim("run -c /nonexistent/x.cfg -o " + scratch("missing").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("/nonexistent/x.cfg") != std::string::npos);
}

TEST_CASE("bad key exits 2 with line and key") {
  const fs::path dir = scratch("badkey");
  const fs::path cfg = write_config(dir, "[olla]\nstepp = 1\n");
  const auto r = sim("run -c " + cfg.string() + " -o " + dir.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("olla.stepp") != std::string::npos);
  CHECK(r.output.find(":18") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(sim("").code != 0);
  CHECK(sim("run").code != 0);
  CHECK(sim("--help").code == 0);
}

TEST_CASE("run writes one summary row and a full per-TTI log") {
  const fs::path dir = scratch("run");
  const fs::path cfg = write_config(dir);
  const auto r = sim("run -c " + cfg.string() + " -a odl -s 4 -o " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(r.output.find("Mbit/s") != std::string::npos);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(count_lines(summary) == 2);
  CHECK(summary.rfind("scenario,agent,seed,mean_tput,bler,gain_vs_olla\nmini,odl,4,", 0) == 0);
  CHECK(count_lines(slurp(dir / "tti_log.csv")) == 601);
  CHECK(fs::exists(dir / "effective.cfg"));
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = scratch("env");
  const fs::path cfg = write_config(dir);
  const fs::path out = dir / "from_env";
  const auto r = sim("run -c " + cfg.string() + " -a olla", "AMC_OUTPUT_DIR=" + out.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "summary.csv"));
}

TEST_CASE("reruns are byte-identical and effective.cfg reproduces them") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("rerun_c");
  const fs::path cfg = write_config(a);
  REQUIRE(sim("compare -c " + cfg.string() + " --seeds 1-3 -j 2 -o " + a.string()).code == 0);
  REQUIRE(sim("compare -c " + cfg.string() + " --seeds 1-3 -j 1 -o " + b.string()).code == 0);
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(count_lines(slurp(a / "summary.csv")) == 1 + 3 * 2);

  REQUIRE(sim("compare -c " + (a / "effective.cfg").string() + " -o " + c.string()).code == 0);
  CHECK(slurp(a / "summary.csv") == slurp(c / "summary.csv"));
  CHECK(slurp(a / "effective.cfg") == slurp(c / "effective.cfg"));
}

TEST_CASE("sweep writes a 6-row gain matrix with a zero olla column") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir);
  REQUIRE(sim("sweep -c " + cfg.string() + " -o " + dir.string()).code == 0);
  std::istringstream matrix(slurp(dir / "gain_matrix.csv"));
  std::string line;
  std::getline(matrix, line);
  CHECK(line == "speed_kmh,rank,seeds,olla_mean_gain,olla_wins,odl_mean_gain,odl_wins");
  int rows = 0;
  while (std::getline(matrix, line)) {
    ++rows;
    CHECK(line.find(",2,0.000000,0,") != std::string::npos);
  }
  CHECK(rows == 6);
  CHECK(count_lines(slurp(dir / "summary.csv")) == 1 + 6 * 2 * 2);
}

TEST_CASE("shipped default config parses through the cli") {
  const fs::path dir = scratch("default");
  const auto r = sim("compare -c " AMC_CONFIG_DIR "/default.cfg --seeds 5-1 -o " + dir.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("descending") != std::string::npos);
}
