// Drives the installed binary through std::system and checks the emitted
// artifacts. The binary path arrives in STOCA_CLI.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <catch2/catch_amalgamated.hpp>

namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("stoca-cli-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

RunResult run_cli(const std::string& args) {
  const char* bin = std::getenv("STOCA_CLI");
  REQUIRE(bin != nullptr);
  static int serial = 0;
  const fs::path out = work_dir() / ("out" + std::to_string(serial));
  const fs::path err = work_dir() / ("err" + std::to_string(serial));
  ++serial;
  const std::string cmd = std::string(bin) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Data rows only: no comment lines, no header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

const char* kRightMover =
    "# runs right forever\n"
    "start: q0\n"
    "halt: qh\n"
    "q0,_ -> q0,_,R\n";

}  // namespace

TEST_CASE("nilpotent exact row reproduces the two-sided chain identity") {
  const RunResult r = run_cli(
      "estimate --experiment nilpotent --rule constant:2 --eps 0.1 "
      "--n 4 --window 2 --exact");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.rfind("# stoca=0.1.0\n", 0) == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1);
  const auto& f = rows[0];
  REQUIRE(f.size() == 11);
  const double measured = std::stod(f[1]);
  const double bound = std::stod(f[3]);
  REQUIRE(measured == Catch::Approx(1.0 - 0.95 * 0.95).margin(1e-12));
  REQUIRE(bound == Catch::Approx(1.0 - 0.9 * 0.9).margin(1e-12));
  REQUIRE(measured <= bound);
  // Provenance travels on the row itself.
  REQUIRE(f[6] == "4");
  REQUIRE(f[7] == "2");
  REQUIRE(f[9] == "none");
  REQUIRE(f[10] == "0.1.0");
}

TEST_CASE("estimate finds the spreading state when none is given") {
  // The product rule's spreading symbol sits at index 1, not 0; the exact
  // distance to its Dirac point is small while the index-0 word never shows.
  const RunResult r = run_cli(
      "estimate --experiment spreading1d --rule product --eps 0.05 "
      "--n 6 --window 1 --exact");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("# zero_symbol=1\n") != std::string::npos);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1);
  REQUIRE(std::stod(rows[0][1]) < 0.5);

  // Rules without a spreading state demand an explicit symbol.
  const fs::path xr = work_dir() / "xor.rule";
  spit(xr,
       "alphabet: 0,1\n"
       "neighborhood: (0),(1)\n"
       "0 0 -> 0\n0 1 -> 1\n1 0 -> 1\n1 1 -> 0\n");
  const RunResult amb = run_cli(
      "estimate --experiment spreading1d --rule " + xr.string() +
      " --eps 0.05 --n 6 --window 1 --exact");
  REQUIRE(amb.exit_code == 2);
  REQUIRE(amb.err.find("zero-symbol") != std::string::npos);
}

TEST_CASE("identical config and seed give identical bytes") {
  const fs::path a = work_dir() / "a.csv";
  const fs::path b = work_dir() / "b.csv";
  const std::string common =
      "estimate --experiment spreading1d --rule product --eps 0.02,0.01 "
      "--n 24 --window 2 --zero-symbol 1 --samples 200 --trials 2 --seed 11";
  REQUIRE(run_cli(common + " --out " + a.string()).exit_code == 0);
  REQUIRE(run_cli(common + " --out " + b.string()).exit_code == 0);
  const std::string bytes = slurp(a);
  REQUIRE(bytes == slurp(b));
  REQUIRE(!bytes.empty());

  // The same options through a sectioned config file give the same bytes.
  const fs::path ini = work_dir() / "est.ini";
  spit(ini,
       "[estimate]\n"
       "experiment=spreading1d\n"
       "rule=product\n"
       "eps=0.02,0.01\n"
       "n=24\n"
       "window=2\n"
       "zero-symbol=1\n"
       "samples=200\n"
       "trials=2\n"
       "seed=11\n");
  const fs::path c = work_dir() / "c.csv";
  REQUIRE(run_cli("--config " + ini.string() + " estimate --out " + c.string())
              .exit_code == 0);
  REQUIRE(bytes == slurp(c));
}

TEST_CASE("stochastic subcommands refuse to run unseeded") {
  REQUIRE(run_cli("estimate --experiment spreading1d --rule product "
                  "--eps 0.01 --n 24 --samples 10 --trials 2")
              .exit_code != 0);
  REQUIRE(run_cli("percolation --eps 0.01 --trials 10").exit_code != 0);
  REQUIRE(run_cli("simulate --rule product --n 8 --init random").exit_code != 0);
  // Exact estimation draws nothing and needs no seed.
  REQUIRE(run_cli("estimate --experiment nilpotent --rule constant:2 "
                  "--eps 0.1 --n 3 --exact")
              .exit_code == 0);
}

TEST_CASE("empty sweeps, missing files and bad specs are config errors") {
  const RunResult empty =
      run_cli("estimate --experiment nilpotent --rule constant:2 --exact");
  REQUIRE(empty.exit_code != 0);
  REQUIRE(empty.err.find("--eps") != std::string::npos);
  REQUIRE(run_cli("tm-run --tm does-not-exist.tm --mode geometry").exit_code != 0);
  REQUIRE(run_cli("simulate --rule product --noise \"bogus(eps=1)\" --seed 1")
              .exit_code == 2);
  REQUIRE(run_cli("bounds --experiment unknown --eps 0.1").exit_code != 0);
}

TEST_CASE("embedded goldens appear on the CLI surface") {
  const fs::path tm = work_dir() / "rm.tm";
  spit(tm, kRightMover);

  const RunResult collide =
      run_cli("tm-run --tm " + tm.string() + " --mode collide --dt 5");
  REQUIRE(collide.exit_code == 0);
  const auto crow = csv_rows(collide.out);
  REQUIRE(crow.size() == 1);
  REQUIRE(crow[0] == std::vector<std::string>{"1", "1", "19", "19", "20", "21",
                                              "22", "23"});

  const fs::path halt = work_dir() / "ih.tm";
  spit(halt, "start: q0\nhalt: qh\nq0,_ -> qh,_,R\n");
  const RunResult geom =
      run_cli("tm-run --tm " + halt.string() + " --mode geometry");
  REQUIRE(geom.exit_code == 0);
  const auto grow = csv_rows(geom.out);
  REQUIRE(grow.size() == 1);
  REQUIRE(grow[0][0] == "1");   // halted
  REQUIRE(grow[0][1] == "1");   // machine steps
  REQUIRE(grow[0][2] == "3");   // cone height
  REQUIRE(grow[0][4] == "63");  // closed cone cell count

  const RunResult build = run_cli("tm-build --tm " + tm.string());
  REQUIRE(build.exit_code == 0);
  const auto manifest = nlohmann::json::parse(build.out);
  REQUIRE(manifest["alphabet_size"] == 18);
  REQUIRE(manifest["radius"] == 20);
  REQUIRE(manifest["speeds"]["outer"] == 5);
  REQUIRE(manifest["speeds"]["inner"] == 4);
  REQUIRE(manifest["symbols"].size() == 18);
  REQUIRE(manifest["symbols"][0]["class"] == "zero");
  REQUIRE(manifest["symbols"][1]["class"] == "star");

  const RunResult trace = run_cli("tm-run --tm " + tm.string() +
                                  " --mode trace --n 81 --steps 5 --every 5");
  REQUIRE(trace.exit_code == 0);
  const auto trows = csv_rows(trace.out);
  REQUIRE(trows.size() == 2);
  REQUIRE(trows[0][1] == "40:0 1:* 40:0");
  // After five steps the walls sit at exactly -25/-20/+20/+25 around the
  // star cell and the head has moved four cells right.
  REQUIRE(trows[1][1] ==
          "15:0 1:OL 4:B__ 1:IL 23:B__ 1:H_q0__ 15:B__ 1:IR 4:B__ 1:OR 15:0");
}

TEST_CASE("percolation and asymptotics emit reference values") {
  const RunResult perc = run_cli("percolation --eps 0.01 --trials 500 --seed 9");
  REQUIRE(perc.exit_code == 0);
  const auto prow = csv_rows(perc.out);
  REQUIRE(prow.size() == 1);
  const double estimate = std::stod(prow[0][1]);
  const double se = std::stod(prow[0][2]);
  const double bound = std::stod(prow[0][3]);
  REQUIRE(bound == Catch::Approx(46.0 / 73.0).epsilon(1e-12));
  REQUIRE(estimate >= bound - 3.0 * se);

  const RunResult gap =
      run_cli("asymptotics --check gap --big-c 18 --a 6 --c 20 --eps 0.0001");
  REQUIRE(gap.exit_code == 0);
  const auto grow = csv_rows(gap.out);
  REQUIRE(std::stod(grow[0][4]) == Catch::Approx(0.008327410117).epsilon(1e-9));
  REQUIRE(std::stod(grow[0][6]) == Catch::Approx(1.0).epsilon(0.05));

  const RunResult theta = run_cli("asymptotics --check theta --x 0.99999999");
  REQUIRE(theta.exit_code == 0);
  const auto trow = csv_rows(theta.out);
  REQUIRE(std::stod(trow[0][3]) == Catch::Approx(0.5).epsilon(0.01));
}

TEST_CASE("bound violations warn on stderr without failing the run") {
  // Watching the wrong symbol makes the measured distance huge on purpose.
  const RunResult r = run_cli(
      "estimate --experiment nilpotent --rule constant:2 --eps 0.1 --n 4 "
      "--window 1 --zero-symbol 1 --exact");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.err.find("warning:") != std::string::npos);
  REQUIRE(csv_rows(r.out).size() == 1);
}

TEST_CASE("simulate emits the noiseless orbit with symbol names") {
  const RunResult r = run_cli("simulate --rule product --n 8 --steps 2");
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 3);
  // All cells start at -1; squaring sends everything to +1 and keeps it there.
  for (int i = 1; i <= 8; ++i) {
    REQUIRE(rows[0][static_cast<std::size_t>(i)] == "-1");
    REQUIRE(rows[1][static_cast<std::size_t>(i)] == "1");
    REQUIRE(rows[2][static_cast<std::size_t>(i)] == "1");
  }

  const RunResult noisy = run_cli(
      "simulate --rule spreading:2 --n 16 --steps 4 "
      "--noise \"zero_range(p=0.3, q=0.1)\" --seed 21");
  REQUIRE(noisy.exit_code == 0);
  REQUIRE(csv_rows(noisy.out).size() == 5);
}
