#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kBin = QUADRATURA_BIN;
const std::string kData = QUADRATURA_DATA;

struct Run {
  int code;
  std::string output;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kBin + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("quadratura_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file(const char* name) { return kData + "/" + name; }

}  // namespace

TEST_CASE("check passes on the two-quadrature example") {
  const auto dir = scratch("check");
  const auto r = run("check " + file("example.qp") + " example --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "check.txt"));
  CHECK(slurp(dir / "check.jsonl").find("\"seed\"") != std::string::npos);
}

TEST_CASE("check reports negative results with exit code 1") {
  const auto dir = scratch("check_neg");
  auto r = run("check " + file("dependent.qp") + " flat --out " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("FAIL independence") != std::string::npos);
  r = run("check " + file("example.qp") + " nonone --out " + dir.string());
  CHECK(r.code == 1);
}

TEST_CASE("usage and parse errors exit with code 2") {
  const auto dir = scratch("usage");
  CHECK(run("check " + file("unresolved.qp") + " lost --out " + dir.string()).code == 2);
  CHECK(run("check " + file("example.qp") + " missing --out " + dir.string()).code == 2);
  CHECK(run("check /nonexistent.qp example").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("check " + file("example.qp") + " example --box 1,2 --out " + dir.string()).code == 2);
  CHECK(run("check " + file("example.qp") + " example --out " + dir.string(), "QUADRATURA_SEED=abc").code == 2);
}

TEST_CASE("reduce writes the normal form and trace") {
  const auto dir = scratch("reduce");
  const auto r = run("reduce " + file("example.qp") + " inflated --out " + dir.string());
  CHECK(r.code == 0);
  const auto trace = slurp(dir / "trace.txt");
  const auto first = trace.find("step-A-case1");
  const auto second = trace.find("step-A-case2");
  CHECK(first != std::string::npos);
  CHECK(second != std::string::npos);
  CHECK(first < second);
  CHECK(trace.find("terminal-2quad") != std::string::npos);
  CHECK(slurp(dir / "normalform.txt").find("q = x") != std::string::npos);
  CHECK(fs::exists(dir / "equivalence.txt"));
  CHECK(fs::exists(dir / "trace.jsonl"));
}

TEST_CASE("reduce failure exits 1 with the partial trace") {
  const auto dir = scratch("reduce_fail");
  const auto r = run("reduce " + file("example.qp") + " nonone --out " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.output.find("Fundamental-Equality structure absent") != std::string::npos);
  CHECK(fs::exists(dir / "trace.txt"));
}

TEST_CASE("machine-readable output is deterministic") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  CHECK(run("reduce " + file("example.qp") + " inflated --out " + a.string()).code == 0);
  CHECK(run("reduce " + file("example.qp") + " inflated --out " + b.string()).code == 0);
  CHECK(slurp(a / "trace.jsonl") == slurp(b / "trace.jsonl"));
  CHECK(run("check " + file("example.qp") + " example --out " + a.string()).code == 0);
  CHECK(run("check " + file("example.qp") + " example --out " + b.string()).code == 0);
  CHECK(slurp(a / "check.jsonl") == slurp(b / "check.jsonl"));
  CHECK(run("prufer " + file("example.qp") + " ramp --out " + a.string()).code == 0);
  CHECK(run("prufer " + file("example.qp") + " ramp --out " + b.string()).code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "report.jsonl") == slurp(b / "report.jsonl"));
}

TEST_CASE("seed precedence: flag, then file, then environment") {
  const auto dir = scratch("seed");
  CHECK(run("check " + file("example.qp") + " example --out " + dir.string(), "QUADRATURA_SEED=99").code == 0);
  CHECK(slurp(dir / "check.jsonl").find("\"seed\":99") != std::string::npos);
  CHECK(run("check " + file("example.qp") + " example --seed 5 --out " + dir.string(), "QUADRATURA_SEED=99").code == 0);
  CHECK(slurp(dir / "check.jsonl").find("\"seed\":5") != std::string::npos);
  CHECK(run("check " + file("with_tolerances.qp") + " example --out " + dir.string(), "QUADRATURA_SEED=99").code == 0);
  CHECK(slurp(dir / "check.jsonl").find("\"seed\":42") != std::string::npos);
}

TEST_CASE("prufer emits the trajectory and the dichotomy report") {
  const auto dir = scratch("prufer");
  auto r = run("prufer " + file("example.qp") + " unit --grid 11 --out " + dir.string());
  CHECK(r.code == 0);
  const auto csv = slurp(dir / "trajectory.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "x,theta,logrho,u,du");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  CHECK(slurp(dir / "report.txt").find("witness deviation") != std::string::npos);

  CHECK(run("prufer " + file("example.qp") + " four --out " + dir.string()).code == 0);

  r = run("prufer " + file("example.qp") + " ramp --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(slurp(dir / "report.txt").find("obstruction determinant at (pi/4, pi/3) = -0.99999999999999") !=
        std::string::npos);
}

TEST_CASE("solve-linear and equiv") {
  const auto dir = scratch("linear");
  CHECK(run("solve-linear " + file("example.qp") + " ramp --out " + dir.string()).code == 0);
  CHECK(slurp(dir / "solution.csv").substr(0, 4) == "x,y\n");
  CHECK(run("equiv " + file("example.qp") + " example inflated --out " + dir.string()).code == 0);
  CHECK(run("equiv " + file("example.qp") + " example nonone --out " + dir.string()).code == 1);
}

TEST_CASE("global flags may follow the subcommand") {
  const auto dir = scratch("flags");
  const auto r = run("check " + file("example.qp") + " example --tol-ode 1e-11 --tol-constancy 1e-7 --grid 17 --out " +
                     dir.string());
  CHECK(r.code == 0);
  const auto jl = slurp(dir / "check.jsonl");
  CHECK(jl.find("\"ode_tol\":1e-11") != std::string::npos);
  CHECK(jl.find("\"grid\":17") != std::string::npos);
}
