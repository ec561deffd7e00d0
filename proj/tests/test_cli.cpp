#include <catch2/catch_amalgamated.hpp>

#include <wrenchlab/io.hpp>
#include <wrenchlab/synth.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

using namespace wrenchlab;
using Catch::Approx;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  std::string cmd = std::string(WRENCHLAB_CLI_PATH) + " " + args +
                    " > cli_out.tmp 2> cli_err.tmp";
  int rc = std::system(cmd.c_str());
  CmdResult r;
  r.code = (rc == -1) ? -1 : WEXITSTATUS(rc);
  r.out = read_text_file("cli_out.tmp");
  return r;
}

void write_cross_polytope_csv(const std::string& path) {
  MatX W = MatX::Zero(6, 12);
  for (int i = 0; i < 6; ++i) {
    W(i, 2 * i) = 1.0;
    W(i, 2 * i + 1) = -1.0;
  }
  write_text_file(path, wrenches_to_csv(W));
}

const char* kGraspJson = R"({
  "schema": 1,
  "friction": {"mu": 0.5, "n_sides": 4},
  "surface": {"kind": "sphere", "radius": 1.0},
  "field": {"kind": "constant", "sigma1_sq": 0.002, "sigma2_sq": 0.001},
  "contacts": [{"x": [1.2, 0, 0]}, {"x": [-1.1, 0.05, 0]},
               {"x": [0, 1.3, 0.1]}, {"x": [0.1, -1.2, -0.1]}]
})";

const char* kOpenGraspJson = R"({
  "schema": 1,
  "friction": {"mu": 0.3, "n_sides": 4},
  "contacts": [{"x": [0, 0, -1], "n_bar": [0, 0, 1]},
               {"x": [0.1, 0, -1], "n_bar": [0, 0, 1]}]
})";

const char* kProblemJson = R"({
  "schema": 1,
  "surface": {"kind": "sphere", "radius": 1.0},
  "field": {"kind": "constant", "sigma1_sq": 1e-3, "sigma2_sq": 1e-3},
  "friction": {"mu": 0.5, "n_sides": 4},
  "n_f": 3,
  "objective": "l_fc",
  "separation": 1e-3
})";

} // namespace

TEST_CASE("metrics on the cross-polytope CSV reports the exact ball",
          "[cli]") {
  write_cross_polytope_csv("cli_cross.csv");
  CmdResult r = run_cli("metrics --in cli_cross.csv");
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  REQUIRE(j["schema"] == 1);
  REQUIRE(j["force_closure"] == true);
  REQUIRE(j["epsilon"].get<double>() == Approx(0.4082483).margin(1e-6));
  REQUIRE(j["delta"].get<double>() == Approx(0.4082483).margin(1e-6));
  REQUIRE(j["l_star"].get<double>() == Approx(1.0 / 12.0).margin(1e-9));
  REQUIRE(j["bound_holds"] == true);
  REQUIRE_FALSE(j.contains("l_fc")); // no --pong on raw wrenches
  REQUIRE(j["fingerprint"].get<std::string>().size() == 16);
}

TEST_CASE("metrics exit codes: closure 0, no closure 2, error 1", "[cli]") {
  write_text_file("cli_grasp.json", kGraspJson);
  write_text_file("cli_open.json", kOpenGraspJson);
  REQUIRE(run_cli("metrics --in cli_grasp.json").code == 0);
  CmdResult open = run_cli("metrics --in cli_open.json");
  REQUIRE(open.code == 2);
  REQUIRE(Json::parse(open.out)["force_closure"] == false);
  REQUIRE(run_cli("metrics --in cli_no_such_file.json").code == 1);
  write_text_file("cli_bad.json", "{\"schema\": 3}");
  REQUIRE(run_cli("metrics --in cli_bad.json").code == 1);
  // --pong and --mc are contact-spec features; raw CSV input rejects them.
  write_cross_polytope_csv("cli_cross.csv");
  REQUIRE(run_cli("metrics --in cli_cross.csv --pong").code == 1);
}

TEST_CASE("metrics with --pong and --mc reports bound and estimate", "[cli]") {
  write_text_file("cli_grasp.json", kGraspJson);
  CmdResult r = run_cli("metrics --in cli_grasp.json --pong --mc 500 --seed 3");
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  double l = j["l_fc"].get<double>();
  REQUIRE(l > 0.0);
  REQUIRE(l <= 1.0);
  REQUIRE(j["mc"]["n_samples"] == 500);
  double p = j["mc"]["p_hat"].get<double>();
  REQUIRE(l <= p + 3.0 * j["mc"]["std_err"].get<double>() + 1e-12);
}

TEST_CASE("every command is byte-deterministic across reruns", "[cli]") {
  write_text_file("cli_grasp.json", kGraspJson);
  write_text_file("cli_problem.json", kProblemJson);
  const char* cmds[] = {
      "metrics --in cli_grasp.json --pong --mc 400 --seed 9",
      "verify bound --trials 10 --seed 7",
      "pong --in cli_grasp.json --mc 400 --seed 2",
      "synth --in cli_problem.json --sweep 2 --seed 13 --iters 3 --mc 200",
  };
  for (const char* c : cmds) {
    CmdResult a = run_cli(c);
    CmdResult b = run_cli(c);
    INFO(c);
    REQUIRE(a.code == b.code);
    REQUIRE_FALSE(a.out.empty());
    REQUIRE(a.out == b.out);
  }
}

TEST_CASE("verify passes its corpora and honors the exit contract", "[cli]") {
  for (const char* th : {"containment", "ball", "bound", "duality"}) {
    CmdResult r = run_cli(std::string("verify ") + th +
                          " --trials 25 --seed 1");
    INFO(th);
    REQUIRE(r.code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["theorem"] == th);
    REQUIRE(j["trials"] == 25);
    REQUIRE(j["passes"] == 25);
    REQUIRE(j["failures"] == 0);
    REQUIRE_FALSE(j.contains("first_counterexample"));
  }
  CmdResult pong = run_cli("verify pong --trials 5 --seed 4 --mc 2000");
  REQUIRE(pong.code == 0);
  REQUIRE(Json::parse(pong.out)["passes"] == 5);
  // Usage errors: zero trials and unknown theorem names.
  REQUIRE(run_cli("verify bound --trials 0 --seed 1").code == 1);
  REQUIRE(run_cli("verify fermat --trials 5 --seed 1").code == 1);
}

TEST_CASE("pong reports per-finger detail and omits MC when asked", "[cli]") {
  write_text_file("cli_grasp.json", kGraspJson);
  CmdResult with = run_cli("pong --in cli_grasp.json --mc 500 --seed 1");
  REQUIRE(with.code == 0);
  Json j = Json::parse(with.out);
  REQUIRE(j["fingers"].size() == 4);
  double prod = 1.0;
  for (const Json& f : j["fingers"]) {
    REQUIRE(f["polygon"].size() == f["theta"].size());
    REQUIRE(f["polygon"].size() >= 3);
    prod *= f["probability"].get<double>();
    REQUIRE(f.contains("mc_mass"));
    // The quadrature mass agrees with its own Monte Carlo cross-check.
    double se = f["mc_mass"]["std_err"].get<double>();
    REQUIRE(f["probability"].get<double>() ==
            Approx(f["mc_mass"]["p_hat"].get<double>()).margin(4 * se + 1e-3));
  }
  REQUIRE(j["l_fc"].get<double>() == Approx(prod).epsilon(1e-12));
  REQUIRE(j.contains("mc"));

  CmdResult without = run_cli("pong --in cli_grasp.json --mc 0");
  REQUIRE(without.code == 0);
  Json j0 = Json::parse(without.out);
  REQUIRE_FALSE(j0.contains("mc"));
  for (const Json& f : j0["fingers"]) REQUIRE_FALSE(f.contains("mc_mass"));
  // The bound itself does not depend on the MC switch.
  REQUIRE(j0["l_fc"].get<double>() == j["l_fc"].get<double>());
}

TEST_CASE("synth sweep CSV shape, --out copy, and single-run equality",
          "[cli]") {
  write_text_file("cli_problem.json", kProblemJson);
  CmdResult r = run_cli(
      "synth --in cli_problem.json --sweep 3 --seed 21 --iters 2 --mc 100 "
      "--out cli_sweep.csv");
  REQUIRE(r.code == 0);
  REQUIRE(std::count(r.out.begin(), r.out.end(), '\n') == 4); // header + 3
  REQUIRE(r.out.rfind(sweep_csv_header, 0) == 0);
  REQUIRE(read_text_file("cli_sweep.csv") == r.out);

  // --sweep 1 reproduces the library's sweep of one grasp byte for byte.
  CmdResult one = run_cli(
      "synth --in cli_problem.json --sweep 1 --seed 21 --iters 2 --mc 100");
  ProblemSpec spec = problem_from_json(Json::parse(kProblemJson));
  std::vector<SweepRow> rows = sweep(spec.problem, 1, 21, 2, 100);
  REQUIRE(one.out == sweep_to_csv(rows));
  // ...and that one grasp is exactly a single synthesize call.
  SynthResult single = synthesize(spec.problem, CounterRng::mix(21, 0), 2);
  REQUIRE(rows[0].synth.contacts.size() == single.contacts.size());
  for (std::size_t i = 0; i < single.contacts.size(); ++i)
    REQUIRE(rows[0].synth.contacts[i].x == single.contacts[i].x);

  REQUIRE(run_cli("synth --in cli_problem.json --sweep 0").code == 1);
  REQUIRE(run_cli("synth --in cli_no_such.json").code == 1);
}
