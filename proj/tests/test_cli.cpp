#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "entryexit/cli.hpp"
#include "entryexit/errors.hpp"
#include "testutil.hpp"

using nlohmann::json;
using namespace entryexit;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string out = "/tmp/ee_cli_out_" + std::to_string(counter);
    const std::string err = "/tmp/ee_cli_err_" + std::to_string(counter);
    ++counter;
    const std::string cmd = std::string(ENTRYEXIT_CLI_PATH) + " " + args +
                            " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::remove(out.c_str());
    std::remove(err.c_str());
    return r;
}

std::string write_config(const std::string& body) {
    static int counter = 0;
    const std::string path = "/tmp/ee_cfg_" + std::to_string(counter++) + ".json";
    std::ofstream out(path);
    out << body;
    return path;
}

const char* kGolden =
    R"({"r":0.2,"mu":0.1,"sigma":0.3,"delta":1.0,"C":10.0,"K_I":-20.0,"K_O":10.0,"p0":3.0})";

}  // namespace

TEST_CASE("solve: golden config emits the published triggers") {
    const std::string cfg = write_config(kGolden);
    const RunResult r = run_cli("solve --config " + cfg);
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("regime") == "VI_DoubleEntry_Exit");
    CHECK(std::abs(j.at("p_O").get<double>() - 2.66841) < 1e-4);
    CHECK(std::abs(j.at("p_I1").get<double>() - 1.96101) < 1e-4);
    CHECK(std::abs(j.at("p_I2").get<double>() - 6.94641) < 1e-4);
    std::remove(cfg.c_str());
}

TEST_CASE("solve: r <= mu reports the infinite-value regime with exit 0") {
    const std::string cfg = write_config(
        R"({"r":0.1,"mu":0.2,"sigma":0.3,"delta":1.0,"C":10.0,"K_I":-20.0,"K_O":10.0,"p0":3.0})");
    const RunResult r = run_cli("solve --config " + cfg);
    CHECK(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("regime") == "InfiniteValue");
    CHECK(!j.contains("J_at_p0"));
    std::remove(cfg.c_str());
}

TEST_CASE("solve: invalid sigma exits 2 and names the field") {
    const std::string cfg = write_config(
        R"({"r":0.2,"mu":0.1,"sigma":0.0,"delta":1.0,"C":10.0,"K_I":-20.0,"K_O":10.0,"p0":3.0})");
    const RunResult r = run_cli("solve --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("sigma") != std::string::npos);
    std::remove(cfg.c_str());
}

TEST_CASE("solve: unknown config keys are rejected") {
    const std::string cfg = write_config(
        R"({"r":0.2,"mu":0.1,"sigma":0.3,"delta":1.0,"C":10.0,"K_I":-20.0,"K_O":10.0,"p0":3.0,"extra":1})");
    const RunResult r = run_cli("solve --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("extra") != std::string::npos);
    std::remove(cfg.c_str());
}

TEST_CASE("solve: missing config file exits 2") {
    const RunResult r = run_cli("solve --config /tmp/ee_does_not_exist.json");
    CHECK(r.exit_code == 2);
}

TEST_CASE("solve: csv format carries the same numbers") {
    const std::string cfg = write_config(kGolden);
    const RunResult r = run_cli("solve --config " + cfg + " --format csv");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("regime") != std::string::npos);
    CHECK(r.out.find("VI_DoubleEntry_Exit") != std::string::npos);
    CHECK(r.out.find("2.66841146") != std::string::npos);
    std::remove(cfg.c_str());
}

TEST_CASE("table: single row when the price range collapses") {
    const std::string cfg = write_config(kGolden);
    const RunResult r =
        run_cli("table --config " + cfg + " --pmin 3 --pmax 3 --steps 50");
    REQUIRE(r.exit_code == 0);
    int lines = 0;
    for (char c : r.out) lines += c == '\n';
    CHECK(lines == 2);  // header + one row
    std::remove(cfg.c_str());
}

TEST_CASE("table: rows are continuous and re-parse to solver values") {
    const std::string cfg = write_config(kGolden);
    const RunResult r =
        run_cli("table --config " + cfg + " --pmin 1 --pmax 10 --steps 400");
    REQUIRE(r.exit_code == 0);

    const Solution sol = std::get<Solution>(solve(testutil::golden()));
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "p,G,H,exit_obstacle,entry_obstacle");
    double prev_G = 0, prev_H = 0, prev_p = 0;
    bool first = true;
    // local slope bound on [1,10]: |G'| <= 1/(r-mu), |H'| likewise O(10)
    const double lip = 25.0;
    while (std::getline(in, line)) {
        double p, G, H, xo, eo;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &p, &G, &H, &xo,
                            &eo) == 5);
        // 9 significant digits in, values match fresh evaluations
        CHECK(std::abs(G - sol.exit.value(p)) <=
              1e-7 * std::max(1.0, std::abs(G)));
        CHECK(std::abs(H - sol.entry.value(p)) <=
              1e-7 * std::max(1.0, std::abs(H)));
        if (!first) {
            const double dp = p - prev_p;
            CHECK(std::abs(G - prev_G) <= lip * dp + 1e-9);
            CHECK(std::abs(H - prev_H) <= lip * dp + 1e-9);
        }
        first = false;
        prev_p = p;
        prev_G = G;
        prev_H = H;
    }
    std::remove(cfg.c_str());
}

TEST_CASE("table: infinite-value configs are rejected") {
    const std::string cfg = write_config(
        R"({"r":0.1,"mu":0.2,"sigma":0.3,"delta":1.0,"C":10.0,"K_I":-20.0,"K_O":10.0,"p0":3.0})");
    const RunResult r =
        run_cli("table --config " + cfg + " --pmin 1 --pmax 2 --steps 5");
    CHECK(r.exit_code == 2);
    std::remove(cfg.c_str());
}

TEST_CASE("simulate: quick run emits an outcome consistent with the value") {
    const std::string cfg = write_config(kGolden);
    const RunResult r = run_cli("simulate --config " + cfg +
                                " --paths 2000 --dt 0.002 --seed 9");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    const double mean = j.at("outcome").at("mean").get<double>();
    const double se = j.at("outcome").at("std_error").get<double>();
    const double J = j.at("J_at_p0").get<double>();
    CHECK(std::abs(mean - J) <= std::max(4.0 * se, 0.05 * std::abs(J)));
    std::remove(cfg.c_str());
}

TEST_CASE("simulate: deterministic for a fixed seed") {
    const std::string cfg = write_config(kGolden);
    const std::string args =
        "simulate --config " + cfg + " --paths 500 --dt 0.005 --seed 4";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    std::remove(cfg.c_str());
}

TEST_CASE("--out writes the payload to a file") {
    const std::string cfg = write_config(kGolden);
    const std::string out = "/tmp/ee_solve_payload.json";
    const RunResult r = run_cli("solve --config " + cfg + " --out " + out);
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty());
    const json j = json::parse(slurp(out));
    CHECK(j.at("regime") == "VI_DoubleEntry_Exit");
    std::remove(cfg.c_str());
    std::remove(out.c_str());
}

TEST_CASE("exit-code mapping covers the convergence class") {
    CHECK(cli::exit_code_for(ConvergenceError("x")) == 3);
    CHECK(cli::exit_code_for(DomainError("x")) == 2);
    CHECK(cli::exit_code_for(ConfigError("x")) == 2);
    CHECK(cli::exit_code_for(MissingTriggerError("x")) == 2);
    CHECK(cli::exit_code_for(PreconditionError("x")) == 2);
    CHECK(cli::exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("verify: default budgets pass on the running example") {
    const std::string cfg = write_config(kGolden);
    const RunResult r = run_cli("verify --config " + cfg +
                                " --paths 4000 --dt 0.002 --grid 1200 --seed 2");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("all_pass") == true);
    CHECK(j.at("checks").size() >= 6);
    std::remove(cfg.c_str());
}

TEST_CASE("verify: byte-identical report for a fixed seed") {
    const std::string cfg = write_config(kGolden);
    const std::string args = "verify --config " + cfg +
                             " --paths 1000 --dt 0.005 --grid 600 --seed 12";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    CHECK(a.out == b.out);
    std::remove(cfg.c_str());
}

TEST_CASE("verify: corrupted upper trigger fails dominance with exit 4") {
    const std::string cfg = write_config(kGolden);
    const RunResult r =
        run_cli("verify --config " + cfg +
                " --paths 3000 --dt 0.002 --grid 800 --seed 2 --override-pI2 9.5");
    CHECK(r.exit_code == 4);
    const json j = json::parse(r.out);
    CHECK(j.at("all_pass") == false);
    bool dominance_failed = false;
    for (const auto& c : j.at("checks"))
        if (c.at("name") == "dominance" && c.at("pass") == false)
            dominance_failed = true;
    CHECK(dominance_failed);
    std::remove(cfg.c_str());
}
