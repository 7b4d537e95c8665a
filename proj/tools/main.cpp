#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include "entryexit/cli.hpp"
#include "entryexit/errors.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw entryexit::ConfigError("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void emit(const std::string& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw entryexit::ConfigError("cannot open output file: " + out_path);
    out << payload;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace entryexit;

    CLI::App app{
        "Optimal entry/exit decision rules for a project under a GBM output "
        "price with implementation delay"};
    app.require_subcommand(1);

    std::string config_path, out_path, format;
    uint64_t seed = 1;
    long paths = 20000;
    double dt = 1e-3, tmax = 0.0;
    int grid = 2000;
    double pmin = 0.0, pmax = 0.0;
    int steps = 100;
    double override_pI2 = 0.0;
    bool has_override = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "parameter config (JSON)")
            ->required();
        cmd->add_option("--out", out_path, "write output to a file");
    };

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve for triggers and value");
    add_common(solve_cmd);
    solve_cmd->add_option("--format", format, "json|csv");

    CLI::App* table_cmd =
        app.add_subcommand("table", "tabulate G, H and the obstacles");
    add_common(table_cmd);
    table_cmd->add_option("--format", format, "csv|json");
    table_cmd->add_option("--pmin", pmin, "lowest price")->required();
    table_cmd->add_option("--pmax", pmax, "highest price")->required();
    table_cmd->add_option("--steps", steps, "row count minus one");

    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "Monte Carlo payoff of the solved rules");
    add_common(sim_cmd);
    sim_cmd->add_option("--seed", seed, "RNG seed");
    sim_cmd->add_option("--paths", paths, "number of paths");
    sim_cmd->add_option("--dt", dt, "time step");
    sim_cmd->add_option("--tmax", tmax, "horizon (0: truncation rule)");
    sim_cmd->add_option("--override-pI2", override_pI2,
                        "replace the upper entry trigger")
        ->each([&](const std::string&) { has_override = true; });

    CLI::App* verify_cmd = app.add_subcommand(
        "verify", "run the MC / FD / dominance / equivalence check suite");
    add_common(verify_cmd);
    verify_cmd->add_option("--seed", seed, "RNG seed");
    verify_cmd->add_option("--paths", paths, "number of paths");
    verify_cmd->add_option("--dt", dt, "time step");
    verify_cmd->add_option("--tmax", tmax, "horizon (0: truncation rule)");
    verify_cmd->add_option("--grid", grid, "finest FD node count");
    verify_cmd->add_option("--override-pI2", override_pI2,
                           "corrupt the upper entry trigger")
        ->each([&](const std::string&) { has_override = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        const ProjectParams params =
            cli::params_from_json_text(read_file(config_path));

        if (app.got_subcommand(solve_cmd)) {
            if (format.empty()) format = "json";
            emit(cli::render_solve(solve(params), format), out_path);
            return 0;
        }

        const SolveResult solved = solve(params);

        if (app.got_subcommand(table_cmd)) {
            if (format.empty()) format = "csv";
            if (std::holds_alternative<InfiniteValue>(solved))
                throw PreconditionError(
                    "table requires a finite-value problem (r > mu)");
            cli::TableOptions opts{pmin, pmax, steps};
            emit(cli::render_table(std::get<Solution>(solved), opts, format),
                 out_path);
            return 0;
        }

        if (app.got_subcommand(sim_cmd)) {
            if (std::holds_alternative<InfiniteValue>(solved))
                throw PreconditionError(
                    "simulate requires a finite-value problem (r > mu)");
            McConfig mc;
            mc.n_paths = paths;
            mc.dt = dt;
            mc.t_max = tmax;
            mc.seed = seed;
            emit(cli::render_simulate(
                     params, std::get<Solution>(solved), mc,
                     has_override ? std::optional<double>(override_pI2)
                                  : std::nullopt),
                 out_path);
            return 0;
        }

        if (app.got_subcommand(verify_cmd)) {
            cli::VerifyOptions opts;
            opts.mc.n_paths = paths;
            opts.mc.dt = dt;
            opts.mc.t_max = tmax;
            opts.mc.seed = seed;
            opts.mc.antithetic = true;
            opts.fd_nodes = grid;
            if (has_override) opts.override_pI2 = override_pI2;
            const cli::VerifyResult res = cli::run_verification(params, opts);
            emit(res.report, out_path);
            if (!res.all_pass) {
                std::cerr << "verification failed\n";
                return 4;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code_for(e);
    }
    return 1;
}
