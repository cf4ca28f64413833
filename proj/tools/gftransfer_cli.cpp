#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "gftransfer/gftransfer.hpp"

namespace gt = gftransfer;

namespace {

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    gt::require(out.good(), gt::ErrorCode::IoError, "cannot write '" + path + "'");
    return out;
}

std::string sidecar_path(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    p.replace_extension();
    return p.string() + suffix;
}

struct RunArgs {
    std::string config;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    std::string trials_out;
};

int cmd_run(const RunArgs& args) {
    gt::ExperimentConfig cfg = gt::load_config(args.config);
    if (args.trials) cfg.trials = *args.trials;
    if (args.seed) cfg.seed = *args.seed;
    if (args.threads) cfg.threads = *args.threads;
    cfg.validate();

    const gt::ExperimentResult result = gt::run_experiment(cfg);
    if (args.out.empty()) {
        gt::write_results_csv(std::cout, result.rows);
    } else {
        std::ofstream out = open_output(args.out);
        gt::write_results_csv(out, result.rows);
        std::cout << gt::format_table(result.rows);
    }
    if (!args.trials_out.empty()) {
        std::ofstream out = open_output(args.trials_out);
        gt::write_trials_csv(out, result.trials);
    }
    for (const auto& row : result.rows)
        if (row.failed > 0)
            std::cerr << "warning: " << row.failed << " of " << (row.failed + row.trials) << " trials failed in "
                      << gt::to_string(row.cell.graph) << ' ' << gt::to_string(row.cell.perturbation) << ' '
                      << row.cell.size << '\n';
    return 0;
}

int cmd_table(const std::string& in_path) {
    std::ifstream in(in_path);
    gt::require(in.good(), gt::ErrorCode::IoError, "cannot open '" + in_path + "'");
    std::cout << gt::format_table(gt::read_results_csv(in));
    return 0;
}

struct DumpArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    gt::Index sample = 0;
    std::size_t trial = 0;
    std::size_t cell = 0;
    std::string out;
};

int cmd_dump(const DumpArgs& args) {
    gt::ExperimentConfig cfg = gt::load_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    const auto specs = gt::cells(cfg);
    gt::require(args.cell < specs.size(), gt::ErrorCode::IndexOutOfRange,
                "cell " + std::to_string(args.cell) + " outside [0, " + std::to_string(specs.size()) + ")");
    std::ofstream out = open_output(args.out);
    const gt::RecoveryDump dump = gt::dump_recovery(cfg, specs[args.cell], args.trial, args.sample, out);
    std::ofstream edges = open_output(sidecar_path(args.out, ".edges.csv"));
    gt::write_edges_csv(edges, dump.graph);
    std::printf("sample %lld: mse_noisy %.6g mse_armae %.6g mse_drw %.6g\n", static_cast<long long>(args.sample),
                dump.mse_noisy, dump.mse_armae, dump.mse_drw);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph signal recovery under topology change: experiment runner"};
    app.require_subcommand(1);

    RunArgs run;
    CLI::App* run_cmd = app.add_subcommand("run", "Run the Monte Carlo experiment described by a config file");
    run_cmd->add_option("--config", run.config, "Config file (key = value)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--trials", run.trials, "Trials per cell (overrides config)");
    run_cmd->add_option("--seed", run.seed, "Master seed (overrides config)");
    run_cmd->add_option("--threads", run.threads, "Worker threads, 0 = all cores (overrides config)");
    run_cmd->add_option("--out", run.out, "Results CSV; stdout when omitted");
    run_cmd->add_option("--trials-out", run.trials_out, "Per-trial CSV with diagnostics");

    std::string table_in;
    CLI::App* table_cmd = app.add_subcommand("table", "Print a results CSV as an aligned table");
    table_cmd->add_option("--in", table_in, "Results CSV")->required();

    DumpArgs dump;
    CLI::App* dump_cmd = app.add_subcommand("dump", "Write per-node recovery of one sample for plotting");
    dump_cmd->add_option("--config", dump.config, "Config file")->required()->check(CLI::ExistingFile);
    dump_cmd->add_option("--seed", dump.seed, "Master seed (overrides config)");
    dump_cmd->add_option("--sample", dump.sample, "Current-sample index")->required();
    dump_cmd->add_option("--trial", dump.trial, "Trial index within the cell");
    dump_cmd->add_option("--cell", dump.cell, "Cell index in config order (graphs x sizes)");
    dump_cmd->add_option("--out", dump.out, "Per-node CSV; edges go to <stem>.edges.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: UsageError: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*table_cmd) return cmd_table(table_in);
        if (*dump_cmd) return cmd_dump(dump);
    } catch (const gt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
