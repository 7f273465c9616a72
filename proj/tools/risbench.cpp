// Experiment driver for the active-RIS ISAC energy-efficiency library.
// Subcommands: validate (config check), run (one optimization, trace file),
// sweep (Monte-Carlo parameter sweep, resumable results file), aggregate
// (per-point means for plotting). Exit codes: 0 ok, 1 config/usage error,
// 2 infeasible instance.

#include "CLI11.hpp"

#include "arisopt/bench.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_validate(const arisopt::SystemConfig& cfg) {
    std::cout << "config ok: m=" << cfg.m << " n=" << cfg.n << " k=" << cfg.k
              << " p_total=" << cfg.p_total_dbm << " dBm alpha=" << cfg.alpha
              << " a_max=" << cfg.a_max << " seed=" << cfg.seed << "\n";
    return 0;
}

int cmd_run(const arisopt::SystemConfig& cfg, const std::string& scheme_str,
            std::uint64_t trial, const std::string& out_path) {
    arisopt::Scheme scheme = arisopt::scheme_from_name(scheme_str);
    arisopt::ChannelSet ch = arisopt::generate_channels(cfg, trial);
    arisopt::RunResult res = arisopt::run_benchmark(cfg, ch, scheme);

    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot open trace file '" << out_path << "'\n";
        return 1;
    }
    arisopt::serialize_trace(res.trace, out);

    std::cout << "scheme=" << arisopt::scheme_name(res.scheme) << " trial=" << trial
              << " eta=" << res.metrics.ee << " bits/J/Hz"
              << " sum_rate=" << res.metrics.sum_rate << " bits/s/Hz"
              << " p_total=" << res.metrics.p_total << " W"
              << " iterations=" << res.iterations << " converged=" << (res.converged ? 1 : 0)
              << " trace=" << out_path << "\n";
    return 0;
}

int cmd_sweep(const arisopt::SystemConfig& cfg, const std::string& axis_str,
              const std::string& values_str, int trials, const std::string& schemes_str,
              const std::string& out_path, int jobs) {
    arisopt::SweepSpec spec;
    spec.axis = arisopt::axis_from_name(axis_str);
    for (const std::string& v : split_list(values_str)) spec.values.push_back(std::stod(v));
    spec.trials = trials;
    for (const std::string& s : split_list(schemes_str))
        spec.schemes.push_back(arisopt::scheme_from_name(s));

    arisopt::run_sweep(cfg, spec, out_path, jobs);
    std::size_t rows = spec.values.size() * spec.schemes.size() * static_cast<std::size_t>(trials);
    std::cout << "sweep complete: " << rows << " rows in " << out_path << "\n";
    return 0;
}

int cmd_aggregate(const std::string& results_path, const std::string& out_path) {
    std::vector<arisopt::ResultRow> rows = arisopt::read_result_rows(results_path);
    std::vector<arisopt::AggregateRow> agg = arisopt::aggregate_results(rows);
    if (out_path.empty()) {
        arisopt::write_aggregate(agg, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot open output file '" << out_path << "'\n";
            return 1;
        }
        arisopt::write_aggregate(agg, out);
        std::cout << "wrote " << agg.size() << " aggregate rows to " << out_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"active-RIS ISAC energy-efficiency experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string scheme_str = "ActiveEE";
    std::string axis_str;
    std::string values_str;
    std::string schemes_str = "ActiveEE,PassiveEE,SEMax,NoOpt";
    std::string results_path;
    std::uint64_t trial = 0;
    std::uint64_t seed_override = 0;
    int trials = 20;
    int jobs = 1;
    bool paper_exact = false;

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
    validate->add_option("--config", config_path, "INI config file")->required();

    CLI::App* run = app.add_subcommand("run", "run one optimization and write its trace");
    run->add_option("--config", config_path, "INI config file")->required();
    run->add_option("--scheme", scheme_str, "ActiveEE, PassiveEE, SEMax or NoOpt");
    run->add_option("--trial", trial, "Monte-Carlo trial index (changes the channel draw)");
    run->add_option("--out", out_path, "trace CSV path")->default_val("trace.csv");
    CLI::Option* run_seed = run->add_option("--seed-override", seed_override, "replace the config seed");
    run->add_flag("--paper-exact-prop1", paper_exact,
                  "use the verbatim eigenvalue shortcut formulas (no safety margin)");

    CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter axis");
    sweep->add_option("--config", config_path, "INI config file")->required();
    sweep->add_option("--axis", axis_str, "N, tau_k_db, tau_r, a_max or alpha")->required();
    sweep->add_option("--values", values_str, "comma-separated axis values, increasing")->required();
    sweep->add_option("--trials", trials, "Monte-Carlo trials per point");
    sweep->add_option("--schemes", schemes_str, "comma-separated scheme list");
    sweep->add_option("--out", out_path, "results CSV path (resumable)")->default_val("results.csv");
    sweep->add_option("--jobs", jobs, "worker threads");
    CLI::Option* sweep_seed = sweep->add_option("--seed-override", seed_override, "replace the config seed");
    sweep->add_flag("--paper-exact-prop1", paper_exact,
                    "use the verbatim eigenvalue shortcut formulas (no safety margin)");

    CLI::App* aggregate = app.add_subcommand("aggregate", "mean/stderr table from a results file");
    aggregate->add_option("results", results_path, "results CSV from sweep")->required();
    aggregate->add_option("--axis", axis_str, "axis name (informational)");
    aggregate->add_option("--out", out_path, "output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (aggregate->parsed()) {
            if (!axis_str.empty()) arisopt::axis_from_name(axis_str);
            return cmd_aggregate(results_path, out_path);
        }

        arisopt::SystemConfig cfg = arisopt::load_config(config_path);
        if ((run->parsed() && run_seed->count() > 0) ||
            (sweep->parsed() && sweep_seed->count() > 0))
            cfg.seed = seed_override;
        if (paper_exact) cfg.paper_exact_prop1 = true;
        arisopt::validate_config(cfg);

        if (validate->parsed()) return cmd_validate(cfg);
        if (run->parsed()) return cmd_run(cfg, scheme_str, trial, out_path);
        if (sweep->parsed())
            return cmd_sweep(cfg, axis_str, values_str, trials, schemes_str, out_path, jobs);
    } catch (const arisopt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const arisopt::InitializationFailedError& e) {
        std::cerr << "infeasible (initialization): " << e.what() << "\n";
        return 2;
    } catch (const arisopt::InfeasibleError& e) {
        std::cerr << "infeasible (iteration " << e.iteration << "): " << e.what() << "\n";
        return 2;
    } catch (const arisopt::EmptyInputError& e) {
        std::cerr << "empty input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
