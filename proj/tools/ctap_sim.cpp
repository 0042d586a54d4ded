// ctap-sim: run experiments, the validation suite, or print rate tables.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctap/common.hpp"
#include "ctap/experiments/acceptance.hpp"
#include "ctap/experiments/config.hpp"
#include "ctap/experiments/experiments.hpp"

namespace ex = ctap::experiments;

namespace {

int cmd_run(const std::string& path, const std::vector<std::string>& overrides, int jobs, const std::string& out) {
    ex::Json doc = ex::load_json_file(path);
    for (const auto& o : overrides) ex::apply_override(doc, o);
    const ex::ExperimentConfig cfg = ex::ExperimentConfig::from_json(doc);
    ex::RunOptions options;
    options.jobs = jobs;
    if (!out.empty()) options.directory = out;
    const ex::RunSummary summary = ex::run(cfg, options);
    std::printf("%s: config %s, %.2f s\n", cfg.experiment.c_str(), cfg.hash().c_str(), summary.seconds);
    for (const auto& f : summary.files) std::printf("  wrote %s\n", f.c_str());
    return 0;
}

int cmd_validate(const std::string& only, double dt_scale) {
    ex::AcceptanceOptions options;
    if (!only.empty()) options.only = only;
    options.dt_scale = dt_scale;
    const auto results = ex::run_acceptance(options);
    const bool ok = ex::print_report(results, std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return ok ? 0 : 1;
}

int cmd_rates(const std::string& path, int max_separation) {
    const ex::Json doc = ex::load_json_file(path);
    const ex::Json& geometry = doc.contains("geometry") ? doc["geometry"] : doc;
    const ex::ResultTable table = ex::rates_table(ex::geometry_from_json(geometry), max_separation);
    std::cout << table.to_csv();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CTAP transport simulator with measurement and TLS dephasing"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    int jobs = 0;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--set", overrides, "Override a field, e.g. --set geometry.alpha=0.04");
    run->add_option("--jobs", jobs, "Worker threads (default: CTAP_SIM_JOBS or all cores)")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory (overrides output.directory)");

    std::string only;
    double dt_scale = 1.0;
    auto* validate = app.add_subcommand("validate", "Run the acceptance suite");
    validate->add_option("--only", only, "Group name or criterion number");
    validate->add_option("--dt-scale", dt_scale, "Multiply every integrator step (fault injection)")
        ->check(CLI::PositiveNumber);

    std::string geometry_path;
    int max_separation = 30;
    auto* rates = app.add_subcommand("rates", "Print the T_kl table for a geometry");
    rates->add_option("--geometry", geometry_path, "Geometry JSON (object or config with a geometry field)")
        ->required()
        ->check(CLI::ExistingFile);
    rates->add_option("--max-separation", max_separation, "Largest |k-l| to tabulate")->check(CLI::NonNegativeNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, overrides, jobs, out_dir);
        if (*validate) return cmd_validate(only, dt_scale);
        if (*rates) return cmd_rates(geometry_path, max_separation);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ctap-sim: %s\n", e.what());
        return 2;
    }
    return 0;
}
