// Batch front-end: solve a single well, run a d-sweep with verification
// checks, or pretty-print an existing report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "dwell/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

dwell::RunConfig load_with_overrides(const std::string& config_path, const std::string& output,
                                     int jobs, const std::vector<std::string>& checks) {
    dwell::RunConfig cfg = dwell::load_config(config_path);
    if (!output.empty()) cfg.output_dir = output;
    if (jobs > 0) cfg.jobs = jobs;
    if (!checks.empty()) {
        for (const auto& c : checks)
            if (std::find(dwell::known_checks().begin(), dwell::known_checks().end(), c) ==
                dwell::known_checks().end())
                throw dwell::ConfigError("unknown check '" + c + "'");
        cfg.checks = checks;
    }
    return cfg;
}

int cmd_solve_single(const dwell::RunConfig& cfg, bool dry_run) {
    if (cfg.levels.empty()) {
        std::cout << "warning: empty levels list, nothing to solve\n";
        return 0;
    }
    if (dry_run) {
        const dwell::Grid g = dwell::build_grid(cfg.nu, 0.0, cfg.potential.a, cfg.kappa_min, cfg.h);
        std::cout << "plan: single-well solve, nu=" << cfg.nu << ", grid " << g.n[0];
        if (cfg.nu == 2) std::cout << " x " << g.n[1];
        std::cout << " nodes, k=" << *std::max_element(cfg.levels.begin(), cfg.levels.end()) + 1
                  << " eigenpairs -> " << cfg.output_dir << "/levels.csv (nothing written)\n";
        return 0;
    }
    const auto out = dwell::run_solve_single(cfg);
    fs::create_directories(cfg.output_dir);
    dwell::write_levels_csv(out, cfg.output_dir + "/levels.csv");
    int j = 1;
    for (const auto& p : out.pairs) {
        char line[160];
        std::snprintf(line, sizeof line, "  j=%d  e=% .12e  residual=%.2e  parity=%-5s  %s", j,
                      p.energy, p.residual, dwell::to_string(p.parity),
                      p.bound() ? "bound" : "not bound");
        std::cout << line << '\n';
        dwell::write_binary(p.vector, cfg.output_dir + "/phi_" + std::to_string(j) + ".bin");
        ++j;
    }
    std::cout << "wrote " << cfg.output_dir << "/levels.csv and " << out.pairs.size()
              << " wavefunction files\n";
    return 0;
}

int cmd_sweep(const dwell::RunConfig& cfg, bool dry_run) {
    if (dry_run) {
        std::cout << "plan: sweep over d in {";
        for (std::size_t i = 0; i < cfg.d_values.size(); ++i)
            std::cout << (i ? ", " : "") << cfg.d_values[i];
        std::cout << "}, levels {";
        for (std::size_t i = 0; i < cfg.levels.size(); ++i)
            std::cout << (i ? ", " : "") << cfg.levels[i];
        std::cout << "}, nu=" << cfg.nu << ", h=" << cfg.h << "\n";
        std::cout << "  per d: single + double well solves, hopping (3 formulas), splitting,\n"
                     "  two-level model, corrections, sigma_min; then verification checks\n";
        std::cout << "  outputs: " << cfg.output_dir << "/sweep.csv, " << cfg.output_dir
                  << "/report.json (nothing written)\n";
        return 0;
    }
    const auto out = dwell::run_sweep(cfg);
    fs::create_directories(cfg.output_dir);
    dwell::write_sweep_csv(out, cfg.output_dir + "/sweep.csv");
    dwell::write_report_json(out, cfg.output_dir + "/report.json");
    int passed = 0;
    for (const auto& c : out.checks) passed += c.pass;
    std::cout << "sweep complete: " << out.records.size() << " records, " << passed << "/"
              << out.checks.size() << " checks pass\n";
    for (const auto& c : out.checks)
        if (!c.pass)
            std::cout << "  FAIL " << c.name << ": measured " << c.measured << ", expected "
                      << c.expected << " (tol " << c.tolerance << ") " << c.detail << '\n';
    std::cout << "wrote " << cfg.output_dir << "/sweep.csv and report.json\n";
    return out.all_pass ? 0 : 1;
}

int cmd_verify(const std::string& report_path) {
    std::ifstream is(report_path);
    if (!is) {
        std::cerr << "error: cannot open report " << report_path << '\n';
        return 2;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: malformed report " << report_path << ": " << e.what() << '\n';
        return 2;
    }
    if (!j.contains("checks") || !j["checks"].is_array()) {
        std::cerr << "error: report has no checks array\n";
        return 2;
    }
    int total = 0, passed = 0;
    std::printf("%-34s %-6s %14s %14s %12s  %s\n", "check", "pass", "measured", "expected",
                "tolerance", "statement");
    for (const auto& c : j["checks"]) {
        const bool ok = c.value("pass", false);
        ++total;
        passed += ok;
        std::printf("%-34s %-6s %14.6e %14.6e %12.3e  %s\n", c.value("name", "?").c_str(),
                    ok ? "PASS" : "FAIL", c.value("measured", 0.0), c.value("expected", 0.0),
                    c.value("tolerance", 0.0), c.value("paper_ref", "").c_str());
    }
    if (passed == total) {
        std::printf("ALL CHECKS PASS (%d/%d)\n", passed, total);
        return 0;
    }
    std::printf("%d of %d checks FAILED\n", total - passed, total);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"double-well spectral laboratory: hopping coefficients, splittings, decay laws"};
    app.require_subcommand(1);

    std::string config_path, output, report_path;
    std::vector<std::string> checks;
    int jobs = 0;
    bool dry_run = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--output", output, "output directory (overrides config)");
        sub->add_option("--jobs", jobs, "parallel tasks (default: hardware concurrency)");
        sub->add_flag("--dry-run", dry_run, "print the task plan and write nothing");
    };

    CLI::App* solve = app.add_subcommand("solve-single", "solve the single well, write levels.csv");
    add_common(solve);

    CLI::App* sweep = app.add_subcommand("sweep", "run the d-sweep and verification checks");
    add_common(sweep);
    sweep->add_option("--checks", checks, "subset of checks to enable")->delimiter(',');

    CLI::App* verify = app.add_subcommand("verify", "summarize an existing report.json");
    verify->add_option("report", report_path, "path to report.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve_single(load_with_overrides(config_path, output, jobs, checks), dry_run);
        if (sweep->parsed()) return cmd_sweep(load_with_overrides(config_path, output, jobs, checks), dry_run);
        if (verify->parsed()) return cmd_verify(report_path);
    } catch (const dwell::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const dwell::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
