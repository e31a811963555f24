// Command-line front end: solve single configs, audit stored records,
// run the bounded-ratio and gradient-regularity sweeps, and recompute norm
// tables on stored fields.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "obskit/experiment.hpp"

namespace fs = std::filesystem;

namespace {

obskit::Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return obskit::Json::parse(in);
}

void write_file(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"obstacle-problem solver suite and verification harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", record_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "problem config (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--jobs", jobs, "concurrent sweep rows");
    };

    CLI::App* solve = app.add_subcommand("solve", "run one configured problem");
    add_common(solve);

    CLI::App* verify = app.add_subcommand("verify", "re-run a record and audit its invariants");
    verify->add_option("--record", record_dir, "record directory")->required();

    CLI::App* sweep_cz = app.add_subcommand("sweep-cz", "bounded-ratio evidence sweep");
    add_common(sweep_cz);

    CLI::App* sweep_holder =
        app.add_subcommand("sweep-holder", "gradient Hoelder-seminorm sweep");
    add_common(sweep_holder);

    CLI::App* norms = app.add_subcommand("norms", "standalone norm table on stored fields");
    norms->add_option("--record", record_dir, "record directory")->required();
    norms->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            obskit::ProblemConfig config = obskit::ProblemConfig::parse(load_json(config_path));
            if (seed_set) config.seed = seed;
            obskit::RunResult r = obskit::run_and_write(config, out_dir);
            std::cout << r.provenance << "\n"
                      << "record: " << (fs::path(out_dir) / "record.json").string() << "\n"
                      << "stages " << r.report.outer_iters << ", picard " << r.report.inner_iters
                      << ", fp residual " << obskit::format_value(r.report.fixed_point_residual)
                      << "\n"
                      << "residuals: obstacle "
                      << obskit::format_value(r.report.complementarity.obstacle) << ", equation "
                      << obskit::format_value(r.report.complementarity.equation) << ", product "
                      << obskit::format_value(r.report.complementarity.product) << "\n";
        } else if (verify->parsed()) {
            bool ok = obskit::verify_record(record_dir, std::cout);
            return ok ? 0 : 1;
        } else if (sweep_cz->parsed()) {
            obskit::Json cfg = load_json(config_path);
            if (seed_set) cfg["base"]["seed"] = seed;
            std::string csv = obskit::sweep_cz_ratio(cfg, jobs);
            write_file(fs::path(out_dir) / "cz_sweep.csv", csv);
            std::cout << csv;
        } else if (sweep_holder->parsed()) {
            obskit::Json cfg = load_json(config_path);
            if (seed_set) cfg["base"]["seed"] = seed;
            std::string csv = obskit::sweep_holder(cfg, jobs);
            write_file(fs::path(out_dir) / "holder_sweep.csv", csv);
            std::cout << csv;
        } else if (norms->parsed()) {
            std::string csv = obskit::norms_on_record(record_dir);
            write_file(fs::path(out_dir) / "norms_standalone.csv", csv);
            std::cout << csv;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
