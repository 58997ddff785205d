// mdflow: runs, convergence studies and property checks from the command line.

#include "mdflow/study.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Parses the config, printing the effective values. Returns nullopt after
// reporting an error.
std::optional<mdflow::StudyConfig> load(const std::string& path, bool echo) {
    try {
        mdflow::StudyConfig config = mdflow::parse_config(path);
        if (echo) std::cout << "# effective configuration\n" << mdflow::describe(config);
        return config;
    } catch (const mdflow::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return std::nullopt;
    }
}

int run_mode(const std::string& path, mdflow::StudyMode mode, bool quiet) {
    auto config = load(path, !quiet);
    if (!config) return mdflow::kExitConfig;
    try {
        const mdflow::StudyResult r = mdflow::run_study(*config, mode, std::cout);
        for (const auto& f : r.files) {
            if (!quiet) std::cout << "wrote " << f << '\n';
        }
        return r.exit_code;
    } catch (const mdflow::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mdflow::kExitConfig;
    } catch (const mdflow::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mdflow::kExitSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oseen flow on a domain moved by a prescribed velocity field"};
    app.require_subcommand(1);

    std::string run_path, study_path, info_path;
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Do not echo the configuration or list written files");

    auto* run = app.add_subcommand("run", "Run one trajectory per time step size");
    run->add_option("config", run_path, "Configuration file")->required()->check(CLI::ExistingFile);
    auto* study = app.add_subcommand("study", "Temporal convergence study of a manufactured case");
    study->add_option("config", study_path, "Configuration file")->required()->check(CLI::ExistingFile);
    auto* verify = app.add_subcommand("verify", "Quick property checks of the flow map and transforms");
    auto* info = app.add_subcommand("mesh-info", "Size of the reference mesh of a configuration");
    info->add_option("config", info_path, "Configuration file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mdflow::kExitConfig;
    }

    if (*run) return run_mode(run_path, mdflow::StudyMode::Run, quiet);
    if (*study) return run_mode(study_path, mdflow::StudyMode::Study, quiet);
    if (*info) {
        auto config = load(info_path, false);
        if (!config) return mdflow::kExitConfig;
        std::cout << mdflow::mesh_info(*config);
        return 0;
    }
    if (*verify) {
        bool all = true;
        for (const auto& r : mdflow::run_property_suite()) {
            std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
            if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
            std::cout << '\n';
            all = all && r.passed;
        }
        return all ? 0 : 1;
    }
    return 0;
}
