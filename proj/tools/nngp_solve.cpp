#include "nngp/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw nngp::ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

// exit codes: 0 thresholds met, 1 thresholds missed, 2 error
int main(int argc, char** argv) {
    CLI::App app{"NNGP regression and GP-based PDE solver experiments"};
    app.set_help_flag("-h,--help", "Print this help message and exit");
    std::string command, config_file, preset, out, kernel;
    std::optional<std::uint64_t> seed;
    std::optional<int> depth;
    bool print_config = false;
    app.add_option("command", command, "validate-kernels | approx-step | approx-hartmann | poisson | burgers")
        ->required()
        ->check(CLI::IsMember({"validate-kernels", "approx-step", "approx-hartmann", "poisson", "burgers"}));
    app.add_option("--config", config_file, "key = value settings file")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "desk (default) or paper")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out, "output directory");
    app.add_option("--kernel", kernel, "run a single kernel family (se, matern52, arcsin, nngp-erf, nngp-relu)");
    app.add_option("--depth", depth, "NNGP depth L for --kernel");
    app.add_flag("--print-config", print_config, "print the effective configuration and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const auto kv = config_file.empty() ? std::vector<std::pair<std::string, std::string>>{}
                                            : nngp::parse_key_values(read_file(config_file));
        auto cfg = nngp::build_config(kv, nngp::parse_command(command),
                                      preset.empty() ? std::nullopt : std::optional<std::string>(preset));
        if (seed) cfg.seed = *seed;
        if (!out.empty()) cfg.out = out;
        if (!kernel.empty()) cfg.kernel = kernel;
        if (depth) cfg.depth = *depth;
        cfg.validate();
        if (print_config) {
            std::cout << cfg.serialize();
            return 0;
        }

        const auto report = nngp::run_experiment(cfg);
        nngp::write_report(report, cfg.out);
        for (const auto& [name, err] : report.errors) std::cout << "  " << name << ": " << nngp::format_number(err) << "\n";
        for (const auto& [name, msg] : report.failures) std::cout << "  FAILED " << name << ": " << msg << "\n";
        for (const auto& c : report.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
        std::cout << "wrote " << cfg.out << " in " << nngp::format_number(report.total_seconds) << " s\n";
        return report.passed() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "nngp-solve: " << e.what() << "\n";
        return 2;
    }
}
