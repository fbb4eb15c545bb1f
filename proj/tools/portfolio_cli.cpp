#include "portfolio/errors.hpp"
#include "portfolio/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

namespace {

int exit_code(portfolio::ExitCode c) { return static_cast<int>(c); }

int cmd_validate(const std::string& config_path) {
    const auto doc = portfolio::read_config_file(config_path);
    const auto violations = portfolio::validate_config(doc);
    if (violations.empty()) {
        std::cout << config_path << ": ok\n";
        return 0;
    }
    for (const auto& v : violations) std::cerr << config_path << ": " << v << '\n';
    return exit_code(portfolio::ExitCode::Config);
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
            unsigned workers) {
    auto config = portfolio::load_run_config(config_path);
    if (!out.empty()) config.output_dir = out;
    if (seed) config.seed = *seed;
    portfolio::RunOptions options;
    options.workers = workers;
    const auto outcome = portfolio::run(config, options);
    for (const auto& d : outcome.diagnostics) std::cerr << "error: " << d << '\n';
    std::cout << "wrote " << outcome.files.size() << " files to " << config.output_dir.string() << '\n';
    return exit_code(outcome.code);
}

int cmd_fetch(const std::string& config_path) {
    const auto config = portfolio::load_run_config(config_path);
    for (const auto& spec : portfolio::fetch_specs(config)) {
        const auto panel = portfolio::fetch_prices(spec);
        std::cout << spec.ticker << ": " << panel.rows() << " rows -> " << portfolio::cache_file(spec).string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sector portfolio construction and backtesting (MVP, HRP, autoencoder)"};
    app.require_subcommand(1);

    std::string config_path, out;
    std::uint64_t seed_value = 0;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "fit portfolios on the training window and evaluate them");
    run->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (overrides output_dir)");
    auto* seed_opt = run->add_option("--seed", seed_value, "random seed (overrides seed)");
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "check a run configuration");
    validate->add_option("--config", config_path, "run configuration (JSON)")->required();

    auto* fetch = app.add_subcommand("fetch", "download prices into the cache only");
    fetch->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(portfolio::ExitCode::Config);
    }

    try {
        if (*validate) return cmd_validate(config_path);
        if (*run)
            return cmd_run(config_path, out, *seed_opt ? std::optional<std::uint64_t>{seed_value} : std::nullopt,
                           workers);
        if (*fetch) return cmd_fetch(config_path);
    } catch (const portfolio::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code(portfolio::ExitCode::Config);
    } catch (const portfolio::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_code(portfolio::ExitCode::Data);
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return exit_code(portfolio::ExitCode::Numeric);
    }
    return 0;
}
