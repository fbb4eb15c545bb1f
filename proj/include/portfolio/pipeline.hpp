#pragma once

#include "portfolio/autoencoder.hpp"
#include "portfolio/data_client.hpp"
#include "portfolio/portfolio.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace portfolio {

/// Where prices come from: a local CSV or per-ticker downloads.
struct FetchSource {
    std::string url_template;
    std::string symbol_suffix;  // appended to each ticker, e.g. ".NS"
    std::filesystem::path cache_dir;
};

struct RunConfig {
    std::string sector;
    std::vector<std::string> tickers;
    std::string train_start;
    std::string train_end;
    std::string test_start;
    std::string test_end;
    std::vector<Method> methods;
    std::size_t mvp_samples = 10000;
    std::uint64_t seed = 0;
    double risk_free = 0.0;
    AutoencoderConfig autoencoder;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> csv;
    std::optional<FetchSource> fetch;
};

/// Every RunConfig invariant violation in `doc`, each naming its field.
/// Empty means the document is a valid configuration.
std::vector<std::string> validate_config(const nlohmann::json& doc);

/// Reads and parses a JSON file. Throws ConfigError when unreadable or
/// unparseable.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Validates and converts. Relative data paths (csv, cache_dir) resolve
/// against `base_dir`. Throws ConfigError listing all violations.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path);

/// FetchSpecs for every configured ticker over [train_start, test_end].
std::vector<FetchSpec> fetch_specs(const RunConfig& config);

/// Loads (or downloads) the configured universe with columns in config
/// ticker order.
PricePanel load_universe(const RunConfig& config, const FetchOptions& fetch = {});

enum class ExitCode : int { Ok = 0, Config = 1, Data = 2, Numeric = 3 };

struct RunOptions {
    unsigned workers = 1;  // threads for candidate scoring and per-method work
    FetchOptions fetch;
};

struct RunOutcome {
    ExitCode code = ExitCode::Ok;
    std::vector<std::string> diagnostics;  // "<stage>: <message>" per failure
    std::vector<std::filesystem::path> files;
};

/// Fits each requested method on the training window only, evaluates on
/// both windows, and writes the artifacts into config.output_dir. A method
/// that fails leaves none of its files behind.
RunOutcome run(const RunConfig& config, const RunOptions& options = {});

/// Names of the files a method produces (relative to the output directory).
std::vector<std::string> method_artifacts(Method m);

}  // namespace portfolio
