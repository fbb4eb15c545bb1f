#include "portfolio/pipeline.hpp"

#include "portfolio/errors.hpp"
#include "portfolio/evaluation.hpp"
#include "portfolio/hrp.hpp"
#include "portfolio/mvp.hpp"
#include "portfolio/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

namespace portfolio {

using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys{"sector_name", "tickers",     "train_start", "train_end",
                                          "test_start", "test_end",   "methods",     "mvp_samples",
                                          "seed",       "rf",  "autoencoder", "output_dir",
                                          "data"};
const std::set<std::string> kAutoencoderKeys{"code_dim", "epochs", "batch_size", "learning_rate",
                                             "beta1",    "beta2",  "epsilon"};

bool is_string(const json& doc, const char* key) { return doc.contains(key) && doc[key].is_string(); }

}  // namespace

std::vector<std::string> validate_config(const json& doc) {
    std::vector<std::string> v;
    if (!doc.is_object()) return {"config: top level must be an object"};

    for (const auto& [key, _] : doc.items())
        if (!kTopLevelKeys.count(key)) v.push_back(key + ": unknown field");

    if (!is_string(doc, "sector_name") || doc["sector_name"].get<std::string>().empty())
        v.push_back("sector_name: required non-empty string");

    std::size_t n_tickers = 0;
    if (!doc.contains("tickers") || !doc["tickers"].is_array()) {
        v.push_back("tickers: required array of strings");
    } else {
        std::set<std::string> seen;
        for (const auto& t : doc["tickers"]) {
            if (!t.is_string() || t.get<std::string>().empty()) {
                v.push_back("tickers: every entry must be a non-empty string");
                break;
            }
            if (!seen.insert(t.get<std::string>()).second) v.push_back("tickers: duplicate '" + t.get<std::string>() + "'");
        }
        n_tickers = doc["tickers"].size();
        if (n_tickers < 2 || n_tickers > 50) v.push_back("tickers: need between 2 and 50 tickers");
    }

    bool dates_ok = true;
    for (const char* key : {"train_start", "train_end", "test_start", "test_end"}) {
        if (!is_string(doc, key) || !is_iso_date(doc[key].get<std::string>())) {
            v.push_back(std::string(key) + ": required YYYY-MM-DD date");
            dates_ok = false;
        }
    }
    if (dates_ok) {
        const auto ts = doc["train_start"].get<std::string>(), te = doc["train_end"].get<std::string>();
        const auto ss = doc["test_start"].get<std::string>(), se = doc["test_end"].get<std::string>();
        if (!(ts < te)) v.push_back("train_start: must precede train_end");
        if (!(ss < se)) v.push_back("test_start: must precede test_end");
        if (!(te < ss)) v.push_back("test_start: test window must begin after train_end");
    }

    bool wants_enc = false;
    if (!doc.contains("methods") || !doc["methods"].is_array() || doc["methods"].empty()) {
        v.push_back("methods: required non-empty array of MVP, HRP, ENC");
    } else {
        std::set<std::string> seen;
        wants_enc = std::any_of(doc["methods"].begin(), doc["methods"].end(),
                                [](const json& m) { return m.is_string() && m.get<std::string>() == "ENC"; });
        for (const auto& m : doc["methods"]) {
            const std::string s = m.is_string() ? m.get<std::string>() : std::string{};
            if (s != "MVP" && s != "HRP" && s != "ENC") v.push_back("methods: unknown method '" + (m.is_string() ? s : m.dump()) + "'");
            else if (!seen.insert(s).second) v.push_back("methods: duplicate '" + s + "'");
        }
    }

    if (doc.contains("mvp_samples") && (!doc["mvp_samples"].is_number_integer() || doc["mvp_samples"].get<std::int64_t>() < 1))
        v.push_back("mvp_samples: must be an integer >= 1");
    if (doc.contains("seed") && !(doc["seed"].is_number_unsigned() || (doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0)))
        v.push_back("seed: must be a non-negative integer");
    if (doc.contains("rf") && !doc["rf"].is_number())
        v.push_back("rf: must be a number");

    if (doc.contains("autoencoder")) {
        const auto& ae = doc["autoencoder"];
        if (!ae.is_object()) {
            v.push_back("autoencoder: must be an object");
        } else {
            for (const auto& [key, _] : ae.items())
                if (!kAutoencoderKeys.count(key)) v.push_back("autoencoder." + key + ": unknown field");
            auto positive_int = [&](const char* key) {
                if (ae.contains(key) && (!ae[key].is_number_integer() || ae[key].get<std::int64_t>() < 1))
                    v.push_back(std::string("autoencoder.") + key + ": must be an integer >= 1");
            };
            positive_int("code_dim");
            positive_int("epochs");
            positive_int("batch_size");
            if (ae.contains("code_dim") && ae["code_dim"].is_number_integer() && n_tickers > 0 &&
                ae["code_dim"].get<std::int64_t>() >= static_cast<std::int64_t>(n_tickers))
                v.push_back("autoencoder.code_dim: must be smaller than the number of tickers");
            for (const char* key : {"learning_rate", "epsilon"})
                if (ae.contains(key) && (!ae[key].is_number() || !(ae[key].get<double>() > 0.0)))
                    v.push_back(std::string("autoencoder.") + key + ": must be a positive number");
            for (const char* key : {"beta1", "beta2"})
                if (ae.contains(key) && (!ae[key].is_number() || ae[key].get<double>() < 0.0 || ae[key].get<double>() >= 1.0))
                    v.push_back(std::string("autoencoder.") + key + ": must be in [0, 1)");
        }
    } else if (wants_enc && n_tickers > 0 && n_tickers <= 5) {
        // Default code size is 5.
        v.push_back("autoencoder.code_dim: default of 5 needs more than 5 tickers; set it explicitly");
    }

    if (!is_string(doc, "output_dir") || doc["output_dir"].get<std::string>().empty())
        v.push_back("output_dir: required non-empty string");

    if (!doc.contains("data") || !doc["data"].is_object()) {
        v.push_back("data: required object with either 'csv' or 'fetch'");
    } else {
        const auto& data = doc["data"];
        const bool has_csv = data.contains("csv"), has_fetch = data.contains("fetch");
        if (has_csv == has_fetch) v.push_back("data: exactly one of 'csv' or 'fetch' is required");
        for (const auto& [key, _] : data.items())
            if (key != "csv" && key != "fetch") v.push_back("data." + key + ": unknown field");
        if (has_csv && (!data["csv"].is_string() || data["csv"].get<std::string>().empty()))
            v.push_back("data.csv: must be a file path");
        if (has_fetch) {
            const auto& f = data["fetch"];
            if (!f.is_object() || !is_string(f, "url_template")) {
                v.push_back("data.fetch.url_template: required string");
            } else {
                const auto t = f["url_template"].get<std::string>();
                if (t.find("{ticker}") == std::string::npos) v.push_back("data.fetch.url_template: lacks {ticker}");
                if (t.find("{start") == std::string::npos) v.push_back("data.fetch.url_template: lacks {start}");
                if (t.find("{end") == std::string::npos) v.push_back("data.fetch.url_template: lacks {end}");
                for (const auto& [key, val] : f.items()) {
                    if (key != "url_template" && key != "symbol_suffix" && key != "cache_dir")
                        v.push_back("data.fetch." + key + ": unknown field");
                    else if (!val.is_string())
                        v.push_back("data.fetch." + key + ": must be a string");
                }
            }
        }
    }
    return v;
}

json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
    }
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    const auto violations = validate_config(doc);
    if (!violations.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& s : violations) msg += "\n  " + s;
        throw ConfigError(msg);
    }
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };

    RunConfig c;
    c.sector = doc["sector_name"].get<std::string>();
    c.tickers = doc["tickers"].get<std::vector<std::string>>();
    c.train_start = doc["train_start"].get<std::string>();
    c.train_end = doc["train_end"].get<std::string>();
    c.test_start = doc["test_start"].get<std::string>();
    c.test_end = doc["test_end"].get<std::string>();
    for (const auto& m : doc["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    c.mvp_samples = doc.value("mvp_samples", std::size_t{10000});
    c.seed = doc.value("seed", std::uint64_t{0});
    c.risk_free = doc.value("rf", 0.0);

    c.autoencoder.input_dim = static_cast<Eigen::Index>(c.tickers.size());
    if (doc.contains("autoencoder")) {
        const auto& ae = doc["autoencoder"];
        c.autoencoder.code_dim = ae.value("code_dim", c.autoencoder.code_dim);
        c.autoencoder.epochs = ae.value("epochs", c.autoencoder.epochs);
        c.autoencoder.batch_size = ae.value("batch_size", c.autoencoder.batch_size);
        c.autoencoder.learning_rate = ae.value("learning_rate", c.autoencoder.learning_rate);
        c.autoencoder.beta1 = ae.value("beta1", c.autoencoder.beta1);
        c.autoencoder.beta2 = ae.value("beta2", c.autoencoder.beta2);
        c.autoencoder.epsilon = ae.value("epsilon", c.autoencoder.epsilon);
    }
    c.output_dir = doc["output_dir"].get<std::string>();

    const auto& data = doc["data"];
    if (data.contains("csv")) {
        c.csv = resolve(data["csv"].get<std::string>());
    } else {
        const auto& f = data["fetch"];
        FetchSource src;
        src.url_template = f["url_template"].get<std::string>();
        src.symbol_suffix = f.value("symbol_suffix", std::string{});
        src.cache_dir = resolve(f.value("cache_dir", std::string{"cache"}));
        c.fetch = std::move(src);
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_config_file(path), path.parent_path());
}

std::vector<FetchSpec> fetch_specs(const RunConfig& config) {
    if (!config.fetch) throw ConfigError("data.fetch: configuration has no fetch source");
    std::vector<FetchSpec> specs;
    for (const auto& t : config.tickers)
        specs.push_back({t + config.fetch->symbol_suffix, config.train_start, config.test_end,
                         config.fetch->url_template, config.fetch->cache_dir});
    return specs;
}

PricePanel load_universe(const RunConfig& config, const FetchOptions& fetch) {
    PricePanel source = config.csv ? load_price_csv(*config.csv) : assemble_universe(fetch_specs(config), fetch);
    // Fetched columns carry the exchange suffix; rename to the configured tickers.
    Eigen::MatrixXd prices(source.rows(), static_cast<Eigen::Index>(config.tickers.size()));
    for (std::size_t k = 0; k < config.tickers.size(); ++k) {
        const auto& name = config.csv ? config.tickers[k] : config.tickers[k] + config.fetch->symbol_suffix;
        prices.col(static_cast<Eigen::Index>(k)) = source.prices().col(source.column(name));
    }
    return PricePanel(config.tickers, source.dates(), std::move(prices));
}

std::vector<std::string> method_artifacts(Method m) {
    const std::string name(method_name(m));
    std::vector<std::string> files{"weights_" + name + ".csv", "cumulative_" + name + "_train.csv",
                                   "cumulative_" + name + "_test.csv"};
    switch (m) {
        case Method::MVP:
            files.insert(files.end(), {"frontier.csv", "frontier_selected.csv", "frontier_min_volatility.csv"});
            break;
        case Method::HRP:
            files.insert(files.end(), {"linkage.csv", "dendrogram.txt"});
            break;
        case Method::ENC:
            files.insert(files.end(), {"training_trace.csv", "autoencoder_model.txt"});
            break;
    }
    return files;
}

namespace {

struct MethodResult {
    Method method = Method::MVP;
    Portfolio portfolio;
    std::vector<PerformanceReport> reports;
    std::map<std::string, std::string> files;
    std::optional<std::string> error;
    ExitCode code = ExitCode::Ok;
};

struct Windows {
    PricePanel train_prices;
    ReturnPanel train_returns;
    ReturnPanel test_returns;
    CovarianceMatrix train_cov;
    Eigen::VectorXd train_annual_returns;
};

template <typename F>
std::string render(F&& writer) {
    std::ostringstream out;
    writer(out);
    return out.str();
}

void fit(MethodResult& r, const RunConfig& config, const Windows& w, const RunOptions& options) {
    const std::string name(method_name(r.method));
    switch (r.method) {
        case Method::MVP: {
            const auto cloud = sample_candidates(w.train_annual_returns, w.train_cov, config.mvp_samples,
                                                 derive_seed(config.seed, "mvp"), config.risk_free,
                                                 options.workers);
            const auto best = max_sharpe_portfolio(cloud);
            const auto safest = min_volatility_portfolio(cloud);
            r.portfolio = best.portfolio;
            r.files["frontier.csv"] = render([&](std::ostream& o) { write_frontier_csv(frontier_scatter(cloud), o); });
            r.files["frontier_selected.csv"] = render([&](std::ostream& o) {
                o << "portfolio,row,annual_return,annual_volatility,sharpe\n";
                char buf[160];
                for (const auto& [label, sel] : {std::pair{"max_sharpe", &best}, std::pair{"min_volatility", &safest}}) {
                    std::snprintf(buf, sizeof buf, "%s,%ld,%.10f,%.10f,%.10f\n", label, static_cast<long>(sel->row),
                                  sel->metrics.annual_return, sel->metrics.annual_volatility, sel->metrics.sharpe);
                    o << buf;
                }
            });
            r.files["frontier_min_volatility.csv"] =
                render([&](std::ostream& o) { write_weights_csv(safest.portfolio, o); });
            break;
        }
        case Method::HRP: {
            const auto hrp = hrp_portfolio(w.train_cov);
            r.portfolio = hrp.portfolio;
            r.files["linkage.csv"] = render([&](std::ostream& o) { write_linkage_csv(hrp.tree, o); });
            r.files["dendrogram.txt"] =
                render([&](std::ostream& o) { write_dendrogram(hrp.tree, w.train_cov.tickers, o); });
            break;
        }
        case Method::ENC: {
            AutoencoderConfig ae = config.autoencoder;
            ae.seed = derive_seed(config.seed, "autoencoder");
            const auto trained = train(w.train_prices, ae);
            r.portfolio = extract_weights(trained.model, trained.scaled.values, w.train_prices.tickers());
            r.files["training_trace.csv"] = render([&](std::ostream& o) { write_trace_csv(trained.trace, o); });
            r.files["autoencoder_model.txt"] = render([&](std::ostream& o) { write_model(trained.model, ae, o); });
            break;
        }
    }
    check_portfolio(r.portfolio);
    r.files["weights_" + name + ".csv"] = render([&](std::ostream& o) { write_weights_csv(r.portfolio, o); });

    for (const auto& [period, returns] : {std::pair{Period::Train, &w.train_returns}, std::pair{Period::Test, &w.test_returns}}) {
        auto report = evaluate(r.portfolio, *returns, config.risk_free, period);
        r.files["cumulative_" + name + "_" + std::string(period_name(period)) + ".csv"] =
            render([&](std::ostream& o) { write_cumulative_csv(report, o); });
        r.reports.push_back(std::move(report));
    }
}

void run_method(MethodResult& r, const RunConfig& config, const Windows& w, const RunOptions& options) {
    try {
        fit(r, config, w, options);
    } catch (const ConfigError& e) {
        r.error = e.what();
        r.code = ExitCode::Config;
    } catch (const DataError& e) {
        r.error = e.what();
        r.code = ExitCode::Data;
    } catch (const std::exception& e) {
        r.error = e.what();
        r.code = ExitCode::Numeric;
    }
    if (r.error) {
        r.files.clear();
        r.reports.clear();
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Windows split_windows(const RunConfig& config, const PricePanel& panel) {
    auto train = panel.slice(config.train_start, config.train_end);
    auto test = panel.slice(config.test_start, config.test_end);
    if (train.rows() < 3) throw DataError("training window has " + std::to_string(train.rows()) + " rows, need at least 3");
    if (test.rows() < 3) throw DataError("test window has " + std::to_string(test.rows()) + " rows, need at least 3");
    auto train_returns = daily_returns(train);
    auto test_returns = daily_returns(test);
    auto cov = covariance_matrix(train_returns);
    auto annual = annual_returns(train_returns);
    return {std::move(train), std::move(train_returns), std::move(test_returns), std::move(cov), std::move(annual)};
}

}  // namespace

RunOutcome run(const RunConfig& config, const RunOptions& options) {
    RunOutcome outcome;
    auto fail = [&](ExitCode code, const std::string& stage, const std::string& msg) {
        if (outcome.code == ExitCode::Ok) outcome.code = code;
        outcome.diagnostics.push_back(stage + ": " + msg);
    };

    std::optional<Windows> windows;
    try {
        windows = split_windows(config, load_universe(config, options.fetch));
    } catch (const ConfigError& e) {
        fail(ExitCode::Config, "data", e.what());
    } catch (const DataError& e) {
        fail(ExitCode::Data, "data", e.what());
    } catch (const std::exception& e) {
        fail(ExitCode::Numeric, "data", e.what());
    }
    if (!windows) return outcome;

    std::vector<MethodResult> results(config.methods.size());
    for (std::size_t k = 0; k < results.size(); ++k) results[k].method = config.methods[k];
    if (options.workers > 1 && results.size() > 1) {
        std::vector<std::future<void>> jobs;
        for (auto& r : results)
            jobs.push_back(std::async(std::launch::async, [&] { run_method(r, config, *windows, options); }));
        for (auto& j : jobs) j.get();
    } else {
        for (auto& r : results) run_method(r, config, *windows, options);
    }

    std::filesystem::create_directories(config.output_dir);
    std::vector<PerformanceReport> reports;
    std::vector<const MethodResult*> succeeded;
    for (const auto& r : results) {
        const std::string stage(method_name(r.method));
        if (r.error) {
            fail(r.code, stage, *r.error);
            for (const auto& f : method_artifacts(r.method)) std::filesystem::remove(config.output_dir / f);
            continue;
        }
        succeeded.push_back(&r);
        reports.insert(reports.end(), r.reports.begin(), r.reports.end());
        for (const auto& [name, content] : r.files) {
            write_file(config.output_dir / name, content);
            outcome.files.push_back(config.output_dir / name);
        }
    }

    write_file(config.output_dir / "performance.csv",
               render([&](std::ostream& o) { write_report_csv(config.sector, reports, o); }));
    outcome.files.push_back(config.output_dir / "performance.csv");

    // Side-by-side table at 4 decimals, one column per successful method.
    const std::string table = render([&](std::ostream& o) {
        o << "ticker";
        for (const auto* r : succeeded) o << ',' << method_name(r->method);
        o << '\n';
        char buf[32];
        for (std::size_t i = 0; i < config.tickers.size(); ++i) {
            o << config.tickers[i];
            for (const auto* r : succeeded) {
                std::snprintf(buf, sizeof buf, ",%.4f", r->portfolio.weights(static_cast<Eigen::Index>(i)));
                o << buf;
            }
            o << '\n';
        }
    });
    write_file(config.output_dir / "weights_table.csv", table);
    outcome.files.push_back(config.output_dir / "weights_table.csv");
    return outcome;
}

}  // namespace portfolio
