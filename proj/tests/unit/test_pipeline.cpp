#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "portfolio/errors.hpp"
#include "portfolio/pipeline.hpp"
#include "support/oracles.hpp"

#include <cstdlib>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>

using namespace portfolio;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kTickers10{"RELIANCE", "ULTRACEMCO", "TATASTEEL", "NTPC", "JSWSTEEL",
                                          "ONGC",     "GRASIM",     "HINDALCO",  "COALINDIA", "UPL"};

json base_doc(const fs::path& csv, const fs::path& out) {
    return {{"sector_name", "Test"},
            {"tickers", kTickers10},
            {"train_start", "2018-01-01"},
            {"train_end", "2021-12-31"},
            {"test_start", "2022-01-01"},
            {"test_end", "2022-12-31"},
            {"methods", {"MVP", "HRP", "ENC"}},
            {"mvp_samples", 2000},
            {"seed", 7},
            {"autoencoder", {{"epochs", 30}}},
            {"output_dir", out.string()},
            {"data", {{"csv", csv.string()}}}};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = oracle::slurp(e.path());
    return files;
}

std::set<std::string> names(const fs::path& dir) {
    std::set<std::string> s;
    for (const auto& e : fs::directory_iterator(dir)) s.insert(e.path().filename().string());
    return s;
}

bool has_violation(const json& doc, const std::string& field) {
    for (const auto& v : validate_config(doc))
        if (v.rfind(field, 0) == 0) return true;
    return false;
}

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + PORTFOLIO_CLI + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Rewrites every price dated on or after `from` with a random multiplier.
void perturb_after(const fs::path& in, const fs::path& out, const std::string& from) {
    std::istringstream src(oracle::slurp(in));
    std::ostringstream dst;
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> m(0.5, 1.5);
    std::string line;
    std::getline(src, line);
    dst << line << '\n';
    while (std::getline(src, line)) {
        if (line.substr(0, 10) < from) {
            dst << line << '\n';
            continue;
        }
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        dst << cell;
        while (std::getline(cells, cell, ',')) dst << ',' << (cell.empty() ? 100.0 : std::stod(cell) * m(gen));
        dst << '\n';
    }
    oracle::spit(out, dst.str());
}

const fs::path kSector10 = FIXTURE_DIR "/sector10.csv";
const fs::path kSector4 = FIXTURE_DIR "/sector4.csv";

}  // namespace

TEST_CASE("validate_config: examples") {
    oracle::TempDir dir("validate");
    const auto good = base_doc(kSector10, dir.path() / "out");
    CHECK(validate_config(good).empty());
    CHECK(validate_config(read_config_file(fs::path(FIXTURE_DIR) / "../../configs/commodities.json")).empty());

    auto swapped = good;
    swapped["train_start"] = "2022-01-01";
    swapped["train_end"] = "2022-12-31";
    swapped["test_start"] = "2018-01-01";
    swapped["test_end"] = "2021-12-31";
    CHECK(has_violation(swapped, "test_start"));

    auto no_methods = good;
    no_methods["methods"] = json::array();
    CHECK(has_violation(no_methods, "methods"));

    auto bad_method = good;
    bad_method["methods"] = {"MVP", "XYZ"};
    CHECK(has_violation(bad_method, "methods"));

    auto few = good;
    few["tickers"] = {"A"};
    CHECK(has_violation(few, "tickers"));
    auto dup = good;
    dup["tickers"] = {"A", "B", "A"};
    CHECK(has_violation(dup, "tickers"));

    auto samples = good;
    samples["mvp_samples"] = 0;
    CHECK(has_violation(samples, "mvp_samples"));

    auto both = good;
    both["data"]["fetch"] = {{"url_template", "https://x/{ticker}/{start}/{end}"}};
    CHECK(has_violation(both, "data"));

    auto code = good;
    code["autoencoder"]["code_dim"] = 10;
    CHECK(has_violation(code, "autoencoder.code_dim"));

    auto unknown = good;
    unknown["colour"] = "blue";
    CHECK(has_violation(unknown, "colour"));

    auto date = good;
    date["train_end"] = "2021-02-30";
    CHECK(has_violation(date, "train_end"));

    auto small = good;
    small["tickers"] = {"ALPHA", "BETA", "GAMMA", "DELTA"};
    small.erase("autoencoder");
    CHECK(has_violation(small, "autoencoder.code_dim"));
    small["methods"] = {"HRP"};
    CHECK(validate_config(small).empty());

    CHECK_THROWS_AS(parse_run_config(no_methods), ConfigError);
}

TEST_CASE("config paths resolve against the config file") {
    oracle::TempDir dir("paths");
    auto doc = base_doc("prices.csv", "out");
    oracle::spit(dir.path() / "run.json", doc.dump());
    const auto c = load_run_config(dir.path() / "run.json");
    CHECK(*c.csv == dir.path() / "prices.csv");
    CHECK(c.output_dir == fs::path("out"));
    CHECK(c.autoencoder.input_dim == 10);
    CHECK(c.autoencoder.epochs == 30);
    CHECK(c.autoencoder.code_dim == 5);

    oracle::spit(dir.path() / "broken.json", "{\"sector_name\": ");
    CHECK_THROWS_AS(read_config_file(dir.path() / "broken.json"), ConfigError);
}

TEST_CASE("HRP only on four stocks produces exactly the HRP artifacts") {
    oracle::TempDir dir("hrp4");
    auto doc = base_doc(kSector4, dir.path() / "out");
    doc["tickers"] = {"ALPHA", "BETA", "GAMMA", "DELTA"};
    doc["methods"] = {"HRP"};
    doc.erase("autoencoder");
    const auto outcome = run(parse_run_config(doc));
    CHECK(outcome.code == ExitCode::Ok);
    CHECK(names(dir.path() / "out") == std::set<std::string>{"weights_HRP.csv", "cumulative_HRP_train.csv",
                                                             "cumulative_HRP_test.csv", "linkage.csv", "dendrogram.txt",
                                                             "performance.csv", "weights_table.csv"});
    const auto perf = oracle::slurp(dir.path() / "out" / "performance.csv");
    CHECK(std::count(perf.begin(), perf.end(), '\n') == 3);
}

TEST_CASE("full run: shape, weights on the simplex, reproducible") {
    oracle::TempDir dir("full");
    auto doc = base_doc(kSector10, dir.path() / "a");
    const auto a = run(parse_run_config(doc));
    REQUIRE(a.code == ExitCode::Ok);
    doc["output_dir"] = (dir.path() / "b").string();
    RunOptions threaded;
    threaded.workers = 4;
    REQUIRE(run(parse_run_config(doc), threaded).code == ExitCode::Ok);

    const auto fa = read_dir(dir.path() / "a"), fb = read_dir(dir.path() / "b");
    CHECK(fa == fb);

    const auto& perf = fa.at("performance.csv");
    CHECK(std::count(perf.begin(), perf.end(), '\n') == 7);
    for (const char* m : {"MVP", "HRP", "ENC"}) {
        std::istringstream in(fa.at(std::string("weights_") + m + ".csv"));
        std::string line;
        std::getline(in, line);
        CHECK(line == "ticker,weight");
        std::vector<std::string> tickers;
        double sum = 0.0;
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            tickers.push_back(line.substr(0, comma));
            const double w = std::stod(line.substr(comma + 1));
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(tickers == kTickers10);
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    const auto& frontier = fa.at("frontier.csv");
    CHECK(std::count(frontier.begin(), frontier.end(), '\n') == 2001);
    const auto& trace = fa.at("training_trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 31);
}

TEST_CASE("a new seed changes MVP and ENC output but not HRP") {
    oracle::TempDir dir("seed");
    auto doc = base_doc(kSector10, dir.path() / "a");
    REQUIRE(run(parse_run_config(doc)).code == ExitCode::Ok);
    doc["seed"] = 8;
    doc["output_dir"] = (dir.path() / "b").string();
    REQUIRE(run(parse_run_config(doc)).code == ExitCode::Ok);
    const auto fa = read_dir(dir.path() / "a"), fb = read_dir(dir.path() / "b");
    for (const char* f : {"weights_HRP.csv", "linkage.csv", "dendrogram.txt", "cumulative_HRP_train.csv",
                          "cumulative_HRP_test.csv"})
        CHECK(fa.at(f) == fb.at(f));
    for (const char* f : {"weights_MVP.csv", "frontier.csv", "weights_ENC.csv", "training_trace.csv"})
        CHECK(fa.at(f) != fb.at(f));
}

TEST_CASE("test-window prices never reach the weights") {
    oracle::TempDir dir("leak");
    perturb_after(kSector10, dir.path() / "perturbed.csv", "2022-01-01");
    auto doc = base_doc(kSector10, dir.path() / "a");
    REQUIRE(run(parse_run_config(doc)).code == ExitCode::Ok);
    doc["data"]["csv"] = (dir.path() / "perturbed.csv").string();
    doc["output_dir"] = (dir.path() / "b").string();
    REQUIRE(run(parse_run_config(doc)).code == ExitCode::Ok);
    const auto fa = read_dir(dir.path() / "a"), fb = read_dir(dir.path() / "b");
    for (const char* f : {"weights_MVP.csv", "weights_HRP.csv", "weights_ENC.csv", "frontier.csv", "linkage.csv",
                          "training_trace.csv", "autoencoder_model.txt", "cumulative_MVP_train.csv"})
        CHECK(fa.at(f) == fb.at(f));
    CHECK(fa.at("cumulative_MVP_test.csv") != fb.at("cumulative_MVP_test.csv"));
}

TEST_CASE("a failing method leaves none of its files behind") {
    oracle::TempDir dir("fail");
    // BETA never moves during training: HRP and ENC cannot fit, MVP can.
    std::ostringstream csv;
    csv << "date,ALPHA,BETA\n";
    const char* dates[] = {"2021-12-27", "2021-12-28", "2021-12-29", "2021-12-30", "2022-01-03", "2022-01-04", "2022-01-05"};
    for (int t = 0; t < 7; ++t) csv << dates[t] << ',' << 100.0 + t * (t % 2 ? 1.5 : -0.5) << ',' << (t < 4 ? 50.0 : 50.0 + t) << '\n';
    oracle::spit(dir.path() / "flat.csv", csv.str());

    auto doc = base_doc(dir.path() / "flat.csv", dir.path() / "out");
    doc["tickers"] = {"ALPHA", "BETA"};
    doc["train_start"] = "2021-12-01";
    doc["autoencoder"] = {{"code_dim", 1}, {"epochs", 5}};
    fs::create_directories(dir.path() / "out");
    oracle::spit(dir.path() / "out" / "linkage.csv", "stale\n");

    const auto outcome = run(parse_run_config(doc));
    CHECK(outcome.code == ExitCode::Numeric);
    REQUIRE(outcome.diagnostics.size() == 2);
    CHECK(outcome.diagnostics[0].rfind("HRP: ", 0) == 0);
    CHECK(outcome.diagnostics[1].rfind("ENC: ", 0) == 0);
    const auto files = names(dir.path() / "out");
    CHECK(files.count("weights_MVP.csv") == 1);
    for (const auto& f : method_artifacts(Method::HRP)) CHECK(files.count(f) == 0);
    for (const auto& f : method_artifacts(Method::ENC)) CHECK(files.count(f) == 0);
    const auto perf = oracle::slurp(dir.path() / "out" / "performance.csv");
    CHECK(std::count(perf.begin(), perf.end(), '\n') == 3);
}

TEST_CASE("cli exit codes") {
    oracle::TempDir dir("cli");
    const auto cfg = dir.path() / "run.json";
    oracle::spit(cfg, base_doc(kSector10, dir.path() / "out").dump());
    CHECK(cli("validate --config \"" + cfg.string() + "\"") == 0);
    CHECK(cli("run --config \"" + cfg.string() + "\" --seed 3 --workers 2") == 0);
    CHECK(fs::exists(dir.path() / "out" / "performance.csv"));
    CHECK(cli("run --config \"" + cfg.string() + "\" --out \"" + (dir.path() / "other").string() + "\"") == 0);
    CHECK(fs::exists(dir.path() / "other" / "weights_HRP.csv"));

    auto bad = base_doc(kSector10, dir.path() / "out");
    bad["methods"] = json::array();
    oracle::spit(dir.path() / "bad.json", bad.dump());
    CHECK(cli("validate --config \"" + (dir.path() / "bad.json").string() + "\"") == 1);
    CHECK(cli("run --config \"" + (dir.path() / "bad.json").string() + "\"") == 1);
    oracle::spit(dir.path() / "garbled.json", "{");
    CHECK(cli("run --config \"" + (dir.path() / "garbled.json").string() + "\"") == 1);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("") == 1);

    oracle::spit(dir.path() / "missing.json", base_doc(dir.path() / "nope.csv", dir.path() / "out").dump());
    CHECK(cli("run --config \"" + (dir.path() / "missing.json").string() + "\"") == 2);

    std::ostringstream flat;
    flat << "date,A,B\n";
    for (int t = 1; t <= 9; ++t) flat << "2021-12-0" << t << ",100," << 10 + t << '\n';
    for (int t = 10; t <= 14; ++t) flat << "2022-01-" << t << ",100," << 10 + t << '\n';
    oracle::spit(dir.path() / "flat.csv", flat.str());
    auto numeric = base_doc(dir.path() / "flat.csv", dir.path() / "numeric");
    numeric["tickers"] = {"A", "B"};
    numeric["methods"] = {"HRP"};
    numeric["train_start"] = "2021-12-01";
    oracle::spit(dir.path() / "numeric.json", numeric.dump());
    CHECK(cli("run --config \"" + (dir.path() / "numeric.json").string() + "\"") == 3);
}
