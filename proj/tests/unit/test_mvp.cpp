#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "portfolio/errors.hpp"
#include "portfolio/mvp.hpp"
#include "portfolio/rng.hpp"
#include "support/oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

using namespace portfolio;

namespace {

CovarianceMatrix cov_of(Eigen::MatrixXd m) {
    std::vector<std::string> t;
    for (Eigen::Index i = 0; i < m.rows(); ++i) t.push_back("S" + std::to_string(i));
    return {t, std::move(m)};
}

CandidateCloud cloud_of(std::vector<double> vol, std::vector<double> sharpe) {
    CandidateCloud c;
    const auto n = static_cast<Eigen::Index>(vol.size());
    c.tickers = {"A"};
    c.weights = Eigen::MatrixXd::Ones(n, 1);
    c.annual_volatility = Eigen::Map<Eigen::VectorXd>(vol.data(), n);
    c.sharpe = Eigen::Map<Eigen::VectorXd>(sharpe.data(), n);
    c.annual_return = c.sharpe.cwiseProduct(c.annual_volatility);
    return c;
}

// Rank rows by a full sort on the selection key and take the first.
Eigen::Index scan_max_sharpe(const CandidateCloud& c) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(c.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::tuple(-c.sharpe(a), c.annual_volatility(a), a) < std::tuple(-c.sharpe(b), c.annual_volatility(b), b);
    });
    return idx.front();
}

Eigen::Index scan_min_volatility(const CandidateCloud& c) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(c.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::tuple(c.annual_volatility(a), -c.sharpe(a), a) < std::tuple(c.annual_volatility(b), -c.sharpe(b), b);
    });
    return idx.front();
}

}  // namespace

TEST_CASE("rng: reproducible, bounded, independent stages") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(r.below(7) < 7);
    }
    auto perm = Rng(3).permutation(50);
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < perm.size(); ++i) REQUIRE(perm[i] == i);
    CHECK(derive_seed(1, "mvp") != derive_seed(1, "autoencoder"));
    CHECK(derive_seed(1, "mvp") != derive_seed(2, "mvp"));
    CHECK(derive_seed(1, "mvp") == derive_seed(1, "mvp"));
    // The first output of mt19937_64 seeded with 5489 is fixed by the standard.
    CHECK(Rng(5489).next() == 14514284786278117030ULL);
}

TEST_CASE("portfolio_return: examples") {
    CHECK(portfolio_return(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(0.3, 0.07)) == doctest::Approx(0.07));
    CHECK(portfolio_return(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.10, 0.20)) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(portfolio_return(Eigen::Vector3d(0.2, 0.3, 0.5), Eigen::Vector3d(0.1, 0.0, -0.1)) ==
          doctest::Approx(-0.03).epsilon(1e-14));
}

TEST_CASE("portfolio_volatility: examples") {
    const auto single = cov_of(Eigen::MatrixXd::Constant(1, 1, 0.0004));
    CHECK(portfolio_volatility(Eigen::VectorXd::Ones(1), single) == doctest::Approx(0.02 * std::sqrt(250.0)).epsilon(1e-14));

    const auto indep = cov_of(Eigen::Matrix2d{{0.0004, 0.0}, {0.0, 0.0004}});
    const double vol = portfolio_volatility(Eigen::Vector2d(0.5, 0.5), indep);
    CHECK(vol * vol / 250.0 == doctest::Approx(0.0002).epsilon(1e-14));

    const auto c = cov_of(Eigen::Matrix2d{{0.0004, 0.0002}, {0.0002, 0.0009}});
    const double v = portfolio_volatility(Eigen::Vector2d(0.5, 0.5), c);
    CHECK(v == doctest::Approx(std::sqrt(0.000425) * std::sqrt(250.0)).epsilon(1e-14));
    CHECK(v == doctest::Approx(0.3260).epsilon(1e-4));
}

TEST_CASE("sharpe_ratio: published rows") {
    CHECK(sharpe_ratio(0.1751, 0.1949) == doctest::Approx(0.1751 / 0.1949).epsilon(1e-15));
    CHECK(std::abs(sharpe_ratio(0.1751, 0.1949) - 0.8983) < 1e-3);
    CHECK(std::abs(sharpe_ratio(0.1751, 0.1949) - 0.8982) < 1e-3);
    CHECK(std::abs(sharpe_ratio(0.1983, 0.2098) - 0.9452) < 1e-3);
    CHECK(std::abs(sharpe_ratio(0.1983, 0.2098) - 0.9451) < 1e-3);
    CHECK(sharpe_ratio(0.07, 0.3, 0.07) == 0.0);
    CHECK_THROWS_AS(sharpe_ratio(0.1, 0.0), NumericError);
}

TEST_CASE("sample_candidates: simplex, determinism, worker independence") {
    std::mt19937_64 gen(8);
    const auto cov = cov_of(oracle::random_covariance(gen, 5));
    const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(5, -0.05, 0.25);

    const auto one = sample_candidates(mu, cov, 1, 99);
    CHECK(one.size() == 1);
    CHECK(on_simplex(one.weights.row(0).transpose()));

    const auto a = sample_candidates(mu, cov, 3000, 1234, 0.0, 1);
    const auto b = sample_candidates(mu, cov, 3000, 1234, 0.0, 1);
    const auto c = sample_candidates(mu, cov, 3000, 1234, 0.0, 7);
    CHECK(a.weights == b.weights);
    CHECK(a.sharpe == b.sharpe);
    CHECK(a.weights == c.weights);
    CHECK(a.annual_return == c.annual_return);
    CHECK(a.annual_volatility == c.annual_volatility);
    CHECK(a.sharpe == c.sharpe);
    CHECK(a.weights != sample_candidates(mu, cov, 3000, 1235).weights);

    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const Eigen::VectorXd w = a.weights.row(k).transpose();
        REQUIRE(w.minCoeff() >= 0.0);
        REQUIRE(std::abs(w.sum() - 1.0) <= 1e-9);
        REQUIRE(a.annual_volatility(k) >= 0.0);
        REQUIRE(a.annual_return(k) == doctest::Approx(portfolio_return(w, mu)).epsilon(1e-15));
    }
    CHECK_THROWS(sample_candidates(mu, cov, 0, 1));
}

TEST_CASE("selection: small examples") {
    CHECK(max_sharpe_portfolio(cloud_of({0.2}, {0.3})).row == 0);
    CHECK(max_sharpe_portfolio(cloud_of({0.2, 0.2}, {0.5, 0.9})).row == 1);
    CHECK(min_volatility_portfolio(cloud_of({0.2}, {0.3})).row == 0);
    CHECK(min_volatility_portfolio(cloud_of({0.2, 0.1}, {0.5, 0.4})).row == 1);
    // Ties.
    CHECK(max_sharpe_portfolio(cloud_of({0.3, 0.2, 0.2}, {0.9, 0.9, 0.9})).row == 1);
    CHECK(min_volatility_portfolio(cloud_of({0.1, 0.1, 0.1}, {0.4, 0.6, 0.6})).row == 1);
    CHECK_THROWS(max_sharpe_portfolio(CandidateCloud{}));
}

TEST_CASE("selection matches a full-sort scan") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto cov = cov_of(oracle::random_covariance(gen, 3));
        const Eigen::Vector3d mu(0.05 + 0.01 * trial, 0.12, 0.2);
        const auto cloud = sample_candidates(mu, cov, 10000, 1000 + trial);
        const auto best = max_sharpe_portfolio(cloud);
        const auto safest = min_volatility_portfolio(cloud);
        REQUIRE(best.row == scan_max_sharpe(cloud));
        REQUIRE(safest.row == scan_min_volatility(cloud));
        REQUIRE(best.portfolio.weights == Eigen::VectorXd(cloud.weights.row(best.row).transpose()));
        REQUIRE(best.metrics.sharpe == cloud.sharpe(best.row));
    }
}

TEST_CASE("scaling the covariance keeps the max-Sharpe row") {
    std::mt19937_64 gen(31);
    for (double c : {0.01, 0.5, 4.0, 17.3}) {
        const auto cov = cov_of(oracle::random_covariance(gen, 4));
        const Eigen::Vector4d mu(0.1, 0.15, 0.02, 0.3);
        const auto base = sample_candidates(mu, cov, 5000, 5);
        const auto scaled = sample_candidates(mu, cov_of(cov.values * c), 5000, 5);
        CHECK(max_sharpe_portfolio(base).row == max_sharpe_portfolio(scaled).row);
        for (Eigen::Index k = 0; k < base.size(); k += 97)
            REQUIRE(scaled.sharpe(k) == doctest::Approx(base.sharpe(k) / std::sqrt(c)).epsilon(1e-12));
    }
}

TEST_CASE("two-asset tangency") {
    std::ifstream in(FIXTURE_DIR "/tangency_2asset.json");
    const auto doc = nlohmann::json::parse(in);
    const Eigen::Vector2d mu(doc["mu"][0].get<double>(), doc["mu"][1].get<double>());
    Eigen::Matrix2d s;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s(i, j) = doc["cov"][i][j].get<double>();
    const auto cloud = sample_candidates(mu, cov_of(s), doc["count"].get<std::size_t>(), doc["seed"].get<std::uint64_t>());
    const double w = max_sharpe_portfolio(cloud).portfolio.weights(0);
    CHECK(std::abs(w - oracle::tangency_weight0(mu, s)) < 0.03);
}

TEST_CASE("frontier scatter projects the cloud") {
    std::mt19937_64 gen(4);
    const auto cloud = sample_candidates(Eigen::Vector3d(0.1, 0.2, 0.3), cov_of(oracle::random_covariance(gen, 3)), 250, 9);
    const auto pts = frontier_scatter(cloud);
    REQUIRE(pts.size() == 250);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        REQUIRE(pts[k].volatility == cloud.annual_volatility(i));
        REQUIRE(pts[k].annual_return == cloud.annual_return(i));
        REQUIRE(pts[k].sharpe == cloud.sharpe(i));
    }
    std::ostringstream out;
    write_frontier_csv(pts, out);
    const auto text = out.str();
    CHECK(text.rfind("volatility,return,sharpe\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 251);
    CHECK(frontier_scatter(sample_candidates(Eigen::Vector2d(0.1, 0.2), cov_of(Eigen::Matrix2d::Identity() * 1e-4), 1, 1)).size() == 1);
}
