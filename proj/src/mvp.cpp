#include "portfolio/mvp.hpp"

#include "portfolio/errors.hpp"
#include "portfolio/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace portfolio {

double portfolio_return(const Eigen::VectorXd& weights, const Eigen::VectorXd& expected_returns) {
    if (weights.size() != expected_returns.size())
        throw NumericError("portfolio_return: dimension mismatch");
    return weights.dot(expected_returns);
}

double portfolio_volatility(const Eigen::VectorXd& weights, const CovarianceMatrix& cov) {
    if (cov.values.rows() != weights.size() || cov.values.cols() != weights.size())
        throw NumericError("portfolio_volatility: dimension mismatch");
    const double var = weights.dot(cov.values * weights);
    if (var < -1e-12) throw NumericError("portfolio_volatility: negative variance, invalid covariance");
    return std::sqrt(std::max(var, 0.0)) * std::sqrt(kTradingDaysPerYear);
}

double sharpe_ratio(double annual_return, double annual_volatility, double risk_free) {
    if (!(annual_volatility > 0.0)) throw NumericError("Sharpe ratio undefined for zero volatility");
    return (annual_return - risk_free) / annual_volatility;
}

CandidateCloud sample_candidates(const Eigen::VectorXd& expected_returns, const CovarianceMatrix& cov,
                                 std::size_t count, std::uint64_t seed, double risk_free,
                                 unsigned workers) {
    if (count < 1) throw NumericError("sample_candidates: count must be at least 1");
    const Eigen::Index n = expected_returns.size();
    if (cov.values.rows() != n || cov.values.cols() != n)
        throw NumericError("sample_candidates: covariance does not match expected returns");

    CandidateCloud cloud;
    cloud.tickers = cov.tickers;
    cloud.risk_free = risk_free;
    const auto rows = static_cast<Eigen::Index>(count);
    cloud.weights.resize(rows, n);

    // Variates are drawn sequentially so the stream is independent of threading.
    Rng rng(seed);
    for (Eigen::Index k = 0; k < rows; ++k) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = 1.0 - rng.uniform();  // (0, 1]
            cloud.weights(k, i) = u;
            sum += u;
        }
        cloud.weights.row(k) /= sum;
    }

    cloud.annual_return.resize(rows);
    cloud.annual_volatility.resize(rows);
    cloud.sharpe.resize(rows);

    auto score = [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index k = begin; k < end; ++k) {
            const Eigen::VectorXd w = cloud.weights.row(k).transpose();
            const double ret = portfolio_return(w, expected_returns);
            const double vol = portfolio_volatility(w, cov);
            cloud.annual_return(k) = ret;
            cloud.annual_volatility(k) = vol;
            cloud.sharpe(k) = sharpe_ratio(ret, vol, risk_free);
        }
    };

    workers = std::max(1u, workers);
    if (workers == 1 || rows < 2 * static_cast<Eigen::Index>(workers)) {
        score(0, rows);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            const Eigen::Index chunk = (rows + workers - 1) / workers;
            for (unsigned w = 0; w < workers; ++w) {
                const Eigen::Index begin = std::min<Eigen::Index>(rows, chunk * w);
                const Eigen::Index end = std::min<Eigen::Index>(rows, begin + chunk);
                pool.emplace_back([&, w, begin, end] {
                    try {
                        score(begin, end);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return cloud;
}

namespace {

SelectedPortfolio select_row(const CandidateCloud& cloud, Eigen::Index row) {
    SelectedPortfolio out;
    out.row = row;
    out.portfolio.tickers = cloud.tickers;
    out.portfolio.weights = cloud.weights.row(row).transpose();
    out.portfolio.method = Method::MVP;
    out.metrics = {cloud.annual_return(row), cloud.annual_volatility(row), cloud.sharpe(row)};
    return out;
}

}  // namespace

SelectedPortfolio max_sharpe_portfolio(const CandidateCloud& cloud) {
    if (cloud.size() == 0) throw NumericError("max_sharpe_portfolio: empty cloud");
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < cloud.size(); ++k) {
        const double s = cloud.sharpe(k), bs = cloud.sharpe(best);
        if (s > bs || (s == bs && cloud.annual_volatility(k) < cloud.annual_volatility(best))) best = k;
    }
    return select_row(cloud, best);
}

SelectedPortfolio min_volatility_portfolio(const CandidateCloud& cloud) {
    if (cloud.size() == 0) throw NumericError("min_volatility_portfolio: empty cloud");
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < cloud.size(); ++k) {
        const double v = cloud.annual_volatility(k), bv = cloud.annual_volatility(best);
        if (v < bv || (v == bv && cloud.sharpe(k) > cloud.sharpe(best))) best = k;
    }
    return select_row(cloud, best);
}

std::vector<FrontierPoint> frontier_scatter(const CandidateCloud& cloud) {
    std::vector<FrontierPoint> points;
    points.reserve(static_cast<std::size_t>(cloud.size()));
    for (Eigen::Index k = 0; k < cloud.size(); ++k)
        points.push_back({cloud.annual_volatility(k), cloud.annual_return(k), cloud.sharpe(k)});
    return points;
}

void write_frontier_csv(const std::vector<FrontierPoint>& points, std::ostream& out) {
    out << "volatility,return,sharpe\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.10f,%.10f,%.10f\n", p.volatility, p.annual_return, p.sharpe);
        out << buf;
    }
}

}  // namespace portfolio
