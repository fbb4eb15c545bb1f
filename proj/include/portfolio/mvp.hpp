#pragma once

#include "portfolio/market_data.hpp"
#include "portfolio/portfolio.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace portfolio {

struct PortfolioMetrics {
    double annual_return = 0.0;
    double annual_volatility = 0.0;
    double sharpe = 0.0;
};

/// Monte-Carlo sample of long-only portfolios with their annual metrics.
/// Row k of `weights` is candidate k.
struct CandidateCloud {
    std::vector<std::string> tickers;
    Eigen::MatrixXd weights;
    Eigen::VectorXd annual_return;
    Eigen::VectorXd annual_volatility;
    Eigen::VectorXd sharpe;
    double risk_free = 0.0;

    Eigen::Index size() const { return weights.rows(); }
};

struct SelectedPortfolio {
    Portfolio portfolio;
    PortfolioMetrics metrics;
    Eigen::Index row = 0;
};

struct FrontierPoint {
    double volatility = 0.0;
    double annual_return = 0.0;
    double sharpe = 0.0;
};

/// Dot product of weights and per-stock annual returns.
double portfolio_return(const Eigen::VectorXd& weights, const Eigen::VectorXd& expected_returns);

/// Annualized volatility sqrt(w' S w) * sqrt(250) from a daily covariance.
double portfolio_volatility(const Eigen::VectorXd& weights, const CovarianceMatrix& cov);

double sharpe_ratio(double annual_return, double annual_volatility, double risk_free = 0.0);

/// Draws `count` weight vectors (N independent uniforms normalized by their
/// sum) from Rng(seed) in row order, then scores them. Scoring is split
/// across `workers` threads; the result does not depend on the worker count.
CandidateCloud sample_candidates(const Eigen::VectorXd& expected_returns, const CovarianceMatrix& cov,
                                 std::size_t count, std::uint64_t seed, double risk_free = 0.0,
                                 unsigned workers = 1);

/// Highest Sharpe; ties go to lower volatility, then lower row index.
SelectedPortfolio max_sharpe_portfolio(const CandidateCloud& cloud);

/// Lowest volatility; ties go to higher Sharpe, then lower row index.
SelectedPortfolio min_volatility_portfolio(const CandidateCloud& cloud);

std::vector<FrontierPoint> frontier_scatter(const CandidateCloud& cloud);

/// CSV `volatility,return,sharpe`, one row per candidate.
void write_frontier_csv(const std::vector<FrontierPoint>& points, std::ostream& out);

}  // namespace portfolio
