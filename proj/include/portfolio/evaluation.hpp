#pragma once

#include "portfolio/market_data.hpp"
#include "portfolio/portfolio.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace portfolio {

enum class Period { Train, Test };

std::string_view period_name(Period p);

struct CumulativePoint {
    std::string date;
    double factor = 1.0;
};

struct PerformanceReport {
    Method method = Method::MVP;
    Period period = Period::Train;
    double annual_return = 0.0;
    double annual_volatility = 0.0;
    double sharpe = 0.0;
    std::vector<CumulativePoint> cumulative;
};

/// r_p(t) = sum_i w_i r_i(t) with fixed weights. Tickers are matched by
/// name, so the portfolio may list them in any order.
Eigen::VectorXd portfolio_daily_returns(const Portfolio& weights, const ReturnPanel& returns);

/// Compounded factors: c(0) = 1, c(t) = c(t-1) (1 + r(t)). Output length is
/// input length + 1.
std::vector<double> cumulative_returns(const Eigen::VectorXd& daily);

/// Annual return = mean x 250, annual volatility = sample std x sqrt(250),
/// Sharpe = (return - rf) / volatility. Needs at least 2 return rows.
PerformanceReport evaluate(const Portfolio& weights, const ReturnPanel& returns, double risk_free,
                           Period period = Period::Train);

/// CSV `sector,method,period,annual_return_pct,annual_volatility_pct,sharpe`.
void write_report_csv(std::string_view sector, const std::vector<PerformanceReport>& reports,
                      std::ostream& out);

/// CSV `date,factor`.
void write_cumulative_csv(const PerformanceReport& report, std::ostream& out);

}  // namespace portfolio
