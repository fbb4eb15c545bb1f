#include "portfolio/evaluation.hpp"

#include "portfolio/errors.hpp"
#include "portfolio/mvp.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace portfolio {

std::string_view period_name(Period p) { return p == Period::Train ? "train" : "test"; }

Eigen::VectorXd portfolio_daily_returns(const Portfolio& weights, const ReturnPanel& returns) {
    if (static_cast<Eigen::Index>(weights.tickers.size()) != returns.cols() ||
        weights.weights.size() != returns.cols())
        throw DataError("portfolio tickers do not match the return panel");
    Eigen::VectorXd aligned = Eigen::VectorXd::Zero(returns.cols());
    std::vector<bool> filled(static_cast<std::size_t>(returns.cols()), false);
    for (std::size_t k = 0; k < weights.tickers.size(); ++k) {
        const auto col = returns.column(weights.tickers[k]);
        if (filled[static_cast<std::size_t>(col)])
            throw DataError("duplicate ticker '" + weights.tickers[k] + "' in portfolio");
        filled[static_cast<std::size_t>(col)] = true;
        aligned(col) = weights.weights(static_cast<Eigen::Index>(k));
    }
    return returns.returns() * aligned;
}

std::vector<double> cumulative_returns(const Eigen::VectorXd& daily) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(daily.size()) + 1);
    double c = 1.0;
    out.push_back(c);
    for (Eigen::Index t = 0; t < daily.size(); ++t) {
        const double r = daily(t);
        if (!std::isfinite(r) || r <= -1.0)
            throw NumericError("cumulative_returns: daily return at or below -100% at index " + std::to_string(t));
        c *= 1.0 + r;
        out.push_back(c);
    }
    return out;
}

PerformanceReport evaluate(const Portfolio& weights, const ReturnPanel& returns, double risk_free,
                           Period period) {
    const Eigen::VectorXd daily = portfolio_daily_returns(weights, returns);
    if (daily.size() < 2) throw DataError("need at least 2 return rows to evaluate a portfolio");

    PerformanceReport report;
    report.method = weights.method;
    report.period = period;
    const double mean = daily.mean();
    const double sd = std::sqrt((daily.array() - mean).square().sum() / static_cast<double>(daily.size() - 1));
    report.annual_return = mean * kTradingDaysPerYear;
    report.annual_volatility = sd * std::sqrt(kTradingDaysPerYear);
    report.sharpe = sharpe_ratio(report.annual_return, report.annual_volatility, risk_free);

    const auto factors = cumulative_returns(daily);
    report.cumulative.reserve(factors.size());
    report.cumulative.push_back({returns.base_date(), factors[0]});
    for (std::size_t t = 1; t < factors.size(); ++t) report.cumulative.push_back({returns.dates()[t - 1], factors[t]});
    return report;
}

void write_report_csv(std::string_view sector, const std::vector<PerformanceReport>& reports, std::ostream& out) {
    out << "sector,method,period,annual_return_pct,annual_volatility_pct,sharpe\n";
    char buf[160];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, ",%s,%s,%.2f,%.2f,%.4f\n", method_name(r.method).data(),
                      period_name(r.period).data(), 100.0 * r.annual_return, 100.0 * r.annual_volatility,
                      r.sharpe);
        out << sector << buf;
    }
}

void write_cumulative_csv(const PerformanceReport& report, std::ostream& out) {
    out << "date,factor\n";
    char buf[64];
    for (const auto& p : report.cumulative) {
        std::snprintf(buf, sizeof buf, ",%.10f\n", p.factor);
        out << p.date << buf;
    }
}

}  // namespace portfolio
