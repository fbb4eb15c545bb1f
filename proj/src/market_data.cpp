#include "portfolio/market_data.hpp"

#include "portfolio/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace portfolio {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

void check_labels(const std::vector<std::string>& tickers, const std::vector<std::string>& dates) {
    std::set<std::string> seen;
    for (const auto& t : tickers) {
        if (t.empty()) throw DataError("empty ticker name");
        if (!seen.insert(t).second) throw DataError("duplicate ticker '" + t + "'");
    }
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (!is_iso_date(dates[i])) throw DataError("invalid date '" + dates[i] + "'");
        if (i > 0 && dates[i] <= dates[i - 1])
            throw DataError("non-increasing dates at '" + dates[i] + "'");
    }
}

Eigen::Index find_column(const std::vector<std::string>& tickers, std::string_view ticker) {
    const auto it = std::find(tickers.begin(), tickers.end(), ticker);
    if (it == tickers.end()) throw DataError("unknown ticker '" + std::string(ticker) + "'");
    return static_cast<Eigen::Index>(it - tickers.begin());
}

}  // namespace

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [&](std::string_view part, auto& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!parse(s.substr(0, 4), y) || !parse(s.substr(5, 2), m) || !parse(s.substr(8, 2), d)) return false;
    return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

PricePanel::PricePanel(std::vector<std::string> tickers, std::vector<std::string> dates,
                       Eigen::MatrixXd prices)
    : tickers_(std::move(tickers)), dates_(std::move(dates)), prices_(std::move(prices)) {
    if (tickers_.empty()) throw DataError("price panel has no tickers");
    if (prices_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
        prices_.cols() != static_cast<Eigen::Index>(tickers_.size()))
        throw DataError("price matrix shape does not match dates x tickers");
    check_labels(tickers_, dates_);
    for (Eigen::Index t = 0; t < prices_.rows(); ++t) {
        for (Eigen::Index i = 0; i < prices_.cols(); ++i) {
            const double p = prices_(t, i);
            if (!std::isfinite(p)) throw DataError("non-finite price on " + dates_[t]);
            if (p <= 0.0)
                throw DataError("non-positive price for " + tickers_[i] + " on " + dates_[t]);
        }
    }
}

bool operator==(const PricePanel& a, const PricePanel& b) {
    return a.tickers_ == b.tickers_ && a.dates_ == b.dates_ && a.prices_.rows() == b.prices_.rows() &&
           a.prices_.cols() == b.prices_.cols() && a.prices_ == b.prices_;
}

Eigen::Index PricePanel::column(std::string_view ticker) const { return find_column(tickers_, ticker); }

PricePanel PricePanel::slice(std::string_view first, std::string_view last) const {
    const auto lo = std::lower_bound(dates_.begin(), dates_.end(), first);
    const auto hi = std::upper_bound(dates_.begin(), dates_.end(), last);
    const auto begin = static_cast<Eigen::Index>(lo - dates_.begin());
    const auto count = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(hi - lo));
    return PricePanel(tickers_, std::vector<std::string>(lo, std::max(lo, hi)),
                      prices_.middleRows(begin, count));
}

ReturnPanel::ReturnPanel(std::vector<std::string> tickers, std::vector<std::string> dates,
                         Eigen::MatrixXd returns, std::string base_date)
    : tickers_(std::move(tickers)),
      dates_(std::move(dates)),
      returns_(std::move(returns)),
      base_date_(std::move(base_date)) {
    if (returns_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
        returns_.cols() != static_cast<Eigen::Index>(tickers_.size()))
        throw DataError("return matrix shape does not match dates x tickers");
    if (!returns_.allFinite()) throw DataError("non-finite daily return");
    if ((returns_.array() <= -1.0).any()) throw DataError("daily return at or below -100%");
}

Eigen::Index ReturnPanel::column(std::string_view ticker) const { return find_column(tickers_, ticker); }

PricePanel build_price_panel(std::vector<std::string> tickers, std::vector<std::string> dates,
                             const std::vector<RawPriceRow>& rows) {
    if (rows.size() != dates.size()) throw DataError("row count does not match date count");
    const std::size_t n = tickers.size();

    std::vector<std::string> kept_dates;
    std::vector<std::vector<double>> kept;
    std::vector<std::optional<double>> last(n);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != n)
            throw DataError("row for " + dates[t] + " has " + std::to_string(rows[t].size()) +
                            " prices, expected " + std::to_string(n));
        bool complete = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[t][i]) last[i] = rows[t][i];
            complete = complete && last[i].has_value();
        }
        if (!complete) continue;  // leading gap
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) row[i] = *last[i];
        kept.push_back(std::move(row));
        kept_dates.push_back(dates[t]);
    }

    Eigen::MatrixXd prices(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < kept.size(); ++t)
        for (std::size_t i = 0; i < n; ++i) prices(t, i) = kept[t][i];
    return PricePanel(std::move(tickers), std::move(kept_dates), std::move(prices));
}

PricePanel parse_price_csv(std::istream& in, std::string_view source, Eigen::Index min_rows) {
    const std::string where(source);
    std::string line;
    if (!std::getline(in, line)) throw DataError(where + ": empty file");
    const auto header = split_commas(line);
    if (header.size() < 2 || header[0] != "date")
        throw DataError(where + ": malformed CSV header, expected 'date,<TICKER>...'");
    std::vector<std::string> tickers(header.begin() + 1, header.end());

    std::vector<std::string> dates;
    std::vector<RawPriceRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != header.size())
            throw DataError(where + ":" + std::to_string(line_no) + ": malformed CSV, expected " +
                            std::to_string(header.size()) + " fields");
        RawPriceRow row(tickers.size());
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const auto cell = cells[i];
            if (cell.empty()) continue;
            double value = 0.0;
            const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc{} || p != cell.data() + cell.size())
                throw DataError(where + ":" + std::to_string(line_no) + ": malformed CSV, bad number '" +
                                std::string(cell) + "'");
            if (!std::isfinite(value)) throw DataError(where + ":" + std::to_string(line_no) + ": non-finite price");
            if (value <= 0.0)
                throw DataError(where + ":" + std::to_string(line_no) + ": non-positive price for " +
                                tickers[i - 1]);
            row[i - 1] = value;
        }
        dates.emplace_back(cells[0]);
        rows.push_back(std::move(row));
    }

    for (std::size_t t = 0; t < dates.size(); ++t) {
        if (!is_iso_date(dates[t])) throw DataError(where + ": invalid date '" + dates[t] + "'");
        if (t > 0 && dates[t] <= dates[t - 1])
            throw DataError(where + ": non-increasing dates at '" + dates[t] + "'");
    }

    auto panel = build_price_panel(std::move(tickers), std::move(dates), rows);
    if (panel.rows() < min_rows)
        throw DataError(where + ": fewer than " + std::to_string(min_rows) + " rows after cleaning");
    return panel;
}

PricePanel load_price_csv(const std::filesystem::path& path, Eigen::Index min_rows) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file " + path.string());
    return parse_price_csv(in, path.string(), min_rows);
}

void write_price_csv(const PricePanel& panel, std::ostream& out) {
    out << "date";
    for (const auto& t : panel.tickers()) out << ',' << t;
    out << '\n';
    char buf[64];
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
        out << panel.dates()[t];
        for (Eigen::Index i = 0; i < panel.cols(); ++i) {
            const auto res = std::to_chars(buf, buf + sizeof buf, panel.prices()(t, i));
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
}

void write_price_csv(const PricePanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write price file " + path.string());
    write_price_csv(panel, out);
}

ReturnPanel daily_returns(const PricePanel& panel) {
    if (panel.rows() < 2) throw DataError("need at least 2 price rows to compute returns");
    const auto& p = panel.prices();
    const Eigen::Index t = p.rows();
    Eigen::MatrixXd r = (p.bottomRows(t - 1).array() / p.topRows(t - 1).array() - 1.0).matrix();
    std::vector<std::string> dates(panel.dates().begin() + 1, panel.dates().end());
    return ReturnPanel(panel.tickers(), std::move(dates), std::move(r), panel.dates().front());
}

StockStats stock_stats(const ReturnPanel& returns, std::string_view ticker) {
    const auto col = returns.column(ticker);
    if (returns.rows() < 2) throw DataError("need at least 2 return rows for statistics");
    const auto x = returns.returns().col(col);
    StockStats s;
    s.mean_daily_return = x.mean();
    const double ss = (x.array() - s.mean_daily_return).square().sum();
    s.daily_volatility = std::sqrt(ss / static_cast<double>(x.size() - 1));
    s.annual_return = s.mean_daily_return * kTradingDaysPerYear;
    s.annual_volatility = s.daily_volatility * std::sqrt(kTradingDaysPerYear);
    return s;
}

Eigen::VectorXd annual_returns(const ReturnPanel& returns) {
    if (returns.rows() < 1) throw DataError("no return rows");
    return returns.returns().colwise().mean().transpose() * kTradingDaysPerYear;
}

CovarianceMatrix covariance_matrix(const ReturnPanel& returns) {
    if (returns.rows() < 2) throw DataError("need at least 2 return rows for covariance");
    const Eigen::MatrixXd centered = returns.returns().rowwise() - returns.returns().colwise().mean();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(returns.rows() - 1);
    // Exact symmetry regardless of the product's evaluation order.
    cov = (0.5 * (cov + cov.transpose())).eval();
    return {returns.tickers(), std::move(cov)};
}

CorrelationMatrix correlation_matrix(const CovarianceMatrix& cov) {
    const auto n = cov.values.rows();
    Eigen::VectorXd sd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = cov.values(i, i);
        if (!(v > 0.0)) throw NumericError("zero-variance stock '" + cov.tickers[i] + "'");
        sd(i) = std::sqrt(v);
    }
    Eigen::MatrixXd rho(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rho(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = std::clamp(cov.values(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
            rho(i, j) = r;
            rho(j, i) = r;
        }
    }
    return {cov.tickers, std::move(rho)};
}

}  // namespace portfolio
