#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace portfolio {

inline constexpr double kTradingDaysPerYear = 250.0;

/// Aligned daily close prices, T rows (dates) by N columns (tickers).
///
/// Construction validates the invariants: strictly increasing ISO dates,
/// unique tickers, a T x N matrix, every price finite and > 0.
class PricePanel {
public:
    PricePanel(std::vector<std::string> tickers, std::vector<std::string> dates,
               Eigen::MatrixXd prices);

    const std::vector<std::string>& tickers() const { return tickers_; }
    const std::vector<std::string>& dates() const { return dates_; }
    const Eigen::MatrixXd& prices() const { return prices_; }

    Eigen::Index rows() const { return prices_.rows(); }
    Eigen::Index cols() const { return prices_.cols(); }

    /// Column index of a ticker; throws DataError if absent.
    Eigen::Index column(std::string_view ticker) const;

    /// Rows whose date lies in [first, last] (inclusive, ISO strings).
    PricePanel slice(std::string_view first, std::string_view last) const;

    /// Exact equality of labels and every price.
    friend bool operator==(const PricePanel& a, const PricePanel& b);

private:
    std::vector<std::string> tickers_;
    std::vector<std::string> dates_;
    Eigen::MatrixXd prices_;
};

/// Daily simple returns: row t holds prices[t+1] / prices[t] - 1, dated
/// by the later day. `base_date` is the first price date, which carries
/// no return of its own.
class ReturnPanel {
public:
    ReturnPanel(std::vector<std::string> tickers, std::vector<std::string> dates,
                Eigen::MatrixXd returns, std::string base_date = {});

    const std::vector<std::string>& tickers() const { return tickers_; }
    const std::vector<std::string>& dates() const { return dates_; }
    const Eigen::MatrixXd& returns() const { return returns_; }
    const std::string& base_date() const { return base_date_; }

    Eigen::Index rows() const { return returns_.rows(); }
    Eigen::Index cols() const { return returns_.cols(); }
    Eigen::Index column(std::string_view ticker) const;

private:
    std::vector<std::string> tickers_;
    std::vector<std::string> dates_;
    Eigen::MatrixXd returns_;
    std::string base_date_;
};

struct StockStats {
    double mean_daily_return = 0.0;
    double daily_volatility = 0.0;
    double annual_return = 0.0;
    double annual_volatility = 0.0;
};

/// Sample covariance of daily returns (fraction^2 per day).
struct CovarianceMatrix {
    std::vector<std::string> tickers;
    Eigen::MatrixXd values;
};

struct CorrelationMatrix {
    std::vector<std::string> tickers;
    Eigen::MatrixXd values;
};

/// One CSV row before gap handling; std::nullopt marks an empty cell.
using RawPriceRow = std::vector<std::optional<double>>;

/// Applies the gap policy and validates. Missing cells are forward-filled
/// from the previous row; leading rows that still contain a gap are dropped.
PricePanel build_price_panel(std::vector<std::string> tickers, std::vector<std::string> dates,
                             const std::vector<RawPriceRow>& rows);

/// Reads `date,<TICKER_1>,...,<TICKER_N>` CSV. Requires at least
/// `min_rows` rows after cleaning. Throws DataError on any violation.
PricePanel load_price_csv(const std::filesystem::path& path, Eigen::Index min_rows = 3);
PricePanel parse_price_csv(std::istream& in, std::string_view source = "<stream>", Eigen::Index min_rows = 3);

/// Writes the CSV format read by load_price_csv. Prices use the shortest
/// round-trip decimal representation, so write + load is exact.
void write_price_csv(const PricePanel& panel, std::ostream& out);
void write_price_csv(const PricePanel& panel, const std::filesystem::path& path);

ReturnPanel daily_returns(const PricePanel& panel);

StockStats stock_stats(const ReturnPanel& returns, std::string_view ticker);

/// Per-stock annual returns (mean daily return x 250), in ticker order.
Eigen::VectorXd annual_returns(const ReturnPanel& returns);

CovarianceMatrix covariance_matrix(const ReturnPanel& returns);

/// Throws NumericError naming the ticker when a variance is not positive.
CorrelationMatrix correlation_matrix(const CovarianceMatrix& cov);

/// True for a valid calendar date written as YYYY-MM-DD.
bool is_iso_date(std::string_view s);

}  // namespace portfolio
