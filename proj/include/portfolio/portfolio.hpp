#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace portfolio {

enum class Method { MVP, HRP, ENC };

std::string_view method_name(Method m);
/// Parses "MVP", "HRP" or "ENC"; throws ConfigError otherwise.
Method parse_method(std::string_view s);

/// Long-only weight vector on the unit simplex.
struct Portfolio {
    std::vector<std::string> tickers;
    Eigen::VectorXd weights;
    Method method = Method::MVP;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// True when every weight is in [0, 1] and the sum is 1 within tolerance.
bool on_simplex(const Eigen::VectorXd& weights, double tol = kSimplexTolerance);

/// Throws NumericError unless the portfolio is well formed.
void check_portfolio(const Portfolio& p);

/// CSV `ticker,weight` with a fixed number of decimals.
void write_weights_csv(const Portfolio& p, std::ostream& out, int decimals = 12);

}  // namespace portfolio
