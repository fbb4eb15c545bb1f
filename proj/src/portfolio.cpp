#include "portfolio/portfolio.hpp"

#include "portfolio/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace portfolio {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::MVP: return "MVP";
        case Method::HRP: return "HRP";
        case Method::ENC: return "ENC";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    if (s == "MVP") return Method::MVP;
    if (s == "HRP") return Method::HRP;
    if (s == "ENC") return Method::ENC;
    throw ConfigError("unknown method '" + std::string(s) + "' (expected MVP, HRP or ENC)");
}

bool on_simplex(const Eigen::VectorXd& weights, double tol) {
    if (weights.size() == 0 || !weights.allFinite()) return false;
    if ((weights.array() < 0.0).any() || (weights.array() > 1.0 + tol).any()) return false;
    return std::abs(weights.sum() - 1.0) <= tol;
}

void check_portfolio(const Portfolio& p) {
    if (static_cast<Eigen::Index>(p.tickers.size()) != p.weights.size())
        throw NumericError("portfolio has " + std::to_string(p.weights.size()) + " weights for " +
                           std::to_string(p.tickers.size()) + " tickers");
    if (!on_simplex(p.weights))
        throw NumericError(std::string(method_name(p.method)) + " weights are not on the unit simplex");
}

void write_weights_csv(const Portfolio& p, std::ostream& out, int decimals) {
    out << "ticker,weight\n";
    char buf[64];
    for (std::size_t i = 0; i < p.tickers.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.*f", decimals, p.weights(static_cast<Eigen::Index>(i)));
        out << p.tickers[i] << ',' << buf << '\n';
    }
}

}  // namespace portfolio
