#pragma once

#include "portfolio/market_data.hpp"
#include "portfolio/portfolio.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace portfolio {

struct AutoencoderConfig {
    Eigen::Index input_dim = 10;
    Eigen::Index code_dim = 5;
    int epochs = 500;
    int batch_size = 10;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

/// Throws ConfigError on code_dim >= input_dim, non-positive epochs or
/// batch size, or out-of-range Adam settings.
void validate(const AutoencoderConfig& config);

/// Single-hidden-layer autoencoder parameters.
///   code           = max(0, w1 x + b1)     w1: code_dim x input_dim
///   reconstruction = w2 code + b2          w2: input_dim x code_dim
/// The same layout carries gradients and Adam moments.
struct AutoencoderParams {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;

    static AutoencoderParams zeros_like(const AutoencoderParams& p);
    Eigen::Index input_dim() const { return w1.cols(); }
    Eigen::Index code_dim() const { return w1.rows(); }
    bool all_finite() const;

    /// Exact, element-wise.
    friend bool operator==(const AutoencoderParams& a, const AutoencoderParams& b);
};

using AutoencoderModel = AutoencoderParams;
using Gradients = AutoencoderParams;

struct AdamState {
    AutoencoderParams first_moment;
    AutoencoderParams second_moment;
};

struct AdamUpdate {
    AutoencoderModel model;
    AdamState state;
};

/// Per-stock min-max scaled prices. Rows are days, columns stocks.
struct ScaledPrices {
    Eigen::MatrixXd values;
    Eigen::VectorXd mins;
    Eigen::VectorXd maxs;
};

struct ForwardPass {
    Eigen::VectorXd code;
    Eigen::VectorXd reconstruction;
};

struct TrainingResult {
    AutoencoderModel model;
    std::vector<double> trace;  // mean MSE per epoch
    ScaledPrices scaled;
};

/// x' = (x - min) / (max - min) per stock. Throws DataError on a constant stock.
ScaledPrices scale_prices(const PricePanel& panel);

/// Glorot-uniform weights, zero biases, drawn from the config seed.
AutoencoderModel init_model(const AutoencoderConfig& config);

ForwardPass forward(const AutoencoderModel& model, const Eigen::VectorXd& x);

/// Mean over components of the squared error.
double mse_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& reconstruction);

/// Mean MSE over the rows of `batch`.
double batch_loss(const AutoencoderModel& model, const Eigen::MatrixXd& batch);

/// Exact gradient of batch_loss. The ReLU derivative at 0 is taken as 0.
Gradients backward(const AutoencoderModel& model, const Eigen::MatrixXd& batch);

/// Adam with bias correction; `step` is the 1-based update count.
AdamUpdate adam_step(const AutoencoderModel& model, const Gradients& grads, const AdamState& state,
                     long step, const AutoencoderConfig& config);

/// Mini-batch Adam on already-scaled rows. Each epoch visits the rows in a
/// fresh seeded permutation, batches of batch_size (the last may be short).
/// The trace entry is the sample-weighted mean of the batch losses.
TrainingResult train_scaled(const Eigen::MatrixXd& scaled, const AutoencoderConfig& config);

/// Scales the panel, then trains. The config's input_dim must equal the
/// panel's column count.
TrainingResult train(const PricePanel& panel, const AutoencoderConfig& config);

/// s_i = mean reconstruction of stock i over the rows, negatives clamped to
/// 0, normalized to sum to 1. Throws NumericError when every s_i is 0.
Portfolio extract_weights(const AutoencoderModel& model, const Eigen::MatrixXd& scaled,
                          const std::vector<std::string>& tickers);

/// Text format: one `# autoencoder key=value ...` header line, then the CSV
/// `layer,row,col,value` with shortest round-trip values.
void write_model(const AutoencoderModel& model, const AutoencoderConfig& config, std::ostream& out);

struct LoadedModel {
    AutoencoderConfig config;
    AutoencoderModel model;
};

LoadedModel read_model(std::istream& in);

/// CSV `epoch,loss` with 1-based epochs.
void write_trace_csv(const std::vector<double>& trace, std::ostream& out);

}  // namespace portfolio
