#include "portfolio/autoencoder.hpp"

#include "portfolio/errors.hpp"
#include "portfolio/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace portfolio {

void validate(const AutoencoderConfig& c) {
    if (c.input_dim < 1) throw ConfigError("autoencoder.input_dim must be positive");
    if (c.code_dim < 1 || c.code_dim >= c.input_dim)
        throw ConfigError("autoencoder.code_dim must be in [1, input_dim)");
    if (c.epochs < 1) throw ConfigError("autoencoder.epochs must be at least 1");
    if (c.batch_size < 1) throw ConfigError("autoencoder.batch_size must be at least 1");
    if (!(c.learning_rate > 0.0)) throw ConfigError("autoencoder.learning_rate must be positive");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) throw ConfigError("autoencoder.beta1 must be in [0, 1)");
    if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) throw ConfigError("autoencoder.beta2 must be in [0, 1)");
    if (!(c.epsilon > 0.0)) throw ConfigError("autoencoder.epsilon must be positive");
}

AutoencoderParams AutoencoderParams::zeros_like(const AutoencoderParams& p) {
    return {Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols()), Eigen::VectorXd::Zero(p.b1.size()),
            Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols()), Eigen::VectorXd::Zero(p.b2.size())};
}

namespace {

template <typename M>
bool same(const M& a, const M& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

bool operator==(const AutoencoderParams& a, const AutoencoderParams& b) {
    return same(a.w1, b.w1) && same(a.b1, b.b1) && same(a.w2, b.w2) && same(a.b2, b.b2);
}

bool AutoencoderParams::all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

ScaledPrices scale_prices(const PricePanel& panel) {
    const auto& p = panel.prices();
    if (p.rows() < 1) throw DataError("cannot scale an empty price panel");
    ScaledPrices s;
    s.mins = p.colwise().minCoeff().transpose();
    s.maxs = p.colwise().maxCoeff().transpose();
    for (Eigen::Index i = 0; i < p.cols(); ++i)
        if (!(s.maxs(i) > s.mins(i)))
            throw DataError("constant price series for '" + panel.tickers()[i] + "' cannot be scaled");
    const Eigen::RowVectorXd lo = s.mins.transpose();
    const Eigen::RowVectorXd range = (s.maxs - s.mins).transpose();
    s.values = (p.rowwise() - lo).array().rowwise() / range.array();
    return s;
}

AutoencoderModel init_model(const AutoencoderConfig& config) {
    validate(config);
    Rng rng(derive_seed(config.seed, "autoencoder.init"));
    const auto n = config.input_dim, m = config.code_dim;
    const double s = std::sqrt(6.0 / static_cast<double>(n + m));
    AutoencoderModel model{Eigen::MatrixXd(m, n), Eigen::VectorXd::Zero(m), Eigen::MatrixXd(n, m),
                           Eigen::VectorXd::Zero(n)};
    // Both layers share fan_in + fan_out, hence the same bound.
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < m; ++r) model.w1(r, c) = rng.uniform(-s, s);
    for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r < n; ++r) model.w2(r, c) = rng.uniform(-s, s);
    return model;
}

ForwardPass forward(const AutoencoderModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim()) throw NumericError("forward: input dimension mismatch");
    ForwardPass out;
    out.code = (model.w1 * x + model.b1).cwiseMax(0.0);
    out.reconstruction = model.w2 * out.code + model.b2;
    return out;
}

double mse_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& reconstruction) {
    if (x.size() != reconstruction.size() || x.size() == 0)
        throw NumericError("mse_loss: dimension mismatch");
    return (x - reconstruction).squaredNorm() / static_cast<double>(x.size());
}

namespace {

struct BatchActivations {
    Eigen::MatrixXd pre;    // B x m
    Eigen::MatrixXd code;   // B x m
    Eigen::MatrixXd recon;  // B x n
};

BatchActivations run_batch(const AutoencoderModel& model, const Eigen::MatrixXd& batch) {
    if (batch.rows() < 1) throw NumericError("empty batch");
    if (batch.cols() != model.input_dim()) throw NumericError("batch dimension mismatch");
    BatchActivations a;
    a.pre = (batch * model.w1.transpose()).rowwise() + model.b1.transpose();
    a.code = a.pre.cwiseMax(0.0);
    a.recon = (a.code * model.w2.transpose()).rowwise() + model.b2.transpose();
    return a;
}

}  // namespace

double batch_loss(const AutoencoderModel& model, const Eigen::MatrixXd& batch) {
    const auto a = run_batch(model, batch);
    return (a.recon - batch).squaredNorm() / static_cast<double>(batch.size());
}

Gradients backward(const AutoencoderModel& model, const Eigen::MatrixXd& batch) {
    const auto a = run_batch(model, batch);
    const Eigen::MatrixXd d_recon = 2.0 * (a.recon - batch) / static_cast<double>(batch.size());
    Gradients g;
    g.w2 = d_recon.transpose() * a.code;
    g.b2 = d_recon.colwise().sum().transpose();
    const Eigen::MatrixXd d_pre =
        ((d_recon * model.w2).array() * (a.pre.array() > 0.0).cast<double>()).matrix();
    g.w1 = d_pre.transpose() * batch;
    g.b1 = d_pre.colwise().sum().transpose();
    return g;
}

namespace {

struct AdamScalars {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double correction1;  // 1 - beta1^t
    double correction2;  // 1 - beta2^t
};

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const AdamScalars& a) {
    m = a.beta1 * m + (1.0 - a.beta1) * grad;
    v = a.beta2 * v + (1.0 - a.beta2) * grad.cwiseProduct(grad);
    param.array() -= a.learning_rate * (m.array() / a.correction1) /
                     ((v.array() / a.correction2).sqrt() + a.epsilon);
}

}  // namespace

AdamUpdate adam_step(const AutoencoderModel& model, const Gradients& grads, const AdamState& state,
                     long step, const AutoencoderConfig& config) {
    if (step < 1) throw NumericError("adam_step: step index must be >= 1");
    AdamUpdate u{model, state};
    if (u.state.first_moment.w1.size() == 0) u.state.first_moment = AutoencoderParams::zeros_like(model);
    if (u.state.second_moment.w1.size() == 0) u.state.second_moment = AutoencoderParams::zeros_like(model);

    const double t = static_cast<double>(step);
    const AdamScalars a{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                        1.0 - std::pow(config.beta1, t), 1.0 - std::pow(config.beta2, t)};
    auto& m = u.state.first_moment;
    auto& v = u.state.second_moment;
    adam_update(u.model.w1, grads.w1, m.w1, v.w1, a);
    adam_update(u.model.b1, grads.b1, m.b1, v.b1, a);
    adam_update(u.model.w2, grads.w2, m.w2, v.w2, a);
    adam_update(u.model.b2, grads.b2, m.b2, v.b2, a);
    return u;
}

TrainingResult train_scaled(const Eigen::MatrixXd& scaled, const AutoencoderConfig& config) {
    validate(config);
    if (scaled.cols() != config.input_dim)
        throw ConfigError("autoencoder.input_dim (" + std::to_string(config.input_dim) +
                          ") does not match the number of stocks (" + std::to_string(scaled.cols()) + ")");
    if (scaled.rows() < 1) throw DataError("no training rows for the autoencoder");

    TrainingResult result;
    result.model = init_model(config);
    result.trace.reserve(static_cast<std::size_t>(config.epochs));
    AdamState state{AutoencoderParams::zeros_like(result.model), AutoencoderParams::zeros_like(result.model)};
    Rng shuffle(derive_seed(config.seed, "autoencoder.shuffle"));

    const auto rows = static_cast<std::size_t>(scaled.rows());
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    Eigen::MatrixXd batch;
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = shuffle.permutation(rows);
        double weighted = 0.0;
        for (std::size_t start = 0; start < rows; start += batch_size) {
            const std::size_t len = std::min(batch_size, rows - start);
            batch.resize(static_cast<Eigen::Index>(len), scaled.cols());
            for (std::size_t k = 0; k < len; ++k)
                batch.row(static_cast<Eigen::Index>(k)) = scaled.row(static_cast<Eigen::Index>(order[start + k]));
            weighted += batch_loss(result.model, batch) * static_cast<double>(len);
            auto update = adam_step(result.model, backward(result.model, batch), state, ++step, config);
            result.model = std::move(update.model);
            state = std::move(update.state);
        }
        const double loss = weighted / static_cast<double>(rows);
        if (!std::isfinite(loss) || !result.model.all_finite())
            throw NumericError("autoencoder training diverged at epoch " + std::to_string(epoch + 1));
        result.trace.push_back(loss);
    }
    return result;
}

TrainingResult train(const PricePanel& panel, const AutoencoderConfig& config) {
    auto scaled = scale_prices(panel);
    auto result = train_scaled(scaled.values, config);
    result.scaled = std::move(scaled);
    return result;
}

Portfolio extract_weights(const AutoencoderModel& model, const Eigen::MatrixXd& scaled,
                          const std::vector<std::string>& tickers) {
    if (static_cast<Eigen::Index>(tickers.size()) != model.input_dim())
        throw NumericError("extract_weights: ticker count does not match the model");
    const auto a = run_batch(model, scaled);
    const Eigen::VectorXd s = a.recon.colwise().mean().transpose().cwiseMax(0.0);
    const double total = s.sum();
    if (!(total > 0.0)) throw NumericError("autoencoder output features are all zero; no weights");
    return {tickers, s / total, Method::ENC};
}

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void write_layer(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out << name << ',' << r << ',' << c << ',' << shortest(m(r, c)) << '\n';
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
    T value{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DataError(std::string("model file: bad ") + what + " '" + s + "'");
    return value;
}

}  // namespace

void write_model(const AutoencoderModel& model, const AutoencoderConfig& config, std::ostream& out) {
    out << "# autoencoder input_dim=" << model.input_dim() << " code_dim=" << model.code_dim()
        << " epochs=" << config.epochs << " batch_size=" << config.batch_size
        << " learning_rate=" << shortest(config.learning_rate) << " beta1=" << shortest(config.beta1)
        << " beta2=" << shortest(config.beta2) << " epsilon=" << shortest(config.epsilon)
        << " seed=" << config.seed << '\n';
    out << "layer,row,col,value\n";
    write_layer(out, "W1", model.w1);
    write_layer(out, "b1", model.b1);
    write_layer(out, "W2", model.w2);
    write_layer(out, "b2", model.b2);
}

LoadedModel read_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# autoencoder", 0) != 0)
        throw DataError("model file: missing '# autoencoder' header");
    std::map<std::string, std::string> kv;
    std::istringstream hs(line.substr(13));
    std::string token;
    while (hs >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw DataError("model file: bad header token '" + token + "'");
        kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    auto get = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw DataError(std::string("model file: header lacks ") + key);
        return it->second;
    };
    LoadedModel lm;
    auto& c = lm.config;
    c.input_dim = parse_number<Eigen::Index>(get("input_dim"), "input_dim");
    c.code_dim = parse_number<Eigen::Index>(get("code_dim"), "code_dim");
    c.epochs = parse_number<int>(get("epochs"), "epochs");
    c.batch_size = parse_number<int>(get("batch_size"), "batch_size");
    c.learning_rate = parse_number<double>(get("learning_rate"), "learning_rate");
    c.beta1 = parse_number<double>(get("beta1"), "beta1");
    c.beta2 = parse_number<double>(get("beta2"), "beta2");
    c.epsilon = parse_number<double>(get("epsilon"), "epsilon");
    c.seed = parse_number<std::uint64_t>(get("seed"), "seed");
    if (c.input_dim < 1 || c.code_dim < 1) throw DataError("model file: bad dimensions");

    const auto n = c.input_dim, m = c.code_dim;
    auto& model = lm.model;
    model = {Eigen::MatrixXd::Zero(m, n), Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(n, m),
             Eigen::VectorXd::Zero(n)};
    std::map<std::string, Eigen::MatrixXd*> matrices{{"W1", &model.w1}, {"W2", &model.w2}};
    std::map<std::string, Eigen::VectorXd*> vectors{{"b1", &model.b1}, {"b2", &model.b2}};

    if (!std::getline(in, line) || line != "layer,row,col,value")
        throw DataError("model file: missing column header");
    const Eigen::Index expected = 2 * n * m + n + m;
    Eigen::Index seen = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string layer, row, col, value;
        if (!std::getline(ls, layer, ',') || !std::getline(ls, row, ',') || !std::getline(ls, col, ',') ||
            !std::getline(ls, value))
            throw DataError("model file: malformed line '" + line + "'");
        const auto r = parse_number<Eigen::Index>(row, "row");
        const auto k = parse_number<Eigen::Index>(col, "col");
        const auto v = parse_number<double>(value, "value");
        if (auto it = matrices.find(layer); it != matrices.end()) {
            if (r < 0 || k < 0 || r >= it->second->rows() || k >= it->second->cols())
                throw DataError("model file: index out of range in '" + line + "'");
            (*it->second)(r, k) = v;
        } else if (auto jt = vectors.find(layer); jt != vectors.end()) {
            if (r < 0 || r >= jt->second->size() || k != 0)
                throw DataError("model file: index out of range in '" + line + "'");
            (*jt->second)(r) = v;
        } else {
            throw DataError("model file: unknown layer '" + layer + "'");
        }
        ++seen;
    }
    if (seen != expected) throw DataError("model file: expected " + std::to_string(expected) + " values");
    return lm;
}

void write_trace_csv(const std::vector<double>& trace, std::ostream& out) {
    out << "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < trace.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.10e\n", e + 1, trace[e]);
        out << buf;
    }
}

}  // namespace portfolio
