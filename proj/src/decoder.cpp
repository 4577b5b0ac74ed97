#include "rldec/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"

namespace rldec {

namespace {

// affine stages: dims[0] -> dims[1] -> ... -> dims.back()
std::vector<int> stage_dims(const DecoderConfig& cfg) {
    std::vector<int> dims{cfg.input_dim};
    if (cfg.kind == DecoderKind::Mlp)
        dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(cfg.classes);
    return dims;
}

int stage_offset(const std::vector<int>& dims, int stage) {
    int off = 0;
    for (int s = 0; s < stage; ++s) off += dims[s + 1] * dims[s] + dims[s + 1];
    return off;
}

int total_params(const std::vector<int>& dims) {
    return stage_offset(dims, static_cast<int>(dims.size()) - 1);
}

template <typename Vec>
auto weight_map(Vec& theta, const std::vector<int>& dims, int stage) {
    using Mat = std::conditional_t<std::is_const_v<Vec>, Eigen::Map<const Eigen::MatrixXd>,
                                   Eigen::Map<Eigen::MatrixXd>>;
    return Mat(theta.data() + stage_offset(dims, stage), dims[stage + 1], dims[stage]);
}

template <typename Vec>
auto bias_map(Vec& theta, const std::vector<int>& dims, int stage) {
    using V = std::conditional_t<std::is_const_v<Vec>, Eigen::Map<const Eigen::VectorXd>,
                                 Eigen::Map<Eigen::VectorXd>>;
    return V(theta.data() + stage_offset(dims, stage) + dims[stage + 1] * dims[stage],
             dims[stage + 1]);
}

Eigen::MatrixXd softmax_columns(Eigen::MatrixXd logits) {
    for (int c = 0; c < logits.cols(); ++c) {
        Eigen::VectorXd col = logits.col(c);
        double m = col.maxCoeff();
        Eigen::ArrayXd e = (col.array() - m).exp();
        logits.col(c) = e / e.sum();
    }
    return logits;
}

// forward through all stages; keeps activations when `keep` is given
Eigen::MatrixXd decoder_logits(const Decoder& dec, const Eigen::MatrixXd& x,
                               std::vector<Eigen::MatrixXd>* keep = nullptr) {
    const auto dims = stage_dims(dec.config);
    const int stages = static_cast<int>(dims.size()) - 1;
    Eigen::MatrixXd a = x;
    if (keep) keep->push_back(a);
    for (int s = 0; s < stages; ++s) {
        auto w = weight_map(std::as_const(dec.theta), dims, s);
        auto b = bias_map(std::as_const(dec.theta), dims, s);
        Eigen::MatrixXd z = w * a;
        z.colwise() += Eigen::VectorXd(b);
        if (s + 1 < stages) {
            a = z.array().tanh();
            if (keep) keep->push_back(a);
        } else {
            a = std::move(z);
        }
    }
    return a;
}

double loss_core(const Decoder& dec, const DecoderData& data, Eigen::VectorXd* grad) {
    const auto dims = stage_dims(dec.config);
    const int stages = static_cast<int>(dims.size()) - 1;
    const int n = static_cast<int>(data.labels.size());

    std::vector<Eigen::MatrixXd> acts;
    Eigen::MatrixXd logits = decoder_logits(dec, data.x, grad ? &acts : nullptr);
    Eigen::MatrixXd probs = softmax_columns(logits);

    double loss = 0;
    for (int i = 0; i < n; ++i) loss += -std::log(std::max(probs(data.labels[i], i), 1e-300));
    loss /= n;
    // L2 on weights only
    double reg = 0;
    for (int s = 0; s < stages; ++s)
        reg += weight_map(std::as_const(dec.theta), dims, s).squaredNorm();
    loss += 0.5 * dec.config.l2 * reg;

    if (grad) {
        Eigen::MatrixXd delta = probs;
        for (int i = 0; i < n; ++i) delta(data.labels[i], i) -= 1.0;
        delta /= n;
        for (int s = stages - 1; s >= 0; --s) {
            auto gw = weight_map(*grad, dims, s);
            auto gb = bias_map(*grad, dims, s);
            gw.noalias() += delta * acts[s].transpose();
            gw += dec.config.l2 * weight_map(std::as_const(dec.theta), dims, s);
            gb += delta.rowwise().sum();
            if (s > 0) {
                auto w = weight_map(std::as_const(dec.theta), dims, s);
                Eigen::MatrixXd da = w.transpose() * delta;
                delta = da.array() * (1.0 - acts[s].array().square());
            }
        }
    }
    return loss;
}

struct Adam {
    Eigen::VectorXd m, v;
    long step = 0;

    explicit Adam(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

    void update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
        ++step;
        m = 0.9 * m + 0.1 * grad;
        v = 0.999 * v + 0.001 * grad.cwiseProduct(grad);
        double mc = 1 - std::pow(0.9, static_cast<double>(step));
        double vc = 1 - std::pow(0.999, static_cast<double>(step));
        theta -= (lr / mc) * (m.array() / ((v.array() / vc).sqrt() + 1e-8)).matrix();
    }
};

} // namespace

double decoder_loss_and_grad(const Decoder& decoder, const DecoderData& data,
                             Eigen::VectorXd& grad) {
    return loss_core(decoder, data, &grad);
}

double decoder_loss(const Decoder& decoder, const DecoderData& data) {
    return loss_core(decoder, data, nullptr);
}

Decoder fit_decoder(const DecoderConfig& config, const DecoderData& data, Rng& rng) {
    if (config.classes < 2) throw std::invalid_argument("fit_decoder: need at least 2 classes");
    if (config.input_dim != data.x.rows())
        throw std::invalid_argument("fit_decoder: input dimension mismatch");
    if (data.labels.empty()) throw std::invalid_argument("fit_decoder: no training data");
    if (static_cast<int>(data.labels.size()) != data.x.cols())
        throw std::invalid_argument("fit_decoder: label count mismatch");
    if (!data.x.allFinite()) throw std::invalid_argument("fit_decoder: non-finite features");

    std::set<int> present;
    for (int label : data.labels) {
        if (label < 0 || label >= config.classes)
            throw std::invalid_argument("fit_decoder: label out of range");
        present.insert(label);
    }

    const auto dims = stage_dims(config);
    Decoder dec;
    dec.config = config;
    for (int c = 0; c < config.classes; ++c)
        if (!present.count(c)) dec.absent_classes.push_back(c);

    // init: uniform +-1/sqrt(fan_in) per stage (zeros for the linear model)
    dec.theta = Eigen::VectorXd::Zero(total_params(dims));
    if (config.kind == DecoderKind::Mlp) {
        for (std::size_t s = 0; s + 1 < dims.size(); ++s) {
            double scale = 1.0 / std::sqrt(static_cast<double>(dims[s]));
            auto w = weight_map(dec.theta, dims, static_cast<int>(s));
            for (int j = 0; j < w.size(); ++j) w.data()[j] = rng.uniform(-scale, scale);
        }
    }

    if (present.size() == 1) {
        // trivially constant problem; zero weights plus an output bias make
        // every prediction the one observed class
        dec.degenerate = true;
        dec.theta.setZero();
        bias_map(dec.theta, dims, static_cast<int>(dims.size()) - 2)[*present.begin()] = 1.0;
        return dec;
    }

    // internal holdout for best-epoch selection (train = val for tiny sets)
    const int n = static_cast<int>(data.labels.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    int n_val = n >= 50 ? n / 10 : 0;

    auto subset = [&](int from, int count) {
        DecoderData d;
        d.x.resize(data.x.rows(), count);
        d.labels.resize(count);
        for (int i = 0; i < count; ++i) {
            d.x.col(i) = data.x.col(order[from + i]);
            d.labels[i] = data.labels[order[from + i]];
        }
        return d;
    };
    DecoderData train_data = n_val > 0 ? subset(n_val, n - n_val) : data;
    DecoderData val_data = n_val > 0 ? subset(0, n_val) : data;

    Adam adam(dec.theta.size());
    Eigen::VectorXd grad(dec.theta.size());
    Eigen::VectorXd best_theta = dec.theta;
    double best_val = -1, best_val_loss = std::numeric_limits<double>::infinity();

    const int n_train = static_cast<int>(train_data.labels.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.kind == DecoderKind::Linear) {
            grad.setZero();
            double loss = loss_core(dec, train_data, &grad);
            if (!std::isfinite(loss)) throw std::runtime_error("fit_decoder: diverged");
            adam.update(dec.theta, grad, config.learning_rate);
        } else {
            std::vector<int> idx(n_train);
            std::iota(idx.begin(), idx.end(), 0);
            rng.shuffle(idx);
            for (int at = 0; at < n_train; at += config.batch_size) {
                int count = std::min(config.batch_size, n_train - at);
                DecoderData batch;
                batch.x.resize(train_data.x.rows(), count);
                batch.labels.resize(count);
                for (int i = 0; i < count; ++i) {
                    batch.x.col(i) = train_data.x.col(idx[at + i]);
                    batch.labels[i] = train_data.labels[idx[at + i]];
                }
                grad.setZero();
                double loss = loss_core(dec, batch, &grad);
                if (!std::isfinite(loss)) throw std::runtime_error("fit_decoder: diverged");
                adam.update(dec.theta, grad, config.mlp_learning_rate);
            }
        }

        double val_acc = decoder_accuracy(dec, val_data);
        double val_loss = decoder_loss(dec, val_data);
        if (val_acc > best_val || (val_acc == best_val && val_loss < best_val_loss)) {
            best_val = val_acc;
            best_val_loss = val_loss;
            best_theta = dec.theta;
        }
        dec.epochs_trained = epoch + 1;
        if (val_acc == 1.0 && config.kind == DecoderKind::Linear && epoch >= 20) break;
    }
    dec.theta = std::move(best_theta);
    return dec;
}

int predict(const Decoder& decoder, const Eigen::VectorXd& h) {
    if (h.size() != decoder.config.input_dim)
        throw std::invalid_argument("predict: dimension mismatch");
    Eigen::MatrixXd logits = decoder_logits(decoder, h);
    int best = 0;
    for (int c = 1; c < decoder.config.classes; ++c)
        if (logits(c, 0) > logits(best, 0)) best = c;  // ties keep the lowest index
    return best;
}

std::vector<int> predict_batch(const Decoder& decoder, const Eigen::MatrixXd& x) {
    if (x.rows() != decoder.config.input_dim)
        throw std::invalid_argument("predict_batch: dimension mismatch");
    Eigen::MatrixXd logits = decoder_logits(decoder, x);
    std::vector<int> out(x.cols());
    for (int i = 0; i < x.cols(); ++i) {
        int best = 0;
        for (int c = 1; c < decoder.config.classes; ++c)
            if (logits(c, i) > logits(best, i)) best = c;
        out[i] = best;
    }
    return out;
}

double decoder_accuracy(const Decoder& decoder, const DecoderData& data) {
    if (data.labels.empty()) throw std::invalid_argument("decoder_accuracy: empty input");
    std::vector<int> preds = predict_batch(decoder, data.x);
    int correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        correct += preds[i] == data.labels[i] ? 1 : 0;
    return static_cast<double>(correct) / preds.size();
}

void save_decoder(const std::filesystem::path& path, const Decoder& decoder) {
    nlohmann::json j;
    j["schema"] = 1;
    j["kind"] = decoder.config.kind == DecoderKind::Linear ? "linear" : "mlp";
    j["input_dim"] = decoder.config.input_dim;
    j["classes"] = decoder.config.classes;
    j["hidden"] = decoder.config.hidden;
    j["l2"] = decoder.config.l2;
    j["seed"] = decoder.seed;
    j["epochs_trained"] = decoder.epochs_trained;
    j["degenerate"] = decoder.degenerate;
    j["absent_classes"] = decoder.absent_classes;
    j["params"] =
        std::vector<double>(decoder.theta.data(), decoder.theta.data() + decoder.theta.size());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_decoder: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

Decoder load_decoder(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_decoder: cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    Decoder dec;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") dec.config.kind = DecoderKind::Linear;
    else if (kind == "mlp") dec.config.kind = DecoderKind::Mlp;
    else throw std::runtime_error("load_decoder: unknown kind " + kind);
    dec.config.input_dim = j.at("input_dim").get<int>();
    dec.config.classes = j.at("classes").get<int>();
    dec.config.hidden = j.at("hidden").get<std::vector<int>>();
    dec.config.l2 = j.at("l2").get<double>();
    dec.seed = j.at("seed").get<std::uint64_t>();
    dec.epochs_trained = j.at("epochs_trained").get<int>();
    dec.degenerate = j.at("degenerate").get<bool>();
    dec.absent_classes = j.at("absent_classes").get<std::vector<int>>();
    auto params = j.at("params").get<std::vector<double>>();
    dec.theta = Eigen::Map<const Eigen::VectorXd>(params.data(), params.size());
    const auto dims = stage_dims(dec.config);
    if (static_cast<int>(params.size()) != total_params(dims))
        throw std::runtime_error("load_decoder: parameter count mismatch");
    return dec;
}

} // namespace rldec
